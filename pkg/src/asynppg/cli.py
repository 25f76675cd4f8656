"""Command-line entry point: ``asynppg {gen,oracle,run,validate,rate}``."""

import argparse
import json
import logging
import sys

from .config import parse_config
from .engine import read_boundary_rows
from .errors import AsynPPGError
from .harness import build_problem, build_schedule, output_root, report_rate, run_experiment
from .params import make_params


def _spec(args):
    over = {"seed_schedule": args.seed_schedule, "seed_data": args.seed_data, "debug": args.debug}
    return parse_config(args.config, over)


def cmd_gen(args):
    spec = _spec(args)
    spec.oracle = False
    problem, _ = build_problem(spec)
    out = output_root(args.out or spec.out or "runs/instance")
    out.mkdir(parents=True, exist_ok=True)
    (out / "instance.json").write_text(problem.to_json())
    print(out / "instance.json")
    return 0


def cmd_oracle(args):
    spec = _spec(args)
    _, ref = build_problem(spec)
    if ref is None:
        print("no reference available for this problem", file=sys.stderr)
        return 1
    out = output_root(args.out or spec.out or "runs/reference")
    out.mkdir(parents=True, exist_ok=True)
    (out / "reference.json").write_text(ref.to_json())
    print(json.dumps({"F_star": ref.F_star, "residuals": ref.residuals}, sort_keys=True))
    return 0


def cmd_run(args):
    spec = _spec(args)
    res = run_experiment(spec, args.out)
    for m in res.messages[:20]:
        print(m, file=sys.stderr)
    if res.rate is not None:
        print(json.dumps(res.rate.summary, sort_keys=True))
    print(f"bundle: {res.out}  exit={res.exit_code}")
    return res.exit_code


def cmd_validate(args):
    spec = _spec(args)
    spec.oracle = False
    problem, _ = build_problem(spec)
    sched = build_schedule(spec, problem.n_agents)
    rep = sched.validate()
    for v in rep.violations:
        print(v)
    prm = make_params(problem, spec.H, spec.D, spec.alpha1, spec.beta, spec.Q)
    print(json.dumps({"schedule_ok": rep.ok, "beta": prm.beta, "beta_max": prm.beta_cap,
                      "Pi": prm.Pi, "norm_A": prm.normA, "Lg": prm.Lg, "mu": prm.mu},
                     sort_keys=True))
    return 0 if rep.ok else 1


def cmd_rate(args):
    out = output_root(args.out)
    with open(out / "effective_config.json") as fh:
        cfg = json.load(fh)
    with open(out / "reference.json") as fh:
        F_star = json.load(fh)["F_star"]
    cert = None
    if (out / "certificate.json").exists():
        from .certificate import BoundCertificate
        with open(out / "certificate.json") as fh:
            c = json.load(fh)
        cert = BoundCertificate(c["delta1"], c["delta2"], c["F_star"], c["lambda_star_norm"],
                                c["Xi1"], c["beta"], c["alpha1"], c.get("terms", {}))
    slots, F, nAx = read_boundary_rows(out / "trace.csv")
    # boundary rows start at t_1; pad index 0 with slot-0 history
    F = [F[0]] + list(F)
    nAx = [nAx[0]] + list(nAx)
    eps = args.epsilon if args.epsilon is not None else cfg.get("epsilon")
    rep = report_rate(F, nAx, F_star, cfg["alpha1"], cert, cfg["rate_window"], eps)
    (out / "rate.csv").write_text(rep.to_csv())
    print(json.dumps(rep.summary, sort_keys=True))
    return 1 if rep.summary.get("rate_ok") is False else 0


def build_parser():
    ap = argparse.ArgumentParser(prog="asynppg", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, fn, needs_cfg in (("gen", cmd_gen, True), ("oracle", cmd_oracle, True),
                                ("run", cmd_run, True), ("validate", cmd_validate, True),
                                ("rate", cmd_rate, False)):
        p = sub.add_parser(name)
        p.set_defaults(func=fn)
        p.add_argument("--config", required=needs_cfg, help="JSON run specification")
        p.add_argument("--out", help="output directory (relative to $ASYNPPG_OUT if set)")
        p.add_argument("--seed-schedule", type=int, dest="seed_schedule")
        p.add_argument("--seed-data", type=int, dest="seed_data")
        p.add_argument("--debug", choices=["off", "identities", "full"])
        if name == "rate":
            p.add_argument("--epsilon", type=float)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "rate" and not args.out:
        print("rate needs --out pointing at a run bundle", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except AsynPPGError as e:
        field = getattr(e, "field", None)
        where = f" [{field}]" if field else ""
        print(f"error{where}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
