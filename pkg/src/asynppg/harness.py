"""Experiment orchestration: build, solve, run, certify, report."""

from dataclasses import dataclass, field
import json
import logging
import math
import os
from pathlib import Path

import numpy as np

from .certificate import check_bounds, compute_bound_certificate
from .engine import EngineConfig, run, write_trace_csv
from .oracle import SaddleReference, lasso_reference, market_kkt_solve
from .params import make_params
from .problem import load_problem
from .problems import GraphSpec, gen_lasso, market_instance
from .schedule import make_schedule

log = logging.getLogger(__name__)


def output_root(out=None):
    """Resolve an output directory, honoring ``ASYNPPG_OUT`` for relative paths."""
    root = os.environ.get("ASYNPPG_OUT")
    if out is None:
        out = "runs"
    p = Path(out)
    if root and not p.is_absolute():
        p = Path(root) / p
    return p


def build_problem(spec):
    """Instance for ``spec.problem`` plus, when available, its saddle reference."""
    pr = spec.problem
    kind = pr["kind"]
    if kind == "market":
        m, p = market_instance()
        return p, (market_kkt_solve(m) if spec.oracle else None)
    if kind == "lasso":
        graph = GraphSpec(pr["n_agents"], pr["edges"]) if "edges" in pr else None
        lasso, p = gen_lasso(spec.seed_data, graph, pr["dim"], pr["rho"], pr["noise_var"],
                             pr["sparsity"])
        return p, (lasso_reference(lasso, p) if spec.oracle else None)
    p = load_problem(pr["path"])
    ref = None
    if spec.oracle and "reference" in pr:
        with open(pr["reference"]) as fh:
            ref = SaddleReference.from_dict(json.load(fh))
    return p, ref


def build_schedule(spec, n_agents):
    return make_schedule(n_agents, spec.H, spec.D, spec.K, seed=spec.seed_schedule,
                         delay_mode=spec.delay_mode, fractions=spec.fractions,
                         fixed=spec.fixed, delays=spec.delays)


@dataclass
class RateReport:
    K: np.ndarray
    gamma: np.ndarray
    normAx: np.ndarray
    obj_rhs: np.ndarray = None
    res_rhs: np.ndarray = None
    window: tuple = (100, 1000)
    summary: dict = field(default_factory=dict)

    def to_csv(self):
        rows = ["K,gamma,normAx,K_gamma,K_normAx,obj_rhs,res_rhs"]
        for j, k in enumerate(self.K):
            o = "" if self.obj_rhs is None else repr(float(self.obj_rhs[j]))
            r = "" if self.res_rhs is None else repr(float(self.res_rhs[j]))
            rows.append(",".join([str(int(k)), repr(float(self.gamma[j])), repr(float(self.normAx[j])),
                                  repr(float(k * self.gamma[j])), repr(float(k * self.normAx[j])), o, r]))
        return "\n".join(rows) + "\n"


def theorem_K_threshold(epsilon, alpha1):
    """Smallest ``K`` with ``K >= 1/epsilon - 1/alpha1`` (at least 1)."""
    return max(1, math.ceil(1.0 / epsilon - 1.0 / alpha1 - 1e-12))


def report_rate(F, normAx, F_star, alpha1, cert=None, window=(100, 1000), epsilon=None):
    """Rate table over slot boundaries ``x(t_K)``, ``K = 1..len(F)-1``.

    ``F[K]`` and ``normAx[K]`` are values at ``t_K`` (index 0 is slot-0
    history).  With a certificate the per-row bound columns hold
    ``K * Delta * alpha(t_K - 1)``, and the summary compares the window
    maxima of ``K*gamma`` and ``K*||Ax||`` with ``Delta*(1+alpha1)``.
    """
    F = np.asarray(F, dtype=float)
    normAx = np.asarray(normAx, dtype=float)
    K = np.arange(1, F.size)
    gamma = np.abs(F[1:] - F_star)
    nA = normAx[1:]
    alpha = alpha1 / ((K - 1) * alpha1 + 1.0)
    rep = RateReport(K, gamma, nA, window=tuple(window))
    lo, hi = window
    sel = (K >= lo) & (K <= hi)
    s = rep.summary
    # a window past the end of the run is reported as not evaluated
    s["K_range"] = [int(lo), int(min(hi, K[-1]))] if sel.any() else None
    s["max_K_gamma"] = float(np.max(K[sel] * gamma[sel])) if sel.any() else None
    s["max_K_normAx"] = float(np.max(K[sel] * nA[sel])) if sel.any() else None
    if cert is not None:
        rep.obj_rhs = K * cert.objective_constant * alpha
        rep.res_rhs = K * cert.delta2 * alpha
        s["obj_cap"] = cert.objective_constant * (1.0 + alpha1)
        s["res_cap"] = cert.delta2 * (1.0 + alpha1)
        s["rate_ok"] = None if not sel.any() else bool(
            s["max_K_gamma"] <= s["obj_cap"] and s["max_K_normAx"] <= s["res_cap"])
    if epsilon is not None:
        s["epsilon"] = epsilon
        s["K_theorem"] = theorem_K_threshold(epsilon, alpha1)
        # observed: first boundary t_{K+1} where both errors sit at the epsilon-scaled bound level
        a, b = (cert.objective_constant, cert.delta2) if cert is not None else (1.0, 1.0)
        hit = np.flatnonzero((gamma[1:] <= a * epsilon) & (nA[1:] <= b * epsilon))
        s["K_observed"] = int(K[hit[0]]) if hit.size else None
    return rep


@dataclass
class RunResult:
    exit_code: int
    out: Path
    trace: object
    reference: object
    certificate: object
    bounds: object
    rate: RateReport
    messages: list


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def run_experiment(spec, out=None):
    """Run ``spec`` end to end and write the artifact bundle.

    Files: ``instance.json``, ``schedule.json``, ``trace.csv``,
    ``reference.json`` and ``certificate.json`` (when a saddle reference is
    available), ``rate.csv`` and ``effective_config.json`` (the resolved
    spec, rerunnable as is).  The exit code is 0 iff schedule validation,
    identity checks and the bound certificate all come back clean.
    """
    out = output_root(out or spec.out or f"runs/{spec.problem['kind']}")
    out.mkdir(parents=True, exist_ok=True)
    messages = []
    problem, ref = build_problem(spec)
    sched = build_schedule(spec, problem.n_agents)
    rep = sched.validate()
    if not rep.ok:
        messages += [str(v) for v in rep.violations]
        _write(out / "schedule.json", sched.to_json())
        return RunResult(1, out, None, ref, None, None, None, messages)
    params = make_params(problem, spec.H, spec.D, spec.alpha1, spec.beta, spec.Q)
    spec.beta = params.beta
    spec.Q = list(params.Q) if len(params.Q) > 1 else params.Q[0]
    x_init = spec.x_init
    cfg = EngineConfig(x_init=x_init, debug=spec.debug, atol=spec.atol)
    trace = run(problem, sched, params, cfg)
    messages += [str(v) for v in trace.violations]

    _write(out / "instance.json", problem.to_json())
    _write(out / "schedule.json", sched.to_json())
    with open(out / "trace.csv", "w", newline="") as fh:
        write_trace_csv(trace, fh)

    cert = bounds = None
    F_star = None
    if ref is not None:
        _write(out / "reference.json", ref.to_json())
        F_star = ref.F_star
        if ref.lambda_star is not None:
            cert = compute_bound_certificate(trace, ref.x_star, ref.lambda_star, ref.F_star)
            bounds = check_bounds(trace, cert)
            doc = {"delta1": cert.delta1, "delta2": cert.delta2,
                   "lambda_star_norm": cert.lambda_norm, "F_star": cert.F_star,
                   "Xi1": cert.Xi1, "beta": cert.beta, "alpha1": cert.alpha1,
                   "terms": cert.terms, "slots_checked": int(bounds.K.size),
                   "failures": bounds.failures()}
            _write(out / "certificate.json", json.dumps(doc, sort_keys=True, indent=1))
            if not bounds.ok:
                messages.append(f"bound certificate failed at K={bounds.failures()[:10]}")
        else:
            log.warning("no multiplier available; certificate skipped")
    else:
        log.warning("no reference solution; certificate skipped")

    rate = None
    if F_star is not None:
        rate = report_rate(trace.F, trace.normAx, F_star, params.alpha1, cert,
                           spec.rate_window, spec.epsilon)
        _write(out / "rate.csv", rate.to_csv())
        _write(out / "rate_summary.json", json.dumps(rate.summary, sort_keys=True, indent=1))
    _write(out / "effective_config.json", spec.to_json())
    code = 0 if not messages else 1
    return RunResult(code, out, trace, ref, cert, bounds, rate, messages)
