"""Run specifications: a single JSON document per experiment."""

from dataclasses import dataclass, asdict, field
import json
import logging

from .errors import ConstraintViolation, ParseError

log = logging.getLogger(__name__)

MARKET_FRACTIONS = [0.8, 0.2, 1.0, 0.5, 0.7]
DEBUG_LEVELS = ("off", "identities", "full")
DELAY_MODES = ("worst", "random", "fixed")


@dataclass
class RunSpec:
    problem: dict
    H: int
    D: int
    K: int
    delay_mode: str = "worst"
    delays: list = None
    fractions: object = None
    fixed: object = None
    alpha1: float = 1.0
    Q: object = "uniform"
    beta: object = "auto"
    seed_schedule: int = 0
    seed_data: int = 0
    debug: str = "identities"
    x_init: object = None
    oracle: bool = True
    atol: float = 0.0
    rate_window: list = field(default_factory=lambda: [100, 1000])
    epsilon: float = None
    out: str = None

    def to_dict(self):
        d = asdict(self)
        d.pop("out")
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _int(d, key, lo=None):
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        else:
            raise ConstraintViolation(key, f"expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConstraintViolation(key, f"must be >= {lo}, got {v}")
    return v


def _problem(p):
    if isinstance(p, str):
        p = {"kind": p}
    if not isinstance(p, dict) or "kind" not in p:
        raise ConstraintViolation("problem", f"expected a kind string or object, got {p!r}")
    kind = p["kind"]
    if kind == "market":
        return {"kind": "market"}
    if kind == "lasso":
        out = {"kind": "lasso", "rho": float(p.get("rho", 10.0)), "dim": int(p.get("dim", 5)),
               "noise_var": float(p.get("noise_var", 1e-3)),
               "sparsity": float(p.get("sparsity", 0.6))}
        if out["rho"] < 0:
            raise ConstraintViolation("problem.rho", "must be non-negative")
        if out["dim"] < 1:
            raise ConstraintViolation("problem.dim", "must be >= 1")
        if not 0.0 <= out["sparsity"] <= 1.0:
            raise ConstraintViolation("problem.sparsity", "must lie in [0, 1]")
        if "edges" in p:
            out["n_agents"] = int(p.get("n_agents", 1 + max(max(e) for e in p["edges"])))
            out["edges"] = [[int(a), int(b)] for a, b in p["edges"]]
        return out
    if kind == "file":
        if "path" not in p:
            raise ConstraintViolation("problem.path", "file problems need a path")
        out = {"kind": "file", "path": str(p["path"])}
        if "reference" in p:
            out["reference"] = str(p["reference"])
        return out
    raise ConstraintViolation("problem.kind", f"unknown problem kind {kind!r}")


def parse_config(src, overrides=None):
    """Validate a config (path, JSON text or dict) into a :class:`RunSpec`.

    ``overrides`` (e.g. seeds from the command line) are applied before
    validation.

    Raises
    ------
    ParseError
        Unreadable or malformed JSON.
    ConstraintViolation
        A field breaks a rule; ``.field`` names it.
    """
    if isinstance(src, dict):
        d = dict(src)
    else:
        try:
            text = src if str(src).lstrip().startswith("{") else open(src).read()
            d = json.loads(text)
        except (OSError, json.JSONDecodeError) as e:
            raise ParseError(str(e)) from e
        if not isinstance(d, dict):
            raise ParseError("config must be a JSON object")
    d.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = set(RunSpec.__dataclass_fields__)
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConstraintViolation(unknown[0], "unknown field")
    for key in ("problem", "H", "D", "K"):
        if key not in d:
            raise ConstraintViolation(key, "required field missing")
    d["problem"] = _problem(d["problem"])
    d["H"] = _int(d, "H", 1)
    d["D"] = _int(d, "D", 1)
    d["K"] = _int(d, "K", 1)
    if d["D"] > d["H"]:
        raise ConstraintViolation("D", f"delay bound {d['D']} exceeds slot width {d['H']}")
    spec = RunSpec(**d)
    if spec.delay_mode == "fixed-list":
        spec.delay_mode = "fixed"
    if spec.delay_mode not in DELAY_MODES:
        raise ConstraintViolation("delay_mode", f"must be one of {DELAY_MODES}")
    if spec.delay_mode == "fixed" and spec.delays is None:
        raise ConstraintViolation("delays", "fixed delay mode needs a delays list")
    if spec.debug not in DEBUG_LEVELS:
        raise ConstraintViolation("debug", f"must be one of {DEBUG_LEVELS}")
    if spec.fractions is None and spec.fixed is None:
        kind = spec.problem["kind"]
        spec.fractions = list(MARKET_FRACTIONS) if kind == "market" else "random"
        log.info("fractions defaulted to %r", spec.fractions)
    if spec.fractions is not None and spec.fractions != "random":
        fr = spec.fractions if isinstance(spec.fractions, list) else [spec.fractions]
        for k, p in enumerate(fr):
            if p != "random" and (isinstance(p, str) or not 0.0 < float(p) <= 1.0):
                raise ConstraintViolation(f"fractions[{k}]", f"{p!r} outside (0, 1]")
    if not float(spec.alpha1) > 0:
        raise ConstraintViolation("alpha1", "must be positive")
    spec.alpha1 = float(spec.alpha1)
    if spec.beta != "auto" and not (isinstance(spec.beta, (int, float)) and spec.beta > 0):
        raise ConstraintViolation("beta", "must be \"auto\" or a positive number")
    if spec.epsilon is not None and not 0 < spec.epsilon:
        raise ConstraintViolation("epsilon", "must be positive")
    if len(spec.rate_window) != 2 or not 1 <= spec.rate_window[0] <= spec.rate_window[1]:
        raise ConstraintViolation("rate_window", "need [K_lo, K_hi] with 1 <= K_lo <= K_hi")
    return spec
