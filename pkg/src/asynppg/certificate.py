"""Convergence-bound certificate and runtime identity checks."""

from dataclasses import dataclass, field, asdict
import json
import math

import numpy as np

from .errors import MissingSaddleData
from .problem import constraint_residual, global_objective

IDENTITY_SLACK = 1e-12


@dataclass(frozen=True)
class BoundCertificate:
    """Constants of the O(1/K) bound for one run.

    ``delta1`` collects the initial optimality gap, the dual distance and the
    primal distance weighted by ``Xi_1``; ``delta2 = (sqrt(2 beta delta1) +
    ||lambda*||)/beta``.
    """

    delta1: float
    delta2: float
    F_star: float
    lambda_norm: float
    Xi1: float
    beta: float
    alpha1: float
    terms: dict = field(default_factory=dict)

    @property
    def objective_constant(self):
        return self.delta1 + self.delta2 * self.lambda_norm

    def objective_bound(self, alpha):
        return self.objective_constant * alpha

    def residual_bound(self, alpha):
        return self.delta2 * alpha

    def to_dict(self):
        return asdict(self)


def compute_bound_certificate(trace, x_star, lambda_star, F_star=None):
    """Evaluate ``Delta_1`` and ``Delta_2`` from the start of ``trace``.

    The slot-0 movement term vanishes because slot 0 is constant history.
    """
    if x_star is None or lambda_star is None:
        raise MissingSaddleData("x* and lambda* are both required")
    p, prm = trace.problem, trace.params
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    lam = np.atleast_1d(np.asarray(lambda_star, dtype=float))
    if lam.shape[0] != p.constraint.rows:
        raise MissingSaddleData(f"lambda* has length {lam.shape[0]}, A has {p.constraint.rows} rows")
    if F_star is None:
        F_star = global_objective(p, x_star)
    x1 = trace.slot_states[1]
    Ax1, _ = constraint_residual(p, x1)
    a1, beta = prm.alpha1, prm.beta
    gap = (global_objective(p, x1) - F_star + float(lam @ Ax1)) / a1
    dual = float(np.sum((beta * Ax1 / a1 - lam) ** 2)) / (2.0 * beta)
    Xi1 = prm.Xi(1)
    primal = 0.5 * Xi1 * float(np.sum((x_star - x1) ** 2))
    # D*beta*||A||^2/alpha(t_2-1)^2 times the squared slot-0 movement
    moved0 = float(np.sum((trace.slot_states[1] - trace.slot_states[0]) ** 2))
    history = prm.D * beta * prm.normA ** 2 * prm.inv_alpha_slot_end(2) ** 2 * moved0
    delta1 = gap + dual + primal + history
    lam_norm = float(np.linalg.norm(lam))
    delta2 = (math.sqrt(2.0 * beta * max(delta1, 0.0)) + lam_norm) / beta
    return BoundCertificate(delta1, delta2, float(F_star), lam_norm, Xi1, beta, a1,
                            {"gap": gap, "dual": dual, "primal": primal, "history": history})


@dataclass
class BoundCheck:
    K: np.ndarray
    obj_gap: np.ndarray
    obj_bound: np.ndarray
    residual: np.ndarray
    residual_bound: np.ndarray
    rtol: float

    @property
    def obj_ok(self):
        return self.obj_gap <= self.obj_bound * (1.0 + self.rtol)

    @property
    def residual_ok(self):
        return self.residual <= self.residual_bound * (1.0 + self.rtol)

    @property
    def ok(self):
        return bool(np.all(self.obj_ok) and np.all(self.residual_ok))

    def failures(self):
        bad = ~(self.obj_ok & self.residual_ok)
        return [int(k) for k in self.K[bad]]


def check_bounds(trace, cert, rtol=1e-9):
    """Compare ``|F(x(t_{K+1})) - F*|`` and ``||A x(t_{K+1})||`` with the certificate for every K."""
    prm = trace.params
    K = np.arange(1, trace.num_slots + 1)
    alpha = np.array([prm.alpha_slot_end(k + 1) for k in K])
    gap = np.abs(trace.F[K + 1] - cert.F_star)
    res = trace.normAx[K + 1]
    return BoundCheck(K, gap, cert.objective_bound(alpha), res, cert.residual_bound(alpha), rtol)


@dataclass(frozen=True)
class IdentityIssue:
    kind: str
    slot: int
    agent: object
    detail: str

    def __str__(self):
        who = "" if self.agent is None else f" agent {self.agent}"
        return f"{self.kind} slot {self.slot}{who}: {self.detail}"


def _slot_groups(u, N, K):
    """``groups[m][i]`` = indices of agent ``i``'s updates in slot ``m`` (time order)."""
    groups = [[[] for _ in range(N)] for _ in range(K + 1)]
    for j in np.lexsort((u["t"], u["agent"], u["slot"])):
        groups[u["slot"][j]][u["agent"][j]].append(j)
    return groups


def debug_identities(trace, level="identities"):
    """Check the structural identities of a recorded run.

    ``identities`` covers per-slot facts: slot-end weight telescoping,
    synchronization of slot-end weights and of ``Xi_m`` across agents,
    carry-over of the last update to the slot boundary, and the
    snapshot/boundary displacement bounds with factors ``D`` and ``H``.
    ``full`` adds per-update checks: ``theta`` range, the ratio bound
    ``alpha/alpha(t_{m+2}-1) <= Pi``, monotone weights, the step-size lower
    bound and the weighted step-size monotonicity.
    """
    if level == "off":
        return []
    u = trace.updates
    p, prm, sched = trace.problem, trace.params, trace.schedule
    N, M, K = p.n_agents, p.block_dim, trace.num_slots
    groups = _slot_groups(u, N, K)
    issues = []
    add = lambda *a: issues.append(IdentityIssue(*a))
    tol = IDENTITY_SLACK
    c = prm.coupling

    prev_inv = [1.0 / prm.alpha1] * N
    prev_alpha = [prm.alpha1] * N
    prev_xi = [prm.xi(0)] * N
    for m in range(1, K + 1):
        steps = 0.0
        # Xi_m = theta/(alpha*eta) at t_m - 1 must agree exactly across agents
        if len(set(prev_xi)) != 1:
            add("xi-sync", m, None, f"Xi_m differs across agents: {sorted(set(prev_xi))}")
        if len(set(prev_alpha)) != 1:
            add("alpha-sync", m, None, f"alpha(t_m-1) differs across agents: {sorted(set(prev_alpha))}")
        for i in range(N):
            idx = groups[m][i]
            if not idx:
                add("carry", m, i, "no updates recorded")
                continue
            sl = slice(i * M, (i + 1) * M)
            x_prev = trace.slot_states[m][sl]
            for j in idx:
                steps += float(np.sum((u["x"][j] - x_prev) ** 2))
                x_prev = u["x"][j]
            last = idx[-1]
            if not np.array_equal(u["x"][last], trace.slot_states[m + 1][sl]):
                add("carry", m, i, "slot-end state differs from last update")
            inc = u["inv_alpha"][last] - prev_inv[i]
            if abs(inc - 1.0) > tol:
                add("telescoping", m, i, f"1/alpha increment {inc!r}")
            if level == "full":
                _check_updates(u, idx, m, i, prm, p, c, prev_inv[i], prev_xi[i], add)
            prev_inv[i] = u["inv_alpha"][last]
            prev_alpha[i] = u["alpha"][last]
            prev_xi[i] = u["xi"][last]
        snap_gap = float(np.sum((trace.slot_states[m + 1] - trace.snapshots[m + 1]) ** 2))
        move = float(np.sum((trace.slot_states[m + 1] - trace.slot_states[m]) ** 2))
        if snap_gap > sched.D * steps * (1 + tol) + 1e-300:
            add("snapshot-gap", m, None, f"{snap_gap!r} > D * {steps!r}")
        if move > sched.H * steps * (1 + tol) + 1e-300:
            add("slot-move", m, None, f"{move!r} > H * {steps!r}")
    return issues


def _check_updates(u, idx, m, i, prm, p, c, inv_before, xi_before, add):
    tol = IDENTITY_SLACK
    L_i = p.agents[i].smooth.lipschitz
    mu_i = p.agents[i].smooth.strong_convexity
    inv_end2 = prm.inv_alpha_slot_end(m + 2)
    prev_w = xi_before  # theta/(eta*alpha) just before the slot
    inv_prev = inv_before
    for j in idx:
        a, th, et, P = u["alpha"][j], u["theta"][j], u["eta"][j], u["P"][j]
        if not 0.0 < th < 1.0:
            add("theta-range", m, i, f"theta={th!r}")
        if abs(th * P / a - 1.0) > 1e-14:
            add("theta-alpha", m, i, f"theta*P/alpha={th * P / a!r}")
        if not u["inv_alpha"][j] > inv_prev:
            add("alpha-monotone", m, i, "averaging weight did not decrease")
        inv_prev = u["inv_alpha"][j]
        ratio = a * inv_end2
        if not 1.0 < ratio <= prm.Pi * (1.0 + tol):
            add("ratio", m, i, f"alpha/alpha(t_m+2 - 1) = {ratio!r}, Pi = {prm.Pi!r}")
        if 1.0 / et < L_i + c * inv_end2 - tol:
            add("step-bound", m, i, f"1/eta={1.0 / et!r} < {L_i + c * inv_end2!r}")
        w = th / (et * a)
        lhs = (th / a) * (1.0 / et - mu_i)
        if lhs > prev_w + tol:
            add("weighted-step", m, i, f"{lhs!r} > {prev_w!r}")
        prev_w = w


def certificate_json(cert, check=None, violations=None, extra=None):
    out = {"certificate": cert.to_dict() if cert is not None else None}
    if check is not None:
        out["bounds"] = {"ok": check.ok, "failures": check.failures(), "rtol": check.rtol,
                         "max_obj_ratio": float(np.max(check.obj_gap / check.obj_bound)),
                         "max_residual_ratio": float(np.max(check.residual / check.residual_bound))}
    if violations is not None:
        out["identity_violations"] = [str(v) for v in violations]
    if extra:
        out.update(extra)
    return json.dumps(out, sort_keys=True, indent=1, default=float)


def assert_identities(trace, level="identities"):
    """Raise :class:`IdentityViolation` listing every failed identity."""
    from .errors import IdentityViolation
    issues = debug_identities(trace, level)
    if issues:
        raise IdentityViolation(issues)
