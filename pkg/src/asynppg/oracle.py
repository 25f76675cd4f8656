"""Centralized reference solvers for the built-in instances.

Nothing here touches the distributed update path; the soft threshold and
the market supply/demand curves are written out locally on purpose.
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np
from scipy.optimize import lsq_linear

from .errors import MaxIterExceeded, NoMarketClearing, ResidualTooLarge
from .functions import L1Prox, ZeroProx
from .linalg import extreme_eigenvalues


@dataclass
class SaddleReference:
    x_star: np.ndarray
    lambda_star: np.ndarray
    F_star: float
    method: str
    residuals: dict = field(default_factory=dict)

    def to_dict(self):
        lam = None if self.lambda_star is None else [float(v) for v in self.lambda_star]
        return {"x_star": [float(v) for v in self.x_star], "lambda_star": lam,
                "F_star": float(self.F_star), "method": self.method,
                "residuals": {k: float(v) for k, v in self.residuals.items()}}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d):
        lam = d.get("lambda_star")
        return cls(np.asarray(d["x_star"], dtype=float),
                   None if lam is None else np.asarray(lam, dtype=float),
                   float(d["F_star"]), d.get("method", ""), d.get("residuals", {}))


def _soft(u, thr):
    return np.sign(u) * np.maximum(np.abs(u) - thr, 0.0)


def fista_reference(lasso, max_iter=200000, tol=1e-10):
    """Solve ``min_z 0.5 sum ||P_i z - q_i||^2 + rho ||z||_1`` by restarted FISTA.

    Momentum is reset whenever the objective increases.  Stops when the
    proximal-gradient mapping ``||(z - prox(z - s grad))/s||`` is at most
    ``tol``.

    Returns
    -------
    z : ndarray
        Common minimizer.
    F_star : float
        Optimal value (equal to the distributed objective at ``z`` copied to
        every agent).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    Hm = sum(P.T @ P for P in lasso.P)
    b = sum(P.T @ q for P, q in zip(lasso.P, lasso.q))
    rho = lasso.rho
    s = 1.0 / extreme_eigenvalues(Hm)[0]
    obj = lasso.objective

    z = np.zeros(lasso.dim)
    y = z.copy()
    tk = 1.0
    Fz = obj(z)
    for _ in range(max_iter):
        g = Hm @ z - b
        gmap = (z - _soft(z - s * g, s * rho)) / s
        if np.linalg.norm(gmap) <= tol:
            return z, obj(z)
        z_new = _soft(y - s * (Hm @ y - b), s * rho)
        F_new = obj(z_new)
        if F_new > Fz:
            # restart: drop momentum and take the plain proximal step from z
            z_new = _soft(z - s * g, s * rho)
            z, Fz, tk = z_new, obj(z_new), 1.0
            y = z.copy()
            continue
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
        y = z_new + ((tk - 1.0) / t_new) * (z_new - z)
        z, Fz, tk = z_new, F_new, t_new
    raise MaxIterExceeded(f"FISTA did not reach tol={tol} in {max_iter} iterations")


def market_supply_demand(m, price):
    """``(supply, demand, uc_outputs, user_loads)`` at a given price."""
    x_uc = [min(max((price - x) / (2.0 * k), 0.0), hi)
            for k, x, hi in zip(m.kappa, m.xi, m.uc_max)]
    x_us = [min(max((n - price) / (2.0 * s), 0.0), hi)
            for n, s, hi in zip(m.nu, m.varsigma, m.user_max)]
    return sum(x_uc), sum(x_us), x_uc, x_us


def market_objective(m, x):
    """Negated social welfare: total generation cost minus total (capped) utility."""
    x = np.asarray(x, dtype=float)
    F = 0.0
    for k, (kap, xi_, w) in enumerate(zip(m.kappa, m.xi, m.varpi)):
        F += kap * x[k] ** 2 + xi_ * x[k] + w
    for j, (n, s) in enumerate(zip(m.nu, m.varsigma)):
        y = x[m.n_uc + j]
        F -= n * y - s * y * y if y <= n / (2.0 * s) else n * n / (4.0 * s)
    return float(F)


def market_kkt_solve(m, tol=1e-9, max_iter=400):
    """Clearing price by bisection on ``supply(p) - demand(p)``.

    The multiplier follows the Lagrangian ``F + lambda (A x)`` with the row
    ``A = (+1 for suppliers, -1 for users)``, so ``lambda* = -price``.
    """
    lo = min(m.xi) - 1.0
    hi = max(m.nu) + 1.0
    gap = lambda p: market_supply_demand(m, p)[0] - market_supply_demand(m, p)[1]
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo > 0 or g_hi < 0:
        raise NoMarketClearing(f"gap has one sign on [{lo}, {hi}]: {g_lo}, {g_hi}")
    p = 0.5 * (lo + hi)
    for _ in range(max_iter):
        p = 0.5 * (lo + hi)
        g = gap(p)
        if abs(g) <= tol:
            break
        if g < 0:
            lo = p
        else:
            hi = p
    else:
        raise NoMarketClearing(f"bisection stalled with gap {gap(p)}")
    _, _, x_uc, x_us = market_supply_demand(m, p)
    x = np.array(x_uc + x_us)
    return SaddleReference(x, np.array([-p]), market_objective(m, x), "price-bisection",
                           {"gap": abs(gap(p)), "price": p, "bracket": hi - lo})


def lasso_multiplier(problem, x_star, max_residual=1e-4):
    """Least-norm multiplier for a consensus problem with l1 / zero prox parts.

    Solves ``grad f_i(x_i) + g_i + A_i' lambda = 0`` in the least-squares
    sense, where ``g_i`` equals ``w sign(x_i)`` on nonzero coordinates and
    is a free slack in ``[-w, w]`` on zero coordinates, then removes the
    component of ``lambda`` in the null space of ``A'``.

    Returns
    -------
    (lambda, residual)

    Raises
    ------
    ResidualTooLarge
        Stationarity residual above ``max_residual``.
    """
    M, N = problem.block_dim, problem.n_agents
    A = problem.constraint.dense
    B = A.shape[0]
    xb = problem.blocks_of(x_star)
    rhs = []
    slack_cols = []
    bounds_lo, bounds_hi = [], []
    for i, a in enumerate(problem.agents):
        g = np.array(a.smooth.gradient(xb[i]), dtype=float)
        h = a.proximable
        if isinstance(h, L1Prox):
            nz = xb[i] != 0.0
            g = g + h.weight * np.sign(xb[i]) * nz
            for k in np.flatnonzero(~nz):
                col = np.zeros(N * M)
                col[i * M + k] = 1.0
                slack_cols.append(col)
                bounds_lo.append(-h.weight)
                bounds_hi.append(h.weight)
        elif not isinstance(h, ZeroProx):
            raise TypeError(f"unsupported prox part {type(h).__name__}")
        rhs.append(-g)
    rhs = np.concatenate(rhs)
    S = np.array(slack_cols).T if slack_cols else np.zeros((N * M, 0))
    C = np.hstack([A.T, S])
    lo = np.concatenate([np.full(B, -np.inf), bounds_lo])
    hi = np.concatenate([np.full(B, np.inf), bounds_hi])
    # small ridge on lambda steers the bounded solve toward the least-norm multiplier
    reg = 1e-6
    R = np.hstack([reg * np.eye(B), np.zeros((B, S.shape[1]))])
    sol = lsq_linear(np.vstack([C, R]), np.concatenate([rhs, np.zeros(B)]),
                     bounds=(lo, hi), method="bvls", tol=1e-14)
    s = sol.x[B:]
    # with the slack fixed, the least-norm lambda is a pseudo-inverse solve
    lam = np.linalg.pinv(A.T) @ (rhs - S @ s)
    res = float(np.linalg.norm(A.T @ lam + S @ s - rhs))
    if res > max_residual:
        raise ResidualTooLarge(f"stationarity residual {res} exceeds {max_residual}")
    return lam, res


def kkt_residual(problem, x, lam):
    """``max_i dist(-A_i' lam - grad f_i(x_i), subdiff h_i(x_i)) + ||A x||``."""
    xb = problem.blocks_of(x)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    worst = 0.0
    for i, a in enumerate(problem.agents):
        v = -(problem.constraint.blocks[i].T @ lam) - a.smooth.gradient(xb[i])
        worst = max(worst, a.proximable.subgradient_distance(xb[i], v))
    Ax = problem.constraint.dense @ np.asarray(x, dtype=float).reshape(-1)
    return worst + float(np.linalg.norm(Ax))


def lasso_reference(lasso, problem, tol=1e-10):
    """FISTA solution replicated across agents plus a best-effort multiplier."""
    z, F = fista_reference(lasso, tol=tol)
    x = np.tile(z, lasso.n_agents)
    try:
        lam, res = lasso_multiplier(problem, x)
    except ResidualTooLarge:
        lam, res = None, math.nan
    out = SaddleReference(x, lam, F, "fista", {"stationarity": res})
    if lam is not None:
        out.residuals["kkt"] = kkt_residual(problem, x, lam)
    return out
