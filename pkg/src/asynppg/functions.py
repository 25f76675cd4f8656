"""Smooth building blocks and closed-form proximal operators.

Every smooth part exposes ``evaluate``, ``gradient``, ``lipschitz``,
``strong_convexity`` and ``dim``; every proximable part exposes
``evaluate``, ``prox(u, a)`` and ``subgradient_distance(x, v)``.  Both
serialize through ``to_dict`` / :func:`smooth_from_dict` /
:func:`prox_from_dict` with the kind tags ``quadratic``, ``capped_utility``,
``l1``, ``box`` and ``zero``.
"""

import math

import mpmath
import numpy as np

from .errors import BracketNotConvex, EmptyBox, NonPositiveStep
from .linalg import extreme_eigenvalues

INF = math.inf


def _check_step(a):
    if not a > 0:
        raise NonPositiveStep(f"prox step must be positive, got {a!r}")


# -- closed-form operators -------------------------------------------------

def prox_l1(u, weight, a):
    """Componentwise soft threshold ``sign(u) * max(|u| - a*weight, 0)``."""
    _check_step(a)
    if weight < 0:
        raise ValueError("l1 weight must be non-negative")
    u = np.asarray(u, dtype=float)
    return np.sign(u) * np.maximum(np.abs(u) - a * weight, 0.0)


def prox_box(u, lo, hi, a=1.0):
    """Projection onto ``[lo, hi]``; the step ``a`` only has to be valid."""
    _check_step(a)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise EmptyBox(f"empty box: lo={lo}, hi={hi}")
    return np.clip(np.asarray(u, dtype=float), lo, hi)


def grad_capped_utility(x, nu, varsigma):
    """Derivative of the negated capped utility: ``2*varsigma*x - nu``, zero past the kink."""
    if x <= nu / (2.0 * varsigma):
        return 2.0 * varsigma * x - nu
    return 0.0


def prox_numeric_1d(h, u, a, bracket=(-1e3, 1e3), samples=257):
    """Brute-force scalar prox: argmin of ``h(v) + (v-u)^2/(2a)`` over ``bracket``.

    The effective domain of ``h`` inside the bracket is located first, then
    a golden-section search shrinks the interval to width 1e-12.  Value
    comparisons in double precision stall near ``sqrt(eps)``, so the search
    runs in 50-digit mpmath arithmetic whenever ``h`` accepts mpmath
    numbers (plain arithmetic, ``abs`` and comparisons do), and falls back
    to floats otherwise.

    Raises
    ------
    BracketNotConvex
        If the sampled domain is not an interval or ``h`` shows negative
        curvature on the samples.
    """
    _check_step(a)
    lo, hi = float(bracket[0]), float(bracket[1])
    grid = np.linspace(lo, hi, samples)
    hv = np.array([h(float(v)) for v in grid])
    finite = np.isfinite(hv)
    if not finite.any():
        raise BracketNotConvex("h is infinite on the whole bracket")
    idx = np.flatnonzero(finite)
    if idx[-1] - idx[0] + 1 != idx.size:
        raise BracketNotConvex("effective domain of h is not an interval")
    fin = hv[idx]
    if fin.size >= 3:
        curv = fin[:-2] - 2.0 * fin[1:-1] + fin[2:]
        scale = 1e-9 * (1.0 + np.max(np.abs(fin)))
        if np.any(curv < -scale):
            raise BracketNotConvex("sampled negative curvature")

    def edge(inside, outside):
        # bisection on finiteness, returns a point known to be in the domain
        for _ in range(200):
            if abs(inside - outside) <= 1e-13 * (1.0 + abs(inside)):
                break
            mid = 0.5 * (inside + outside)
            if math.isfinite(h(mid)):
                inside = mid
            else:
                outside = mid
        return inside

    dlo = grid[idx[0]] if idx[0] == 0 else edge(grid[idx[0]], grid[idx[0] - 1])
    dhi = grid[idx[-1]] if idx[-1] == samples - 1 else edge(grid[idx[-1]], grid[idx[-1] + 1])

    with mpmath.workdps(50):
        try:
            h(mpmath.mpf(0.5 * (dlo + dhi)))
            wrap = mpmath.mpf
        except TypeError:
            wrap = float
        uu, aa = wrap(u), wrap(a)

        def less(c, d):
            return h(c) - h(d) + (c - d) * (c + d - 2 * uu) / (2 * aa) < 0

        inv_phi = (mpmath.sqrt(5) - 1) / 2 if wrap is not float else (math.sqrt(5.0) - 1.0) / 2.0
        x0, x1 = wrap(dlo), wrap(dhi)
        c = x1 - inv_phi * (x1 - x0)
        d = x0 + inv_phi * (x1 - x0)
        while x1 - x0 > 1e-12:
            if less(c, d):
                x1, d = d, c
                c = x1 - inv_phi * (x1 - x0)
            else:
                x0, c = c, d
                d = x0 + inv_phi * (x1 - x0)
        return float((x0 + x1) / 2)


# -- smooth parts ----------------------------------------------------------

class QuadraticSmooth:
    """``0.5 x'Qx + c'x + offset`` with symmetric PSD ``Q``.

    ``lipschitz`` and ``strong_convexity`` are the extreme eigenvalues of
    ``Q`` computed by (inverse) power iteration.
    """

    kind = "quadratic"

    def __init__(self, Q, c=None, offset=0.0):
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        if Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        if not np.allclose(Q, Q.T, rtol=0.0, atol=1e-12):
            raise ValueError("Q must be symmetric")
        self.Q = 0.5 * (Q + Q.T)
        self.c = np.zeros(Q.shape[0]) if c is None else np.asarray(c, dtype=float).reshape(-1)
        if self.c.shape[0] != Q.shape[0]:
            raise ValueError("c has the wrong length")
        self.offset = float(offset)
        self.lipschitz, mu = extreme_eigenvalues(self.Q)
        self.strong_convexity = max(mu, 0.0)

    @property
    def dim(self):
        return self.Q.shape[0]

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.Q @ x + self.c @ x + self.offset)

    def gradient(self, x):
        return self.Q @ np.asarray(x, dtype=float) + self.c

    @classmethod
    def least_squares(cls, P, q):
        """``0.5 ||P x - q||^2``."""
        P = np.asarray(P, dtype=float)
        q = np.asarray(q, dtype=float)
        return cls(P.T @ P, -P.T @ q, 0.5 * float(q @ q))

    @classmethod
    def scalar(cls, kappa, xi, varpi=0.0):
        """``kappa x^2 + xi x + varpi`` for a scalar decision."""
        return cls([[2.0 * kappa]], [xi], varpi)

    def to_dict(self):
        return {"kind": self.kind, "Q": self.Q.tolist(), "c": self.c.tolist(),
                "offset": self.offset}


class CappedUtilitySmooth:
    """Negated capped concave utility of a market user (scalar).

    ``varsigma x^2 - nu x`` up to the kink ``nu/(2 varsigma)`` and the constant
    ``-nu^2/(4 varsigma)`` beyond it.  Curvature constants are reported as
    ``2*varsigma`` for both L and mu; the box bound of the user keeps iterates
    (almost) inside the quadratic region.
    """

    kind = "capped_utility"
    dim = 1

    def __init__(self, nu, varsigma):
        if not (nu > 0 and varsigma > 0):
            raise ValueError("nu and varsigma must be positive")
        self.nu = float(nu)
        self.varsigma = float(varsigma)
        self.lipschitz = 2.0 * self.varsigma
        self.strong_convexity = 2.0 * self.varsigma

    @property
    def kink(self):
        return self.nu / (2.0 * self.varsigma)

    def evaluate(self, x):
        x = float(np.asarray(x, dtype=float).reshape(-1)[0])
        if x <= self.kink:
            return self.varsigma * x * x - self.nu * x
        return -self.nu ** 2 / (4.0 * self.varsigma)

    def gradient(self, x):
        x = float(np.asarray(x, dtype=float).reshape(-1)[0])
        return np.array([grad_capped_utility(x, self.nu, self.varsigma)])

    def to_dict(self):
        return {"kind": self.kind, "nu": self.nu, "varsigma": self.varsigma}


def smooth_from_dict(d):
    kind = d["kind"]
    if kind == "quadratic":
        return QuadraticSmooth(d["Q"], d["c"], d.get("offset", 0.0))
    if kind == "capped_utility":
        return CappedUtilitySmooth(d["nu"], d["varsigma"])
    raise ValueError(f"unknown smooth kind {kind!r}")


# -- proximable parts ------------------------------------------------------

class ZeroProx:
    kind = "zero"

    def __init__(self, dim=None):
        self.dim = dim

    def evaluate(self, x):
        return 0.0

    def prox(self, u, a):
        _check_step(a)
        return np.array(u, dtype=float)

    def subgradient_distance(self, x, v):
        return float(np.linalg.norm(v))

    def to_dict(self):
        return {"kind": self.kind}


class L1Prox:
    """``weight * ||x||_1``."""

    kind = "l1"

    def __init__(self, weight, dim=None):
        if weight < 0:
            raise ValueError("l1 weight must be non-negative")
        self.weight = float(weight)
        self.dim = dim

    def evaluate(self, x):
        return self.weight * float(np.sum(np.abs(x)))

    def prox(self, u, a):
        return prox_l1(u, self.weight, a)

    def subgradient_distance(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        w = self.weight
        d = np.where(x != 0.0, np.abs(v - w * np.sign(x)), np.maximum(np.abs(v) - w, 0.0))
        return float(np.linalg.norm(d))

    def to_dict(self):
        return {"kind": self.kind, "weight": self.weight}


class BoxProx:
    """Indicator of ``[lo, hi]`` (entries may be infinite)."""

    kind = "box"

    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.lo.shape != self.hi.shape:
            raise ValueError("lo and hi must have the same shape")
        if np.any(self.lo > self.hi):
            raise EmptyBox(f"empty box: lo={self.lo}, hi={self.hi}")

    @property
    def dim(self):
        return self.lo.shape[0]

    def evaluate(self, x):
        x = np.asarray(x, dtype=float)
        if np.all(x >= self.lo) and np.all(x <= self.hi):
            return 0.0
        return INF

    def prox(self, u, a):
        return prox_box(u, self.lo, self.hi, a)

    def subgradient_distance(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if not (np.all(x >= self.lo) and np.all(x <= self.hi)):
            return INF
        at_lo = x == self.lo
        at_hi = x == self.hi
        d = np.abs(v)
        # normal cone: (-inf, 0] at lo, [0, inf) at hi, R when lo == hi
        d = np.where(at_lo & ~at_hi, np.maximum(v, 0.0), d)
        d = np.where(at_hi & ~at_lo, np.maximum(-v, 0.0), d)
        d = np.where(at_lo & at_hi, 0.0, d)
        return float(np.linalg.norm(d))

    def to_dict(self):
        enc = lambda b: [None if math.isinf(t) else float(t) for t in b]
        return {"kind": self.kind, "lo": enc(self.lo), "hi": enc(self.hi)}


def prox_from_dict(d):
    kind = d["kind"]
    if kind == "zero":
        return ZeroProx()
    if kind == "l1":
        return L1Prox(d["weight"])
    if kind == "box":
        lo = [-INF if t is None else t for t in d["lo"]]
        hi = [INF if t is None else t for t in d["hi"]]
        return BoxProx(lo, hi)
    raise ValueError(f"unknown prox kind {kind!r}")
