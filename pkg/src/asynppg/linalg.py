"""Small dense eigenvalue helpers based on power iteration."""

import numpy as np

from .errors import ConvergenceFailure

_SEED = 20230117


def top_eigenvalue(matvec, n, rtol=1e-10, maxiter=10000, seed=_SEED):
    """Largest eigenvalue of a symmetric PSD operator by power iteration.

    Stops when the eigen-residual ``||Bv - rv||`` drops below ``rtol * r``
    where ``r`` is the Rayleigh quotient; for symmetric operators the
    Rayleigh quotient error is then second order in the residual.

    Parameters
    ----------
    matvec : callable
        ``v -> B v`` for a symmetric positive semidefinite ``B``.
    n : int
        Dimension of ``v``.
    rtol : float, optional
        Relative residual tolerance.
    maxiter : int, optional
        Iteration cap.
    seed : int, optional
        Seed of the deterministic start vector.

    Returns
    -------
    float
        The dominant eigenvalue (0.0 for the zero operator).
    """
    v = np.random.default_rng(seed).standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(maxiter):
        w = matvec(v)
        r = float(v @ w)
        wn = np.linalg.norm(w)
        if wn == 0.0:
            return 0.0
        if np.linalg.norm(w - r * v) <= rtol * abs(r):
            return r
        v = w / wn
    raise ConvergenceFailure(
        f"power iteration did not reach rtol={rtol} in {maxiter} iterations")


def extreme_eigenvalues(Q, rtol=1e-12, maxiter=10000):
    """Return ``(lambda_max, lambda_min)`` of a symmetric PSD matrix.

    The minimum comes from inverse power iteration; a singular ``Q`` gives
    ``lambda_min = 0``.
    """
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    if n == 1:
        q = float(Q[0, 0])
        return q, q
    lmax = top_eigenvalue(lambda v: Q @ v, n, rtol, maxiter)
    try:
        lu = np.linalg.inv(Q)
    except np.linalg.LinAlgError:
        return lmax, 0.0
    if not np.all(np.isfinite(lu)):
        return lmax, 0.0
    inv_max = top_eigenvalue(lambda v: lu @ v, n, rtol, maxiter)
    if inv_max <= 0.0:
        return lmax, 0.0
    return lmax, 1.0 / inv_max
