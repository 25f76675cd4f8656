import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asynppg.errors import ConvergenceFailure
from asynppg.linalg import extreme_eigenvalues, top_eigenvalue


def test_zero_operator_gives_zero():
    assert top_eigenvalue(lambda v: 0.0 * v, 4) == 0.0


def test_diagonal():
    lam = top_eigenvalue(lambda v: np.diag([1.0, 5.0, 2.0]) @ v, 3)
    assert lam == pytest.approx(5.0, rel=1e-9)


def test_iteration_cap_raises():
    # nearly tied top eigenvalues converge too slowly for two iterations
    B = np.diag([1.0, 0.999999])
    with pytest.raises(ConvergenceFailure):
        top_eigenvalue(lambda v: B @ v, 2, maxiter=2)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_extreme_eigenvalues_match_eigh(n, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    Q = G @ G.T + 0.1 * np.eye(n)
    hi, lo = extreme_eigenvalues(Q)
    ref = np.linalg.eigvalsh(Q)
    assert hi == pytest.approx(ref[-1], rel=1e-8)
    assert lo == pytest.approx(ref[0], rel=1e-6)


def test_singular_matrix_has_zero_min():
    Q = np.array([[1.0, 1.0], [1.0, 1.0]])
    hi, lo = extreme_eigenvalues(Q)
    assert hi == pytest.approx(2.0)
    assert lo == 0.0
