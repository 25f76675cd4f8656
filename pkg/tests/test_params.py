import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asynppg.errors import ConstraintViolation, InfeasibleQSchedule, QBelowLipschitz
from asynppg.params import alpha_intra, alpha_slot_end, beta_max, eta, make_params, pi_bound


def test_alpha_examples():
    assert alpha_slot_end(1, 1.0) == 1.0
    assert alpha_slot_end(4, 1.0) == 0.25
    assert alpha_slot_end(3, 0.5) == 0.25
    assert alpha_intra(1, 1, 2, 1.0) == pytest.approx(2 / 3)
    assert alpha_intra(1, 3, 3, 1.0) == alpha_slot_end(2, 1.0)


def test_pi_examples():
    assert pi_bound(1.0, 10) == pytest.approx(30 / 11)
    assert pi_bound(0.7, 1) == pytest.approx(2.4 / 1.7)
    assert pi_bound(1e-12, 5) == pytest.approx(1.0)


def test_beta_max_examples():
    assert beta_max(2.0, 1, 1, 2.0, 1.0) == 0.25
    assert beta_max(2.0, 1, 1, 2.0, 0.0) == math.inf
    with pytest.raises(InfeasibleQSchedule):
        beta_max(1.0, 2, 1, 2.0, 1.0, max_dq=0.5)


def test_eta_examples():
    assert eta(1, 1, 1.0, 1.0, 2.0, 0.0, 1.0, 1, 1) == 1.0
    e1 = eta(2, 3, 1.0, 0.1, 2.0, 1.0, 1.0, 5, 2)
    e2 = eta(4, 3, 1.0, 0.1, 2.0, 1.0, 1.0, 5, 2)
    assert e1 / e2 == pytest.approx(2.0)
    with pytest.raises(QBelowLipschitz):
        eta(1, 1, 0.5, 1.0, 2.0, 1.0, 1.0, 1, 1, Lg=1.0)


@settings(max_examples=1000, deadline=None)
@given(st.integers(1, 5000), st.integers(1, 20), st.floats(1e-3, 50), st.data())
def test_ratio_bound(m, H, a1, data):
    P = data.draw(st.integers(1, H))
    n = data.draw(st.integers(1, P))
    r = alpha_intra(m, n, P, a1) / alpha_slot_end(m + 2, a1)
    assert 1.0 < r <= pi_bound(a1, H) * (1 + 1e-12)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 10_000), st.floats(1e-3, 10))
def test_alpha_strictly_decreasing(m, a1):
    assert alpha_slot_end(m + 1, a1) < alpha_slot_end(m, a1)


def test_make_params_market(market):
    _, p = market
    prm = make_params(p, 15, 5)
    assert prm.beta == prm.beta_cap > 0
    assert prm.Q == (p.Lg,)
    # first-update instance of the weighted step condition at the equality edge
    assert prm.coupling <= p.mu / 15 * (1 + 1e-12)
    with pytest.raises(ConstraintViolation):
        make_params(p, 15, 5, beta=2 * prm.beta_cap)
    loose = make_params(p, 15, 5, beta=2 * prm.beta_cap, strict=False)
    assert loose.beta == 2 * prm.beta_cap
    with pytest.raises(QBelowLipschitz):
        make_params(p, 15, 5, Q=[p.Lg / 2])
    with pytest.raises(InfeasibleQSchedule):
        make_params(p, 15, 5, Q=[p.Lg, p.Lg + 1.0])


def test_zero_coupling_default_beta():
    from asynppg.problem import assemble_problem
    from conftest import quad_agent
    p = assemble_problem([quad_agent(1.0)], np.zeros((1, 1)))
    prm = make_params(p, 3, 1)
    assert prm.beta == 1.0 and prm.beta_cap == math.inf
