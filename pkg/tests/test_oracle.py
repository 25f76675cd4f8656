import numpy as np
import pytest

from asynppg.errors import NoMarketClearing
from asynppg.oracle import (fista_reference, kkt_residual, lasso_multiplier, lasso_reference,
                            market_kkt_solve, market_supply_demand)
from asynppg.problems import MarketInstance, gen_lasso, market_instance


def test_fista_without_l1_matches_normal_equations():
    L, _ = gen_lasso(3, rho=0.0, noise_var=0.0, sparsity=0.0)
    z, F = fista_reference(L)
    Hm = sum(P.T @ P for P in L.P)
    b = sum(P.T @ q for P, q in zip(L.P, L.q))
    assert np.linalg.norm(z - np.linalg.solve(Hm, b)) <= 1e-8


def test_fista_huge_rho_gives_zero():
    L, _ = gen_lasso(3, rho=1e6)
    z, _ = fista_reference(L)
    assert np.all(z == 0.0)


def test_fista_fixed_point():
    L, _ = gen_lasso(4, rho=0.5)
    z, _ = fista_reference(L)
    Hm = sum(P.T @ P for P in L.P)
    b = sum(P.T @ q for P, q in zip(L.P, L.q))
    s = 0.1
    u = z - s * (Hm @ z - b)
    step = np.sign(u) * np.maximum(np.abs(u) - s * 0.5, 0.0)
    assert np.linalg.norm(step - z) <= 1e-9


def test_market_solution_and_orientation(market):
    m, p = market
    ref = market_kkt_solve(m)
    np.testing.assert_allclose(ref.x_star, [0, 179.1, 55.51, 65.84, 57.75], atol=0.05)
    assert ref.lambda_star[0] == pytest.approx(-6.789, abs=1e-3)
    assert ref.residuals["gap"] <= 1e-9
    assert kkt_residual(p, ref.x_star, ref.lambda_star) <= 1e-6
    # wrong sign is not a saddle point
    assert kkt_residual(p, ref.x_star, -ref.lambda_star) > 1.0


def test_toy_market_closed_form():
    m = MarketInstance((0.5,), (1.0,), (0.0,), (1e6,), (9.0,), (0.5,), (1e6,))
    ref = market_kkt_solve(m)
    assert ref.x_star[0] == pytest.approx((9.0 - 1.0) / (2 * 0.5 + 2 * 0.5), abs=1e-8)


def test_no_clearing():
    # valid markets always clear inside the bracket; a negative capacity keeps the gap negative
    m = MarketInstance((0.5,), (1.0,), (0.0,), (-1.0,), (50.0,), (0.5,), (100.0,))
    with pytest.raises(NoMarketClearing):
        market_kkt_solve(m)


def test_two_agent_multipliers(consensus_pair):
    p = consensus_pair(2.0, 2.0)
    lam, res = lasso_multiplier(p, np.array([2.0, 2.0]))
    assert np.allclose(lam, 0.0) and res <= 1e-12
    # with L = F + lambda*(x1 - x2): x1 - a + lambda = 0, so lambda = (a - b)/2
    p = consensus_pair(1.0, 4.0)
    x = np.array([2.5, 2.5])
    lam, res = lasso_multiplier(p, x)
    assert lam[0] == pytest.approx((1.0 - 4.0) / 2)
    assert res <= 1e-12
    assert kkt_residual(p, x, lam) <= 1e-12


def test_lasso_reference_residuals():
    L, p = gen_lasso(0)
    ref = lasso_reference(L, p)
    assert ref.residuals["stationarity"] <= 1e-6
    assert kkt_residual(p, ref.x_star, ref.lambda_star) <= 1e-6


def test_random_point_has_positive_residual(market):
    _, p = market
    assert kkt_residual(p, np.array([10.0, 20.0, 5.0, 5.0, 5.0]), [0.0]) > 0
