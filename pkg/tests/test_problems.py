import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from asynppg.errors import DisconnectedGraph
from asynppg.problems import (GraphSpec, convergence_error, five_agent_graph, gen_lasso,
                              incidence_matrix, market_instance)


def test_two_node_incidence():
    A = incidence_matrix(GraphSpec(2, [(0, 1)]), 1).dense
    np.testing.assert_array_equal(A, [[1.0, -1.0]])


def test_five_agent_matrix_bit_exact():
    I, O = np.eye(5), np.zeros((5, 5))
    expected = np.block([[I, -I, O, O, O],
                         [O, I, -I, O, O],
                         [O, O, I, -I, O],
                         [I, O, O, -I, O],
                         [O, O, O, I, -I]])
    np.testing.assert_array_equal(incidence_matrix(five_agent_graph(), 5).dense, expected)


def test_disconnected_rejected():
    with pytest.raises(DisconnectedGraph):
        incidence_matrix(GraphSpec(3, [(0, 1)]), 1)


@st.composite
def connected_graphs(draw):
    n = draw(st.integers(2, 7))
    # random spanning tree plus extra edges
    edges = {(draw(st.integers(0, v - 1)), v) for v in range(1, n)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=6))
    edges |= {(min(a, b), max(a, b)) for a, b in extra if a != b}
    return GraphSpec(n, sorted(edges))


@settings(max_examples=100, deadline=None)
@given(connected_graphs(), st.integers(1, 3))
def test_gram_is_laplacian_kron(g, M):
    A = incidence_matrix(g, M).dense
    adj = np.zeros((g.n, g.n))
    for i, j in g.edges:
        adj[i, j] = adj[j, i] = 1.0
    L = np.diag(adj.sum(1)) - adj
    np.testing.assert_array_equal(A.T @ A, np.kron(L, np.eye(M)))


@settings(max_examples=50, deadline=None)
@given(connected_graphs(), st.integers(0, 1000))
def test_null_space_is_consensus(g, seed):
    rng = np.random.default_rng(seed)
    A = incidence_matrix(g, 2).dense
    z = rng.standard_normal(2)
    assert np.allclose(A @ np.tile(z, g.n), 0.0)
    x = rng.standard_normal(2 * g.n)
    assert np.linalg.norm(A @ x) > 0


def test_lasso_reproducible_and_normalized():
    a, pa = gen_lasso(11)
    b, pb = gen_lasso(11)
    assert pa.to_json() == pb.to_json()
    for P in a.P:
        assert np.all(np.abs(np.linalg.norm(P, axis=0) - 1.0) <= 1e-12)
    for x in a.x_hat:
        assert np.sum(x == 0.0) == 3
    assert pa.agents[0].proximable.weight == 10.0 / 5


def test_market_constants(market):
    m, p = market
    assert (m.kappa[0], m.xi[0], m.uc_max[0]) == (0.0031, 8.71, 113.23)
    assert p.norm_A == pytest.approx(math.sqrt(5))
    assert p.mu == pytest.approx(2 * 0.0031)
    assert p.Lg == pytest.approx(2 * 0.1007)


def test_convergence_error_zero_at_optimum(market):
    from asynppg.engine import EngineConfig, run
    from asynppg.params import make_params
    from asynppg.problem import assemble_problem
    from asynppg.schedule import make_schedule
    from conftest import quad_agent
    p = assemble_problem([quad_agent(1.0, -2.0)], np.zeros((1, 1)))
    tr = run(p, make_schedule(1, 3, 1, 4, fixed=2), make_params(p, 3, 1),
             EngineConfig(x_init=[2.0], debug="off"))
    g = convergence_error(tr, -2.0)
    assert g.shape == (16,)
    assert np.all(g == 0.0)
