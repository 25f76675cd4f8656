import io

import numpy as np
import pytest

from asynppg.certificate import assert_identities, debug_identities
from asynppg.engine import EngineConfig, agent_update, run, trace_csv, write_trace_csv
from asynppg.errors import IdentityViolation, NonFiniteState, ScheduleInvalid
from asynppg.functions import BoxProx, QuadraticSmooth, ZeroProx
from asynppg.params import make_params
from asynppg.problem import AgentObjective, assemble_problem
from asynppg.schedule import ActionClock, DelaySchedule, Schedule, SlotConfig, make_schedule
from conftest import quad_agent


def single_agent(q=1.0):
    return assemble_problem([quad_agent(q)], np.zeros((1, 1)))


def test_one_step_exact_minimization():
    p = single_agent()
    x = agent_update(p, 0, np.array([5.0]), np.array([5.0]), 1.0, 0.0)
    assert x[0] == 0.0


def test_update_clamps_into_box():
    a = AgentObjective(QuadraticSmooth([[1.0]], [5.0]), BoxProx([0.0], [10.0]))
    p = assemble_problem([a], np.zeros((1, 1)))
    # gradient step from 2 with eta=1 lands at -5, projected to 0
    assert agent_update(p, 0, np.array([2.0]), np.array([2.0]), 1.0, 0.0)[0] == 0.0


def test_consensus_fixed_point(consensus_pair):
    p = consensus_pair(3.0, 3.0)
    xd = np.array([3.0, 3.0])
    for i in range(2):
        assert agent_update(p, i, np.array([3.0]), xd, 0.3, 7.0)[0] == 3.0


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_detected():
    p = single_agent()
    with pytest.raises(NonFiniteState):
        agent_update(p, 0, np.array([np.inf]), np.array([0.0]), 1.0, 0.0)


def test_zero_coupling_single_slot():
    p = single_agent(2.0)
    s = make_schedule(1, 1, 1, 1, fixed=1)
    prm = make_params(p, 1, 1)
    tr = run(p, s, prm, EngineConfig(x_init=[5.0], debug="full"))
    assert abs(tr.slot_states[2][0]) <= 1e-12
    assert tr.violations == []


def test_invalid_schedule_rejected():
    p = single_agent()
    cfg = SlotConfig(4, 1, 1)
    bad = Schedule(cfg, ActionClock(4, ((((4, 9),)),)), DelaySchedule(4, 1, (3, 7)))
    with pytest.raises(ScheduleInvalid):
        run(p, bad, make_params(p, 4, 1))


def _market_run(market, K=60, seed=0, debug="full"):
    _, p = market
    s = make_schedule(5, 15, 5, K, seed=seed, fractions=[0.8, 0.2, 1.0, 0.5, 0.7])
    return run(p, s, make_params(p, 15, 5), EngineConfig(debug=debug))


def test_identities_hold_on_market(market):
    tr = _market_run(market)
    assert tr.violations == []


def test_corrupted_alpha_table_flagged(market):
    tr = _market_run(market, K=10, debug="off")
    j = np.flatnonzero((tr.updates["slot"] == 4) & (tr.updates["agent"] == 2))[-1]
    tr.updates["inv_alpha"][j] += 1e-6
    kinds = {v.kind for v in debug_identities(tr)}
    assert "telescoping" in kinds
    with pytest.raises(IdentityViolation):
        assert_identities(tr)


def test_single_update_snapshot_tight():
    # one update per slot at the slot start, D=1: snapshot equals the slot-end state
    p = assemble_problem([quad_agent(1.0, -1.0), quad_agent(2.0, 1.0)], np.array([[1.0, -1.0]]))
    H, K = 5, 8
    clock = ActionClock(H, tuple(tuple((m * H,) for m in range(1, K + 1)) for _ in range(2)))
    sched = Schedule(SlotConfig(H, 1, K), clock,
                     DelaySchedule(H, 1, tuple((m + 1) * H - 1 for m in range(K + 1))))
    tr = run(p, sched, make_params(p, H, 1), EngineConfig(x_init=[4.0, -2.0], debug="full"))
    assert tr.violations == []
    np.testing.assert_array_equal(tr.snapshots[2:], tr.slot_states[2:])


def test_determinism(market):
    a = trace_csv(_market_run(market, K=30, seed=3, debug="off"))
    b = trace_csv(_market_run(market, K=30, seed=3, debug="off"))
    assert a == b


def test_tick_history_piecewise_constant(market):
    tr = _market_run(market, K=5, debug="off")
    X = tr.states_at_ticks()
    H = 15
    for m in range(1, 7):
        np.testing.assert_array_equal(X[m * H], tr.slot_states[m])
    # between consecutive ticks at most the acting agents change
    acted = set(map(int, tr.updates["t"]))
    for t in range(X.shape[0] - 1):
        if t not in acted:
            np.testing.assert_array_equal(X[t + 1], X[t])


def test_csv_layout(market):
    tr = _market_run(market, K=3, debug="off")
    text = trace_csv(tr)
    lines = text.splitlines()
    assert lines[0] == "slot,t,agent,event,x0,x1,x2,x3,x4,F,normAx,alpha,theta,eta"
    bnd = [l for l in lines[1:] if ",boundary," in l]
    upd = [l for l in lines[1:] if ",update," in l]
    assert len(bnd) == 4
    assert len(upd) == tr.updates["t"].size
    # repr round trip of the first boundary state
    first = bnd[0].split(",")
    assert [float(v) for v in first[4:9]] == list(tr.slot_states[1])


def test_early_stop_on_displacement():
    p = single_agent()
    s = make_schedule(1, 2, 1, 50, fixed=2)
    tr = run(p, s, make_params(p, 2, 1), EngineConfig(x_init=[1.0], atol=1e-3, debug="off"))
    assert tr.num_slots < 50
