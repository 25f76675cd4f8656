"""Slot-by-slot execution of the asynchronous penalized proximal gradient method.

Within slot ``m`` agent ``i`` only reads its own state and the frozen
snapshot ``x^d(t_m)``, so agents are processed one after another without
any effect on the result; snapshots and slot-boundary states are exchanged
at the barrier between slots.
"""

from dataclasses import dataclass, field
import io
import logging
import math

import numpy as np

from .errors import NonFiniteState, ScheduleInvalid
from .problem import constraint_residual, global_objective

log = logging.getLogger(__name__)

DEBUG_LEVELS = ("off", "identities", "full")


@dataclass
class EngineConfig:
    x_init: object = None
    debug: str = "identities"
    max_slots: int = None
    atol: float = 0.0
    record_updates: bool = True

    def __post_init__(self):
        if self.debug not in DEBUG_LEVELS:
            raise ValueError(f"debug level must be one of {DEBUG_LEVELS}")


@dataclass
class Trace:
    """Run history.

    ``slot_states[m]`` is ``x(t_m)`` and ``snapshots[m]`` is ``x^d(t_m)`` for
    ``m = 0..K+1`` (index 0 repeats the initial state).  ``updates`` holds one
    record per executed update when update recording is on.
    """

    problem: object
    schedule: object
    params: object
    slot_states: np.ndarray
    snapshots: np.ndarray
    F: np.ndarray
    normAx: np.ndarray
    updates: dict = field(default=None, repr=False)
    violations: list = field(default_factory=list)

    @property
    def num_slots(self):
        """Number of executed slots ``K``."""
        return self.slot_states.shape[0] - 2

    @property
    def x_init(self):
        return self.slot_states[1]

    def states_at_ticks(self):
        """Network state ``x(t)`` for every tick ``t = 0..t_{K+1}``."""
        if self.updates is None:
            raise ValueError("trace was recorded without update history")
        H = self.schedule.H
        T = (self.num_slots + 1) * H
        M = self.problem.block_dim
        out = np.empty((T + 1, self.problem.dim))
        x = self.x_init.copy()
        u = self.updates
        order = np.lexsort((u["agent"], u["t"]))
        k = 0
        for t in range(T + 1):
            out[t] = x
            while k < order.size and u["t"][order[k]] == t:
                j = order[k]
                i = u["agent"][j]
                x[i * M:(i + 1) * M] = u["x"][j]
                k += 1
        return out


def _step(agent, x_i, g_pen, eta):
    u = x_i - eta * (agent.smooth.gradient(x_i) + g_pen)
    return agent.proximable.prox(u, eta)


def agent_update(problem, i, x_i, x_d, eta, penalty):
    """One proximal step of agent ``i``.

    Returns ``prox_{h_i}^eta(x_i - eta*(grad f_i(x_i) + penalty * W_i x_d))``
    where ``W_i x_d`` only touches the nonzero blocks of row ``i``.
    """
    x_i = np.asarray(x_i, dtype=float)
    new = _step(problem.agents[i], x_i, penalty * problem.W_row(i, x_d), eta)
    if not np.all(np.isfinite(new)):
        raise NonFiniteState(f"agent {i}: non-finite state {new}")
    return new


def run(problem, schedule, params, config=None):
    """Execute the algorithm over ``schedule`` and return a :class:`Trace`.

    Slot 0 is constant history equal to ``x_init``, so ``x^d(t_1) = x_init``.
    Runs ``config.max_slots`` slots (default: all slots of the schedule),
    stopping early if ``atol > 0`` and the slot-boundary displacement
    ``||x(t_{m+1}) - x(t_m)||`` drops to ``atol`` or below.
    """
    config = config or EngineConfig()
    N, M = problem.n_agents, problem.block_dim
    clock, delays = schedule.clock, schedule.delays
    if clock.n_agents != N:
        raise ScheduleInvalid(f"schedule has {clock.n_agents} agents, problem {N}")
    rep = schedule.validate()
    if not rep.ok:
        raise ScheduleInvalid("; ".join(str(v) for v in rep.violations[:5]))
    K = schedule.num_slots if config.max_slots is None else min(config.max_slots, schedule.num_slots)
    if config.x_init is None:
        x = np.zeros(problem.dim)
    else:
        x = np.array(config.x_init, dtype=float).reshape(-1)
        if x.size == 1 and problem.dim > 1:
            x = np.full(problem.dim, float(x[0]))
    if x.shape[0] != problem.dim or not np.all(np.isfinite(x)):
        raise ValueError("x_init must be a finite vector of length NM")
    for i, a in enumerate(problem.agents):
        if math.isinf(a.proximable.evaluate(x[i * M:(i + 1) * M])):
            log.warning("x_init violates the indicator of agent %d", i)
    record = config.record_updates or config.debug != "off"

    H = schedule.H
    states = [x.copy(), x.copy()]
    snaps = [x.copy(), x.copy()]
    cols = {k: [] for k in ("slot", "t", "agent", "n", "P", "x", "inv_alpha",
                            "alpha", "theta", "eta", "xi")}
    agents = problem.agents
    x_d = x.copy()
    for m in range(1, K + 1):
        pen = params.penalty(m)
        xi = params.xi(m)
        tau_next = delays.tau(m + 1)
        new_x = np.empty_like(x)
        new_d = np.empty_like(x)
        for i in range(N):
            sl = slice(i * M, (i + 1) * M)
            ins = clock.slot(i, m)
            P = len(ins)
            step = 1.0 / (P * xi)
            g_pen = pen * problem.W_row(i, x_d)
            xi_state = x[sl]
            snap = xi_state
            agent = agents[i]
            for n, t in enumerate(ins, start=1):
                nxt = _step(agent, xi_state, g_pen, step)
                if not np.all(np.isfinite(nxt)):
                    raise NonFiniteState(f"slot {m}, agent {i}, t={t}: non-finite state")
                if record:
                    inv_a = params.inv_alpha(m, n, P)
                    a = 1.0 / inv_a
                    cols["slot"].append(m)
                    cols["t"].append(t)
                    cols["agent"].append(i)
                    cols["n"].append(n)
                    cols["P"].append(P)
                    cols["x"].append(nxt)
                    cols["inv_alpha"].append(inv_a)
                    cols["alpha"].append(a)
                    cols["theta"].append(a / P)
                    cols["eta"].append(step)
                    cols["xi"].append(xi)
                xi_state = nxt
                if t < tau_next:
                    snap = nxt
            new_x[sl] = xi_state
            new_d[sl] = snap
        moved = np.linalg.norm(new_x - x)
        x, x_d = new_x, new_d
        states.append(x.copy())
        snaps.append(x_d.copy())
        if config.atol > 0 and moved <= config.atol:
            log.info("stopping after slot %d: displacement %g <= atol", m, moved)
            break

    slot_states = np.array(states)
    F = np.array([global_objective(problem, s) for s in slot_states])
    nAx = np.array([constraint_residual(problem, s)[1] for s in slot_states])
    updates = None
    if record:
        updates = {k: np.array(v) for k, v in cols.items() if k != "x"}
        updates["x"] = np.array(cols["x"]).reshape(-1, M)
    trace = Trace(problem, schedule, params, slot_states, np.array(snaps), F, nAx, updates)
    if config.debug != "off":
        from .certificate import debug_identities
        trace.violations = debug_identities(trace, config.debug)
    return trace


def _fmt(v):
    return repr(float(v))


def write_trace_csv(trace, fh):
    """Write update rows and slot-boundary rows, ordered by time.

    Update rows carry the full network state after the update and the
    ``alpha, theta, eta`` used; boundary rows carry ``x(t_m)``, ``F``,
    ``||Ax||`` and ``alpha(t_m - 1)``.
    """
    if trace.updates is None:
        raise ValueError("trace was recorded without update history")
    p, sched, prm = trace.problem, trace.schedule, trace.params
    M, NM = p.block_dim, p.dim
    header = ["slot", "t", "agent", "event"] + [f"x{k}" for k in range(NM)] + \
        ["F", "normAx", "alpha", "theta", "eta"]
    lines = [",".join(header)]
    u = trace.updates
    order = np.lexsort((u["agent"], u["t"]))
    x = trace.x_init.copy()
    k = 0
    H = sched.H

    def boundary(m):
        xs = trace.slot_states[m]
        row = [str(m), str(m * H), "", "boundary"] + [_fmt(v) for v in xs] + \
            [_fmt(trace.F[m]), _fmt(trace.normAx[m]), _fmt(prm.alpha_slot_end(m)), "", ""]
        lines.append(",".join(row))

    for m in range(1, trace.num_slots + 1):
        boundary(m)
        while k < order.size and u["slot"][order[k]] == m:
            j = order[k]
            i = int(u["agent"][j])
            x[i * M:(i + 1) * M] = u["x"][j]
            row = [str(m), str(int(u["t"][j])), str(i), "update"] + [_fmt(v) for v in x] + \
                ["", "", _fmt(u["alpha"][j]), _fmt(u["theta"][j]), _fmt(u["eta"][j])]
            lines.append(",".join(row))
            k += 1
    boundary(trace.num_slots + 1)
    fh.write("\n".join(lines) + "\n")


def trace_csv(trace):
    buf = io.StringIO()
    write_trace_csv(trace, buf)
    return buf.getvalue()


def read_boundary_rows(path):
    """Slot-boundary rows of a trace CSV as ``(slot, F, normAx)`` arrays."""
    import csv
    slots, F, nAx = [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["event"] == "boundary":
                slots.append(int(row["slot"]))
                F.append(float(row["F"]))
                nAx.append(float(row["normAx"]))
    return np.array(slots), np.array(F), np.array(nAx)
