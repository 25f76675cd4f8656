"""Slot grids, action clocks and delay schedules.

Time is discrete, ``t_m = m*H``.  Slot 0 is history; the algorithm acts in
slots ``1..num_slots``.  Clocks are stored per agent as a list over slots
``1..num_slots`` of sorted action instants, and delays as the snapshot
instants ``tau(t_m)`` for ``m = 1..num_slots+1`` (the last one closes the
final slot).
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .errors import DelayBoundViolated, InvalidFraction


def round_half_up(x):
    # tolerance absorbs products like 0.7*15 landing a hair below .5
    return int(math.floor(x + 0.5 + 1e-9))


@dataclass(frozen=True)
class SlotConfig:
    H: int
    D: int
    num_slots: int
    seed: int = 0

    def __post_init__(self):
        if int(self.H) != self.H or self.H < 1:
            raise ValueError(f"H must be a positive integer, got {self.H!r}")
        if int(self.D) != self.D or not 1 <= self.D <= self.H:
            raise DelayBoundViolated(f"need 1 <= D <= H, got D={self.D}, H={self.H}")
        if int(self.num_slots) != self.num_slots or self.num_slots < 1:
            raise ValueError(f"num_slots must be a positive integer, got {self.num_slots!r}")


def build_slots(H, num_slots):
    """Slot boundaries ``t_m = m*H`` for ``m = 0..num_slots``."""
    if H < 1:
        raise ValueError("H must be >= 1")
    return np.arange(num_slots + 1, dtype=np.int64) * H


@dataclass(frozen=True)
class ActionClock:
    """``instants[i][m-1]`` is the sorted tuple of agent ``i``'s instants in slot ``m``."""

    H: int
    instants: tuple

    @property
    def n_agents(self):
        return len(self.instants)

    @property
    def num_slots(self):
        return len(self.instants[0]) if self.instants else 0

    def slot(self, i, m):
        return self.instants[i][m - 1]

    def P(self, i, m):
        """Update count of agent ``i`` in slot ``m``; slot 0 mirrors slot 1."""
        return len(self.instants[i][max(m, 1) - 1])


def _count_for(spec, H, rng):
    if spec == "random":
        return int(rng.integers(1, H + 1))
    kind, val = spec
    if kind == "fixed":
        return val
    return max(1, round_half_up(val * H))


def generate_action_clock(n_agents, H, num_slots, rng, fractions=None, fixed=None):
    """Draw action instants for every agent and slot.

    Per slot, agent ``i`` acts ``P_{i,m}`` times at instants drawn uniformly
    without replacement from the ``H`` ticks of the slot.  The count is
    ``max(1, round(p*H))`` for a fraction ``p``, a fixed ``P``, or (for
    ``"random"``) uniform on ``{1..H}`` redrawn every slot.

    Parameters
    ----------
    n_agents, H, num_slots : int
    rng : numpy.random.Generator
    fractions : float, sequence or "random", optional
        Per-agent fraction(s) in ``(0, 1]`` or the string ``"random"``
        (per agent entries may also be ``"random"``).
    fixed : int or sequence of int, optional
        Per-agent fixed counts in ``[1, H]``; overrides ``fractions``.

    Raises
    ------
    InvalidFraction
        A fraction outside ``(0, 1]`` or a fixed count outside ``[1, H]``.
    """
    if fixed is not None:
        fixed = [fixed] * n_agents if np.isscalar(fixed) else list(fixed)
        if len(fixed) != n_agents:
            raise InvalidFraction(f"{len(fixed)} fixed counts for {n_agents} agents")
        specs = []
        for P in fixed:
            if int(P) != P or not 1 <= P <= H:
                raise InvalidFraction(f"fixed count {P} outside [1, {H}]")
            specs.append(("fixed", int(P)))
    else:
        if fractions is None:
            fractions = 1.0
        if isinstance(fractions, str) or np.isscalar(fractions):
            fractions = [fractions] * n_agents
        if len(fractions) != n_agents:
            raise InvalidFraction(f"{len(fractions)} fractions for {n_agents} agents")
        specs = []
        for p in fractions:
            if p == "random":
                specs.append("random")
                continue
            if isinstance(p, str) or not 0.0 < float(p) <= 1.0:
                raise InvalidFraction(f"fraction {p!r} outside (0, 1]")
            specs.append(("fraction", float(p)))
    clocks = [[] for _ in range(n_agents)]
    for m in range(1, num_slots + 1):
        t_m = m * H
        for i in range(n_agents):
            P = _count_for(specs[i], H, rng)
            ticks = np.sort(rng.choice(H, size=P, replace=False))
            clocks[i].append(tuple(int(t_m + k) for k in ticks))
    return ActionClock(H, tuple(tuple(c) for c in clocks))


@dataclass(frozen=True)
class DelaySchedule:
    """``taus[k]`` is the snapshot instant ``tau(t_{k+1})``."""

    H: int
    D: int
    taus: tuple
    mode: str = "worst"

    def tau(self, m):
        return self.taus[m - 1]

    def delay(self, m):
        return m * self.H - self.taus[m - 1]


def generate_delay_schedule(cfg, mode="worst", rng=None, delays=None):
    """Snapshot instants for slots ``1..num_slots+1``.

    ``worst`` uses ``tau(t_m) = t_m - D``; ``random`` draws the delay
    uniformly from ``{0..D}`` once per slot (shared by all agents);
    ``fixed`` takes caller-supplied delays ``t_m - tau(t_m)``.
    """
    n = cfg.num_slots + 1
    if mode == "worst":
        d = [cfg.D] * n
    elif mode == "random":
        if rng is None:
            rng = np.random.default_rng(cfg.seed)
        d = [int(v) for v in rng.integers(0, cfg.D + 1, size=n)]
    elif mode in ("fixed", "fixed-list"):
        if delays is None or len(delays) != n:
            raise DelayBoundViolated(f"need {n} delays, got {None if delays is None else len(delays)}")
        d = [int(v) for v in delays]
        for k, v in enumerate(d):
            if not 0 <= v <= cfg.D:
                raise DelayBoundViolated(f"slot {k + 1}: delay {v} outside [0, {cfg.D}]")
        mode = "fixed"
    else:
        raise ValueError(f"unknown delay mode {mode!r}")
    taus = tuple((k + 1) * cfg.H - v for k, v in enumerate(d))
    return DelaySchedule(cfg.H, cfg.D, taus, mode)


def compute_n_im(clock, tau_next, i, m):
    """Index (1-based) of agent ``i``'s last slot-``m`` action at or before ``tau_next``.

    Returns 0 when every slot-``m`` action is later than ``tau_next``; the
    snapshot then equals the agent's slot-entry state.
    """
    n = 0
    for k, t in enumerate(clock.slot(i, m), start=1):
        if t <= tau_next:
            n = k
        else:
            break
    return n


@dataclass(frozen=True)
class Violation:
    assumption: str
    slot: int
    agent: object
    message: str

    def __str__(self):
        who = "" if self.agent is None else f" agent {self.agent}"
        return f"[{self.assumption}] slot {self.slot}{who}: {self.message}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    def __bool__(self):
        return not self.violations

    @property
    def ok(self):
        return not self.violations

    def add(self, *args):
        self.violations.append(Violation(*args))


def validate_schedule(cfg, clock, delays):
    """Check slot grid, clocks and delays; problems come back as data."""
    rep = ValidationReport()
    H, D = cfg.H, cfg.D
    if not 1 <= D <= H:
        rep.add("A7", 0, None, f"delay bound D={D} outside [1, H={H}]")
    if clock.H != H:
        rep.add("A4", 0, None, f"clock built for H={clock.H}, config has H={H}")
    for i in range(clock.n_agents):
        if len(clock.instants[i]) != cfg.num_slots:
            rep.add("A4", 0, i, f"{len(clock.instants[i])} slots in clock, expected {cfg.num_slots}")
    if len(delays.taus) != cfg.num_slots + 1:
        rep.add("A7", 0, None, f"{len(delays.taus)} delays, expected {cfg.num_slots + 1}")
    for m in range(1, len(delays.taus) + 1):
        t_m = m * H
        d = t_m - delays.tau(m)
        if not 0 <= d <= D:
            rep.add("A7", m, None, f"delay {d} outside [0, {D}]")
    for i in range(clock.n_agents):
        for m in range(1, min(len(clock.instants[i]), cfg.num_slots) + 1):
            t_m, t_next = m * H, (m + 1) * H
            ins = clock.slot(i, m)
            if not ins:
                rep.add("A5", m, i, "no action in slot")
                continue
            if any(b <= a for a, b in zip(ins, ins[1:])):
                rep.add("A5", m, i, "instants not strictly increasing")
            if ins[0] < t_m or ins[-1] >= t_next:
                rep.add("A4", m, i, f"instants {ins} leave [{t_m}, {t_next})")
                continue
            # ordering t_m^(P) <= t_{m+1}-1 < t_{m+1} <= t_{m+1}^(1)
            if m < cfg.num_slots and m < len(clock.instants[i]):
                nxt = clock.slot(i, m + 1)
                if nxt and not (ins[-1] <= t_next - 1 < t_next <= nxt[0]):
                    rep.add("P1", m, i, "slot ordering broken")
            if m + 1 <= len(delays.taus):
                tau = delays.tau(m + 1)
                n = compute_n_im(clock, tau, i, m)
                if n >= 1:
                    P = len(ins)
                    # a zero delay makes the lag -1; the snapshot is then the slot-end state
                    lag = t_next - 1 - tau
                    if not (P - n <= max(lag, 0) and lag <= D - 1):
                        rep.add("E12", m, i, f"P-n={P - n}, t_(m+1)-1-tau={lag}, D-1={D - 1}")
    return rep


@dataclass(frozen=True)
class Schedule:
    """A full SAN realization: config, action clocks and delays."""

    config: SlotConfig
    clock: ActionClock
    delays: DelaySchedule

    @property
    def H(self):
        return self.config.H

    @property
    def D(self):
        return self.config.D

    @property
    def num_slots(self):
        return self.config.num_slots

    def validate(self):
        return validate_schedule(self.config, self.clock, self.delays)

    def to_dict(self):
        return {
            "H": self.config.H, "D": self.config.D, "num_slots": self.config.num_slots,
            "seed": self.config.seed, "delay_mode": self.delays.mode,
            "clocks": [[list(s) for s in agent] for agent in self.clock.instants],
            "delays": list(self.delays.taus),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d):
        cfg = SlotConfig(d["H"], d["D"], d["num_slots"], d.get("seed", 0))
        clock = ActionClock(cfg.H, tuple(tuple(tuple(s) for s in agent) for agent in d["clocks"]))
        delays = DelaySchedule(cfg.H, cfg.D, tuple(d["delays"]), d.get("delay_mode", "fixed"))
        return cls(cfg, clock, delays)


def make_schedule(n_agents, H, D, num_slots, seed=0, delay_mode="worst",
                  fractions=None, fixed=None, delays=None):
    """Generate a seeded schedule; clocks and random delays use independent streams."""
    cfg = SlotConfig(H, D, num_slots, seed)
    clock_ss, delay_ss = np.random.SeedSequence(seed).spawn(2)
    clock = generate_action_clock(n_agents, H, num_slots, np.random.default_rng(clock_ss),
                                  fractions=fractions, fixed=fixed)
    dl = generate_delay_schedule(cfg, delay_mode, np.random.default_rng(delay_ss), delays)
    return Schedule(cfg, clock, dl)
