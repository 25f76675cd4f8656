"""Composite problems ``min sum_i f_i(x_i) + h_i(x_i)  s.t.  A x = 0``."""

from dataclasses import dataclass, field
import json
import math

import numpy as np

from .errors import DimensionMismatch, NonStronglyConvexAgent
from .functions import BoxProx, QuadraticSmooth, prox_from_dict, smooth_from_dict
from .linalg import top_eigenvalue


@dataclass(frozen=True)
class AgentObjective:
    """``F_i = f_i + h_i`` for one agent."""

    smooth: object
    proximable: object

    def __post_init__(self):
        pdim = getattr(self.proximable, "dim", None)
        if pdim is not None and pdim != self.smooth.dim:
            raise DimensionMismatch(
                f"smooth part has dim {self.smooth.dim}, prox part {pdim}")

    @property
    def dim(self):
        return self.smooth.dim

    def evaluate(self, x):
        h = self.proximable.evaluate(x)
        if math.isinf(h):
            return math.inf
        return self.smooth.evaluate(x) + h

    def to_dict(self):
        return {"smooth": self.smooth.to_dict(), "prox": self.proximable.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(smooth_from_dict(d["smooth"]), prox_from_dict(d["prox"]))


@dataclass(frozen=True)
class ConstraintMatrix:
    """Column-blocked coupling matrix ``A = (A_1, ..., A_N)``.

    ``storage`` is ``"dense"`` or ``"incidence"``; incidence matrices also
    keep their ``edges`` so they serialize compactly.
    """

    blocks: tuple
    storage: str = "dense"
    edges: tuple = None

    @classmethod
    def from_dense(cls, A, n_agents):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[1] % n_agents:
            raise DimensionMismatch(
                f"{A.shape[1]} columns cannot be split into {n_agents} equal blocks")
        m = A.shape[1] // n_agents
        return cls(tuple(A[:, i * m:(i + 1) * m].copy() for i in range(n_agents)))

    @property
    def rows(self):
        return self.blocks[0].shape[0]

    @property
    def n_agents(self):
        return len(self.blocks)

    @property
    def dense(self):
        return np.hstack(self.blocks)

    def to_dict(self):
        if self.storage == "incidence":
            return {"B": self.rows, "block_dim": self.blocks[0].shape[1],
                    "n_agents": self.n_agents, "edges": [list(e) for e in self.edges]}
        return {"B": self.rows, "blocks": [b.tolist() for b in self.blocks]}

    @classmethod
    def from_dict(cls, d):
        if "edges" in d:
            from .problems import GraphSpec, incidence_matrix
            return incidence_matrix(GraphSpec(d["n_agents"], d["edges"]), d["block_dim"])
        blocks = tuple(np.asarray(b, dtype=float).reshape(d["B"], -1) for b in d["blocks"])
        return cls(blocks)


def spectral_norm(A, rtol=1e-10, maxiter=10000):
    """Largest singular value of ``A`` via power iteration on ``A'A``.

    Raises :class:`ConvergenceFailure` if the iteration cap is hit.
    """
    if isinstance(A, ConstraintMatrix):
        A = A.dense
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.size == 0:
        raise DimensionMismatch("empty matrix")
    lam = top_eigenvalue(lambda v: A.T @ (A @ v), A.shape[1], rtol, maxiter)
    return math.sqrt(max(lam, 0.0))


@dataclass(frozen=True)
class ProblemInstance:
    agents: tuple
    constraint: ConstraintMatrix
    norm_A: float
    Lg: float
    mu: float
    # nonzero blocks W_ij = A_i' A_j keyed by (i, j)
    W: dict = field(repr=False)

    @property
    def n_agents(self):
        return len(self.agents)

    @property
    def block_dim(self):
        return self.agents[0].dim

    @property
    def dim(self):
        return self.n_agents * self.block_dim

    def neighbors(self, i):
        """Agents ``j`` (including ``i``) with a nonzero ``W_ij``."""
        return [j for j in range(self.n_agents) if (i, j) in self.W]

    def blocks_of(self, x):
        return np.asarray(x, dtype=float).reshape(self.n_agents, self.block_dim)

    def W_row(self, i, x):
        """``W_i x`` touching only the nonzero blocks of row ``i``."""
        xb = self.blocks_of(x)
        out = np.zeros(self.block_dim)
        for j in self.neighbors(i):
            out += self.W[i, j] @ xb[j]
        return out

    def to_dict(self):
        return {
            "agents": [a.to_dict() for a in self.agents],
            "A": self.constraint.to_dict(),
            "derived": {"norm_A": self.norm_A, "Lg": self.Lg, "mu": self.mu},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def assemble_problem(agents, A, slack_regularization=None):
    """Build a :class:`ProblemInstance` and its derived constants.

    Parameters
    ----------
    agents : sequence of AgentObjective
    A : ConstraintMatrix or array_like
        A dense ``B x NM`` array is split into equal column blocks.
    slack_regularization : float, optional
        Unused unless an agent is not strongly convex: such agents then get
        ``eps*||y||^2`` added to their smooth part instead of being rejected.

    Raises
    ------
    DimensionMismatch
        Inconsistent block shapes.
    NonStronglyConvexAgent
        Some ``mu_i <= 0`` and no regularization was requested.
    """
    agents = tuple(agents)
    if not agents:
        raise DimensionMismatch("need at least one agent")
    if not isinstance(A, ConstraintMatrix):
        A = ConstraintMatrix.from_dense(A, len(agents))
    if A.n_agents != len(agents):
        raise DimensionMismatch(f"{A.n_agents} column blocks for {len(agents)} agents")
    M = agents[0].dim
    for i, (a, blk) in enumerate(zip(agents, A.blocks)):
        if a.dim != M:
            raise DimensionMismatch(f"agent {i} has dim {a.dim}, expected {M}")
        if blk.shape != (A.rows, M):
            raise DimensionMismatch(f"block {i} has shape {blk.shape}, expected {(A.rows, M)}")
    fixed = []
    for i, a in enumerate(agents):
        if not a.smooth.strong_convexity > 0:
            if slack_regularization is None:
                raise NonStronglyConvexAgent(
                    f"agent {i} has mu={a.smooth.strong_convexity}")
            a = regularize(a, slack_regularization)
        fixed.append(a)
    agents = tuple(fixed)
    W = {}
    for i in range(len(agents)):
        for j in range(len(agents)):
            blk = A.blocks[i].T @ A.blocks[j]
            if np.any(blk != 0.0):
                W[i, j] = blk
    return ProblemInstance(
        agents=agents,
        constraint=A,
        norm_A=spectral_norm(A),
        Lg=max(a.smooth.lipschitz for a in agents),
        mu=min(a.smooth.strong_convexity for a in agents),
        W=W,
    )


def regularize(agent, eps=1e-6):
    """Add ``eps*||x||^2`` to a quadratic smooth part (slack variables)."""
    s = agent.smooth
    if not isinstance(s, QuadraticSmooth):
        raise NonStronglyConvexAgent("only quadratic smooth parts can be regularized")
    Q = s.Q + 2.0 * eps * np.eye(s.dim)
    return AgentObjective(QuadraticSmooth(Q, s.c, s.offset), agent.proximable)


def slack_agent(b, eps=1e-6):
    """Slack block ``y >= b`` of an inequality ``A x + b <= 0`` rewritten as ``A x + y = 0``."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    smooth = QuadraticSmooth(2.0 * eps * np.eye(b.size))
    return AgentObjective(smooth, BoxProx(b, np.full(b.size, math.inf)))


def _check_len(p, x):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != p.dim:
        raise DimensionMismatch(f"x has length {x.shape[0]}, expected {p.dim}")
    return x


def global_objective(p, x):
    """``F(x) = sum_i f_i(x_i) + h_i(x_i)``; ``inf`` if an indicator is violated."""
    xb = p.blocks_of(_check_len(p, x))
    total = 0.0
    for a, xi in zip(p.agents, xb):
        v = a.evaluate(xi)
        if math.isinf(v):
            return math.inf
        total += v
    return total


def constraint_residual(p, x):
    """Return ``(A x, ||A x||)``."""
    r = p.constraint.dense @ _check_len(p, x)
    return r, float(np.linalg.norm(r))


def problem_from_dict(d, rtol=1e-10):
    """Rebuild an instance and check the stored derived constants."""
    agents = [AgentObjective.from_dict(a) for a in d["agents"]]
    p = assemble_problem(agents, ConstraintMatrix.from_dict(d["A"]))
    stored = d.get("derived")
    if stored:
        for key, val in (("norm_A", p.norm_A), ("Lg", p.Lg), ("mu", p.mu)):
            ref = stored[key]
            if abs(val - ref) > rtol * max(abs(ref), 1e-300) and val != ref:
                raise ValueError(f"derived {key} mismatch: stored {ref}, recomputed {val}")
    return p


def load_problem(path):
    with open(path) as fh:
        return problem_from_dict(json.load(fh))
