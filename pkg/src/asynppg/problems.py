"""Built-in instances: consensus LASSO over a graph and a small electricity market."""

from dataclasses import dataclass
import logging
import math

import numpy as np

from .errors import DisconnectedGraph, SingularDesign
from .functions import BoxProx, CappedUtilitySmooth, L1Prox, QuadraticSmooth
from .problem import AgentObjective, ConstraintMatrix, assemble_problem

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GraphSpec:
    """Undirected graph on vertices ``0..n-1``."""

    n: int
    edges: tuple

    def __init__(self, n, edges):
        norm = []
        for e in edges:
            i, j = int(e[0]), int(e[1])
            if i == j or not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"bad edge {e!r} for {n} vertices")
            norm.append((i, j))
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", tuple(norm))

    @property
    def connected(self):
        seen = {0}
        stack = [0]
        adj = {v: set() for v in range(self.n)}
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        while stack:
            v = stack.pop()
            for w in adj[v] - seen:
                seen.add(w)
                stack.append(w)
        return len(seen) == self.n

    def laplacian(self):
        L = np.zeros((self.n, self.n))
        for i, j in self.edges:
            L[i, i] += 1.0
            L[j, j] += 1.0
            L[i, j] -= 1.0
            L[j, i] -= 1.0
        return L


def five_agent_graph():
    """The 5-agent test topology: edges 1-2, 2-3, 3-4, 1-4, 4-5 (0-based here)."""
    return GraphSpec(5, [(0, 1), (1, 2), (2, 3), (0, 3), (3, 4)])


def incidence_matrix(graph, block_dim=1):
    """Block incidence matrix: one ``block_dim``-row block per edge.

    The smaller endpoint of each edge gets ``+I`` and the larger ``-I``, so
    ``A'A = Laplacian kron I``.
    """
    if not graph.connected:
        raise DisconnectedGraph(f"graph with {graph.n} vertices is not connected")
    M = block_dim
    E = len(graph.edges)
    blocks = [np.zeros((E * M, M)) for _ in range(graph.n)]
    I = np.eye(M)
    for k, (i, j) in enumerate(graph.edges):
        lo, hi = min(i, j), max(i, j)
        blocks[lo][k * M:(k + 1) * M] = I
        blocks[hi][k * M:(k + 1) * M] = -I
    return ConstraintMatrix(tuple(blocks), storage="incidence", edges=graph.edges)


@dataclass(frozen=True)
class LassoInstance:
    P: tuple
    q: tuple
    x_hat: tuple
    noise: tuple
    rho: float
    graph: GraphSpec
    seed: int

    @property
    def n_agents(self):
        return len(self.P)

    @property
    def dim(self):
        return self.P[0].shape[1]

    def objective(self, z):
        """Centralized objective ``0.5 sum ||P_i z - q_i||^2 + rho ||z||_1``."""
        z = np.asarray(z, dtype=float)
        return sum(0.5 * float(np.sum((P @ z - q) ** 2)) for P, q in zip(self.P, self.q)) + \
            self.rho * float(np.sum(np.abs(z)))


def _lasso_agent_data(seed, i, attempt, dim, noise_var, sparsity):
    rng = np.random.default_rng(np.random.SeedSequence([seed, i, attempt]))
    # column-major fill: column k gets the k-th block of dim draws
    Pp = rng.standard_normal(dim * dim).reshape(dim, dim, order="F")
    P = Pp / np.linalg.norm(Pp, axis=0)
    x_hat = rng.standard_normal(dim)
    nz = int(math.floor(sparsity * dim + 0.5))
    if nz:
        x_hat[rng.choice(dim, size=nz, replace=False)] = 0.0
    noise = rng.normal(0.0, math.sqrt(noise_var), size=dim) if noise_var > 0 else np.zeros(dim)
    return P, x_hat, noise


def gen_lasso(seed=0, graph=None, dim=5, rho=10.0, noise_var=1e-3, sparsity=0.6):
    """Random consensus LASSO instance.

    Agent ``i`` draws from its own stream ``SeedSequence([seed, i, attempt])``
    in the order: design matrix (column-major), ground truth, zero positions,
    noise.  Designs with ``mu_i < 1e-10`` are redrawn with ``attempt + 1``.

    Returns
    -------
    (LassoInstance, ProblemInstance)
    """
    graph = graph or five_agent_graph()
    if dim < 1:
        raise ValueError("dim must be >= 1")
    Ps, qs, xs, ds, agents = [], [], [], [], []
    for i in range(graph.n):
        for attempt in range(100):
            P, x_hat, noise = _lasso_agent_data(seed, i, attempt, dim, noise_var, sparsity)
            q = P @ x_hat + noise
            smooth = QuadraticSmooth.least_squares(P, q)
            if smooth.strong_convexity >= 1e-10:
                break
            log.warning("agent %d: singular design (mu=%g), redrawing", i, smooth.strong_convexity)
        else:
            raise SingularDesign(f"agent {i}: no well-conditioned design in 100 draws")
        Ps.append(P)
        qs.append(q)
        xs.append(x_hat)
        ds.append(noise)
        agents.append(AgentObjective(smooth, L1Prox(rho / graph.n, dim)))
    inst = LassoInstance(tuple(Ps), tuple(qs), tuple(xs), tuple(ds), float(rho), graph, seed)
    return inst, assemble_problem(agents, incidence_matrix(graph, dim))


@dataclass(frozen=True)
class MarketInstance:
    kappa: tuple
    xi: tuple
    varpi: tuple
    uc_max: tuple
    nu: tuple
    varsigma: tuple
    user_max: tuple

    @property
    def n_uc(self):
        return len(self.kappa)

    @property
    def n_users(self):
        return len(self.nu)

    @property
    def row(self):
        return np.array([1.0] * self.n_uc + [-1.0] * self.n_users)


MARKET_TABLE = MarketInstance(
    kappa=(0.0031, 0.0074), xi=(8.71, 3.53), varpi=(0.0, 0.0), uc_max=(113.23, 179.1),
    nu=(17.17, 12.28, 18.42), varsigma=(0.0935, 0.0417, 0.1007), user_max=(91.79, 147.29, 91.41),
)


def market_instance(m=MARKET_TABLE):
    """Social-welfare problem: utility companies supply, users consume, supply = demand.

    Returns
    -------
    (MarketInstance, ProblemInstance)
    """
    agents = []
    for k, x, w, hi in zip(m.kappa, m.xi, m.varpi, m.uc_max):
        agents.append(AgentObjective(QuadraticSmooth.scalar(k, x, w), BoxProx([0.0], [hi])))
    for n, s, hi in zip(m.nu, m.varsigma, m.user_max):
        agents.append(AgentObjective(CappedUtilitySmooth(n, s), BoxProx([0.0], [hi])))
    A = m.row.reshape(1, -1)
    return m, assemble_problem(agents, A)


def convergence_error(trace, F_star):
    """``|F(x(t)) - F*|`` for every tick ``t = 0..t_{K+1}``.

    Only the agent that moved is re-evaluated at each update.
    """
    p = trace.problem
    M = p.block_dim
    u = trace.updates
    if u is None:
        raise ValueError("trace was recorded without update history")
    x0 = p.blocks_of(trace.x_init)
    parts = np.array([a.evaluate(x0[i]) for i, a in enumerate(p.agents)])
    T = (trace.num_slots + 1) * trace.schedule.H
    out = np.empty(T + 1)
    order = np.lexsort((u["agent"], u["t"]))
    k = 0
    for t in range(T + 1):
        out[t] = abs(float(np.sum(parts)) - F_star)
        while k < order.size and u["t"][order[k]] == t:
            j = order[k]
            i = int(u["agent"][j])
            parts[i] = p.agents[i].evaluate(u["x"][j])
            k += 1
    return out
