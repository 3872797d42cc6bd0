"""
The Goemans-Williamson vector relaxation for Max-2-LIN(Z2).

Objective (lower is better)::

    1/(4W) * sum_e w_e * ||x_u - s_e x_v||^2,   ||x_u|| = 1

with ``s_e = +1`` on equality edges and ``-1`` on inequality edges, and ``W``
the total edge weight (the edge count for unweighted graphs).

The numerical solver is a low-rank block coordinate descent: a vertex's best
vector given its neighbours is the normalized signed neighbour sum.  Vertices
of one colour class have no edges among themselves, so a whole class is
updated at once; for a bipartite graph this is exactly sequential
Gauss-Seidel in (class, vertex) order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
import scipy.sparse as sp

from .core import (
    Assignment,
    CubeError,
    GuardError,
    HypercubeInstance,
    SignedGraph,
    popcount,
    tensor_product,
    unsatisfied_count,
)

UNIT_TOL = 1e-9
MAX_MATERIALIZED_DIM = 20
MAX_AMPLIFIED_DIM = 24


@dataclass(frozen=True, eq=False)
class VectorSolution:
    """One unit vector per vertex; ``d`` is None for graphs that are not cubes."""

    vectors: np.ndarray
    d: int | None = None

    def __post_init__(self):
        x = np.array(self.vectors, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] < 1:
            raise CubeError(f"vectors must be a 2-D array with rank >= 1, got shape {x.shape}")
        if self.d is not None and x.shape[0] != 1 << self.d:
            raise CubeError(f"expected {1 << self.d} vectors for d={self.d}, got {x.shape[0]}")
        err = np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0)) if len(x) else 0.0
        if err > UNIT_TOL:
            raise CubeError(f"vectors are not unit length (max deviation {err:.3g})")
        x.flags.writeable = False
        object.__setattr__(self, "vectors", x)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def r(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class SolverParams:
    rank: int | None = None  # None: ceil(sqrt(2n)) + 1
    max_sweeps: int = 5000
    tol: float = 1e-10
    seed: int = 0
    restarts: int = 3

    def __post_init__(self):
        if self.rank is not None and self.rank < 2:
            raise CubeError(f"rank must be >= 2, got {self.rank}")
        if not self.tol > 0:
            raise CubeError("tol must be positive")
        if self.max_sweeps < 1 or self.restarts < 1:
            raise CubeError("max_sweeps and restarts must be >= 1")


def default_rank(n: int) -> int:
    return math.isqrt(2 * n - 1) + 2 if n > 0 else 2  # ceil(sqrt(2n)) + 1


@dataclass
class GWResult:
    solution: VectorSolution
    value: float
    sweeps: int
    converged: bool
    history: list[float] = field(default_factory=list, repr=False)


def as_graph(instance) -> SignedGraph:
    if isinstance(instance, HypercubeInstance):
        return instance.signed_graph()
    if isinstance(instance, SignedGraph):
        return instance
    raise CubeError(f"expected a HypercubeInstance or SignedGraph, got {type(instance).__name__}")


def _weights(graph: SignedGraph) -> np.ndarray:
    w = getattr(graph, "weight", None)
    return np.ones(graph.n_edges) if w is None else np.asarray(w, dtype=np.float64)


def objective(graph: SignedGraph, x: np.ndarray) -> float:
    w = _weights(graph)
    diff = x[graph.u] - graph.sign[:, None] * x[graph.v]
    return float(np.dot(w, np.einsum("ij,ij->i", diff, diff)) / (4.0 * w.sum()))


def sdp_value(instance, solution: VectorSolution) -> float:
    graph = as_graph(instance)
    if solution.n != graph.n:
        raise CubeError(f"solution has {solution.n} vectors, instance has {graph.n} vertices")
    return objective(graph, solution.vectors)


def integral_solution(assignment: Assignment) -> VectorSolution:
    """Label 1 maps to +e_1 and label 0 to -e_1 (rank 1)."""
    signs = 2.0 * assignment.labels.astype(np.float64) - 1.0
    return VectorSolution(signs[:, None], assignment.d)


# -- the explicit planar solution for delta(k, d) ----------------------------

def _ramp_angle(i, m: int, t: float) -> np.ndarray:
    """Angle for suffix weight ``i`` in an even-parity subcube of dimension ``m``."""
    i = np.asarray(i, dtype=np.float64)
    mid = m / 2.0
    ramp = np.pi / 4.0 * (1.0 - (mid - i) / t)
    return np.where(i <= mid - t, 0.0, np.where(i >= mid + t, np.pi / 2.0, ramp))


def analytic_angles(k: int, d: int, t: float, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.int64)
    base = _ramp_angle(popcount(v >> k), d - k, t)
    odd = popcount(v & ((1 << k) - 1)) & 1
    return np.where(odd == 1, np.pi - base, base)


def _check_kdt(k: int, d: int, t: float) -> None:
    if not 1 <= k < d:
        raise CubeError(f"need 1 <= k < d, got k={k}, d={d}")
    if not t > 0:
        raise CubeError(f"t must be positive, got {t}")


def analytic_solution(k: int, d: int, t: float | None = None) -> VectorSolution:
    """Rank-2 solution: angle depends on the prefix parity and the suffix weight only."""
    t = default_t(k, d) if t is None else t
    _check_kdt(k, d, t)
    if d > MAX_MATERIALIZED_DIM:
        raise GuardError(f"materialized solutions are limited to d <= {MAX_MATERIALIZED_DIM}")
    a = analytic_angles(k, d, t, np.arange(1 << d))
    return VectorSolution(np.stack([np.cos(a), np.sin(a)], axis=1), d)


def default_t(k: int, d: int) -> float:
    return math.sqrt((d - k) / k)


def analytic_delta_value(k: int, d: int, t: float | None = None) -> tuple[float, float]:
    """Objective of ``analytic_solution`` summed layer by layer (no per-vertex work).

    With m = d - k and p_i = C(m, i) / 2^m, the value is
    ``(sum_i p_i (m - i) w_i + (k/2) sum_i p_i c_i) / (2d)`` where ``w_i`` is the
    cost of an inner edge between layers i and i+1 and ``c_i`` the cost of a
    cross edge at layer i.
    """
    t = default_t(k, d) if t is None else t
    _check_kdt(k, d, t)
    m = d - k
    i = np.arange(m + 1)
    a = _ramp_angle(i, m, t)
    p = np.array([comb(m, j) for j in range(m + 1)], dtype=np.float64) / 2.0**m
    inner = 2.0 - 2.0 * np.cos(a[:-1] - a[1:])
    # partner angle is pi - a; inequality edges cost ||x+y||^2, equality ||x-y||^2
    cross = np.where(2 * i <= m, 2.0 - 2.0 * np.cos(2 * a), 2.0 + 2.0 * np.cos(2 * a))
    total = np.dot(p[:-1] * (m - i[:-1]), inner) + k / 2.0 * np.dot(p, cross)
    return float(total / (2 * d)), t


# -- symmetry-reduced graph for delta(k, d) ----------------------------------

@dataclass(frozen=True, eq=False)
class WeightedSignedGraph(SignedGraph):
    weight: np.ndarray = None

    def __post_init__(self):
        super().__post_init__()
        w = np.asarray(self.weight, dtype=np.float64)
        w.flags.writeable = False
        object.__setattr__(self, "weight", w)


def layered_delta_graph(k: int, d: int) -> WeightedSignedGraph:
    """Quotient of delta(k, d) by permutations of the suffix coordinates.

    Node ``x * (m + 1) + i`` stands for the C(m, i) vertices with prefix ``x`` and
    suffix weight ``i``; edge weights count the hypercube edges they replace, so
    the weighted objective of class vectors equals ``sdp_value`` of the lift.
    """
    if not 1 <= k < d:
        raise CubeError(f"need 1 <= k < d, got k={k}, d={d}")
    m = d - k
    u, v, s, w = [], [], [], []
    for x in range(1 << k):
        for i in range(m):
            u.append(x * (m + 1) + i)
            v.append(x * (m + 1) + i + 1)
            s.append(1)
            w.append(comb(m, i) * (m - i))
        for j in range(k):
            if x >> j & 1:
                continue
            y = x | 1 << j
            for i in range(m + 1):
                u.append(x * (m + 1) + i)
                v.append(y * (m + 1) + i)
                s.append(-1 if 2 * i <= m else 1)
                w.append(comb(m, i))
    return WeightedSignedGraph((1 << k) * (m + 1), u, v, s, weight=np.array(w, dtype=np.float64))


def lift_layered(k: int, d: int, classes: np.ndarray) -> VectorSolution:
    if d > MAX_MATERIALIZED_DIM:
        raise GuardError(f"materialized solutions are limited to d <= {MAX_MATERIALIZED_DIM}")
    v = np.arange(1 << d)
    node = (v & ((1 << k) - 1)) * (d - k + 1) + popcount(v >> k)
    return VectorSolution(np.asarray(classes)[node], d)


# -- solver -------------------------------------------------------------------

def _signed_adjacency(graph: SignedGraph) -> sp.csr_matrix:
    w = _weights(graph) * graph.sign
    a = sp.coo_matrix((np.concatenate([w, w]), (np.concatenate([graph.u, graph.v]), np.concatenate([graph.v, graph.u]))),
                      shape=(graph.n, graph.n))
    return a.tocsr()


def color_classes(graph: SignedGraph) -> list[np.ndarray]:
    """Two BFS classes when the graph is bipartite, else a greedy colouring."""
    n = graph.n
    adj = sp.coo_matrix((np.ones(2 * graph.n_edges), (np.concatenate([graph.u, graph.v]),
                                                       np.concatenate([graph.v, graph.u]))), shape=(n, n)).tocsr()
    level = np.full(n, -1)
    for root in range(n):
        if level[root] >= 0:
            continue
        level[root] = 0
        frontier = np.zeros(n, dtype=bool)
        frontier[root] = True
        depth = 0
        while frontier.any():
            depth += 1
            reached = (adj.T @ frontier.astype(np.float64)) > 0
            new = reached & (level < 0)
            level[new] = depth
            frontier = new
    color = level & 1
    if np.all(color[graph.u] != color[graph.v]):
        return [np.flatnonzero(color == 0), np.flatnonzero(color == 1)]
    colors = np.full(n, -1)
    for vtx in range(n):
        used = set(colors[adj.indices[adj.indptr[vtx]:adj.indptr[vtx + 1]]].tolist())
        colors[vtx] = next(c for c in range(n) if c not in used)
    return [np.flatnonzero(colors == c) for c in range(colors.max() + 1)]


def _random_unit(rng: np.random.Generator, n: int, r: int) -> np.ndarray:
    x = rng.standard_normal((n, r))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def _descend(graph, blocks, x, params: SolverParams) -> tuple[np.ndarray, float, int, bool, list[float]]:
    cur = objective(graph, x)
    history = [cur]
    for sweep in range(1, params.max_sweeps + 1):
        for rows, a_rows in blocks:
            g = a_rows @ x
            norm = np.linalg.norm(g, axis=1)
            ok = norm > 1e-300
            x[rows[ok]] = g[ok] / norm[ok, None]
        prev, cur = cur, objective(graph, x)
        history.append(cur)
        if prev - cur <= params.tol * cur + 1e-16:
            return x, cur, sweep, True, history
    return x, cur, params.max_sweeps, False, history


def solve_gw(instance, params: SolverParams = SolverParams(), init: np.ndarray | None = None) -> GWResult:
    """Best of ``params.restarts`` seeded coordinate-descent runs.

    The returned value is an upper bound on the SDP optimum.  ``init`` replaces
    the random start of every restart (useful for warm starts).
    """
    graph = as_graph(instance)
    d = instance.d if isinstance(instance, HypercubeInstance) else None
    r = params.rank if params.rank is not None else default_rank(graph.n)
    a = _signed_adjacency(graph)
    blocks = [(rows, a[rows]) for rows in color_classes(graph)]
    best = None
    for child in np.random.SeedSequence(params.seed).spawn(params.restarts):
        rng = np.random.default_rng(child)
        x0 = _random_unit(rng, graph.n, r) if init is None else np.array(init, dtype=np.float64)
        x, val, sweeps, conv, hist = _descend(graph, blocks, x0, params)
        if best is None or val < best.value:
            best = GWResult(VectorSolution(x, d), val, sweeps, conv, hist)
        if init is not None:
            break
    return best


def solve_gw_layered(k: int, d: int, params: SolverParams = SolverParams()) -> GWResult:
    """Coordinate descent restricted to suffix-permutation-symmetric solutions of delta(k, d).

    Any such solution lifts to a feasible point of the full relaxation with the
    same objective, so this is an upper bound usable at any d.
    """
    return solve_gw(layered_delta_graph(k, d), params)


# -- rounding -----------------------------------------------------------------

def hyperplane_round(instance: HypercubeInstance, solution: VectorSolution, trials: int = 100,
                     seed: int = 0) -> tuple[Assignment, Fraction]:
    """Best of ``trials`` random-hyperplane roundings.

    Each Gaussian direction is oriented so its first coordinate is nonnegative;
    label 1 means a positive inner product.  Directions hitting a vertex
    exactly (zero inner product) are redrawn.
    """
    if solution.n != instance.n_vertices:
        raise CubeError("solution and instance sizes differ")
    rng = np.random.default_rng(seed)
    x = solution.vectors
    lower, upper, bit = instance.edges()
    best_count, best_labels = None, None
    for _ in range(trials):
        while True:
            g = rng.standard_normal(solution.r)
            if g[0] < 0:
                g = -g
            proj = x @ g
            if np.all(proj != 0):
                break
        labels = (proj > 0).astype(np.int64)
        count = int(np.count_nonzero((labels[lower] ^ labels[upper]) != bit))
        if best_count is None or count < best_count:
            best_count, best_labels = count, labels
    a = Assignment(instance.d, best_labels)
    return a, Fraction(unsatisfied_count(instance, a), instance.n_edges)


# -- tensor products ----------------------------------------------------------

def tensor_solution(first: VectorSolution, second: VectorSolution) -> VectorSolution:
    """Vertex ``v1 + (v2 << d1)`` gets ``kron(first[v1], second[v2])``."""
    if first.d is None or second.d is None:
        raise CubeError("tensor products need hypercube solutions")
    x = np.einsum("ai,bj->baij", first.vectors, second.vectors)
    return VectorSolution(x.reshape(first.n * second.n, first.r * second.r), first.d + second.d)


def amplify(instance: HypercubeInstance, copies: int) -> HypercubeInstance:
    if copies < 1:
        raise CubeError(f"copies must be >= 1, got {copies}")
    if instance.d * copies > MAX_AMPLIFIED_DIM:
        raise GuardError(f"amplified dimension {instance.d * copies} exceeds {MAX_AMPLIFIED_DIM}")
    out = instance
    for _ in range(copies - 1):
        out = tensor_product(out, instance)
    return out


def amplify_solution(solution: VectorSolution, copies: int) -> VectorSolution:
    if copies < 1:
        raise CubeError(f"copies must be >= 1, got {copies}")
    out = solution
    for _ in range(copies - 1):
        out = tensor_solution(out, solution)
    return out


# -- serialization ------------------------------------------------------------

def serialize_solution(solution: VectorSolution) -> str:
    rows = ",".join("[" + ",".join(format(float(c), ".17g") for c in row) + "]" for row in solution.vectors)
    d = "null" if solution.d is None else str(solution.d)
    return f'{{"d": {d}, "r": {solution.r}, "vectors": [{rows}]}}'


def parse_solution(text: str) -> VectorSolution:
    import json

    try:
        data = json.loads(text)
        x = np.array(data["vectors"], dtype=np.float64)
        r = int(data["r"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CubeError(f"malformed solution file: {exc}") from exc
    if x.ndim != 2 or x.shape[1] != r:
        raise CubeError(f"vectors do not have rank {r}")
    return VectorSolution(x, data.get("d"))
