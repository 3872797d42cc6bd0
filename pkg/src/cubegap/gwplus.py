"""
The vector relaxation strengthened by l2^2 triangle inequalities, and the
cycle-packing lower bound that goes with it.

A signed triple (i, j, k; s_i, s_j, s_k) with middle vertex k asks
``||a_i - a_j||^2 <= ||a_i - a_k||^2 + ||a_k - a_j||^2`` for ``a = s x``.  For
unit vectors this is ``<a_i,a_k> + <a_k,a_j> - <a_i,a_j> - 1 <= 0``.  The
left side is the *violation*.  Flipping all three signs changes nothing, so
only ``s_k = +1`` is stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize
import scipy.sparse as sp

from .certify import certificate_bound  # noqa: F401  (part of this module's surface)
from .core import CubeError, GuardError, HypercubeInstance
from .sdp import SolverParams, VectorSolution, _weights, as_graph, default_rank, objective, solve_gw

MAX_GWPLUS_VERTICES = 256
FULL_ENUMERATION_VERTICES = 64
SAMPLES_PER_ROUND = 10**6
MAX_ROUNDS = 20
LAMBDA_CAP = 2.0**20


@dataclass(frozen=True)
class SignedTriple:
    i: int
    j: int
    k: int
    s_i: int = 1
    s_j: int = 1
    s_k: int = 1

    def __post_init__(self):
        if len({self.i, self.j, self.k}) != 3:
            raise CubeError(f"triple vertices must be distinct: {(self.i, self.j, self.k)}")
        if {self.s_i, self.s_j, self.s_k} - {1, -1}:
            raise CubeError("signs must be +1 or -1")


def triangle_violation(solution: VectorSolution, t: SignedTriple) -> float:
    x = solution.vectors
    ai, aj, ak = t.s_i * x[t.i], t.s_j * x[t.j], t.s_k * x[t.k]
    return float(ai @ ak + ak @ aj - ai @ aj - 1.0)


# A pool of triples is five parallel int arrays (i, j, k, s_i, s_j) with s_k = +1.

def _encode(n, i, j, k, si, sj):
    swap = i > j
    i, j = np.where(swap, j, i), np.where(swap, i, j)
    si, sj = np.where(swap, sj, si), np.where(swap, si, sj)
    pattern = (si < 0) * 2 + (sj < 0)
    return ((i * n + j) * n + k) * 4 + pattern


def _decode(n, key):
    pattern, rest = key % 4, key // 4
    k, rest = rest % n, rest // n
    j, i = rest % n, rest // n
    return i, j, k, 1 - 2 * (pattern // 2), 1 - 2 * (pattern % 2)


def all_triples(n: int) -> np.ndarray:
    """Keys of every unordered pair {i, j}, middle k and sign pattern."""
    i, j = np.triu_indices(n, 1)
    k = np.arange(n)
    i, j, k = (a.reshape(-1) for a in np.broadcast_arrays(i[:, None], j[:, None], k[None, :]))
    keep = (k != i) & (k != j)
    i, j, k = i[keep], j[keep], k[keep]
    keys = [_encode(n, i, j, k, np.full_like(i, si), np.full_like(i, sj)) for si in (1, -1) for sj in (1, -1)]
    return np.sort(np.concatenate(keys))


def sample_triples(n: int, rng: np.random.Generator, count: int = SAMPLES_PER_ROUND) -> np.ndarray:
    i = rng.integers(0, n, count)
    j = (i + rng.integers(1, n, count)) % n
    k = rng.integers(0, n, count)
    keep = (k != i) & (k != j)
    s = 1 - 2 * rng.integers(0, 2, (2, count))
    return np.unique(_encode(n, i[keep], j[keep], k[keep], s[0][keep], s[1][keep]))


def violations(gram: np.ndarray, n: int, keys: np.ndarray) -> np.ndarray:
    i, j, k, si, sj = _decode(n, keys)
    return si * gram[i, k] + sj * gram[j, k] - si * sj * gram[i, j] - 1.0


@dataclass
class GWPlusResult:
    value: float
    solution: VectorSolution
    max_violation: float
    converged: bool
    rounds: int
    gw_value: float
    pool_size: int


def _penalized(graph, y_shape, keys, lam):
    n = graph.n
    w = _weights(graph)
    base = sp.coo_matrix((-graph.sign * w / (2.0 * w.sum()), (graph.u, graph.v)), shape=(n, n)).toarray()
    base = base + base.T
    const = 0.5
    i, j, k, si, sj = _decode(n, keys)

    def fun(flat):
        y = flat.reshape(y_shape)
        norm = np.linalg.norm(y, axis=1, keepdims=True)
        x = y / norm
        gram = x @ x.T
        f = const + 0.5 * np.sum(base * gram)
        coef = base.copy()
        if len(keys):
            v = si * gram[i, k] + sj * gram[j, k] - si * sj * gram[i, j] - 1.0
            pos = np.maximum(v, 0.0)
            f += lam * np.dot(pos, pos)
            c = 2.0 * lam * pos
            hit = c > 0
            if hit.any():
                c, ii, jj, kk, ssi, ssj = c[hit], i[hit], j[hit], k[hit], si[hit], sj[hit]
                pen = sp.coo_matrix((np.concatenate([c * ssi, c * ssj, -c * ssi * ssj]),
                                     (np.concatenate([ii, jj, ii]), np.concatenate([kk, kk, jj]))),
                                    shape=(n, n)).toarray()
                coef += pen + pen.T
        gx = coef @ x
        gy = (gx - np.sum(gx * x, axis=1, keepdims=True) * x) / norm
        return f, gy.reshape(-1)

    return fun


def solve_gwplus(instance, params: SolverParams = SolverParams(), vtol: float = 1e-6) -> GWPlusResult:
    """Penalty method with a growing pool of violated triples.

    Starts from ``solve_gw``.  Each round finds violated triples (all of them
    up to 64 vertices, 10^6 random ones per round beyond), adds them to the
    pool, and minimizes GW objective + lam * sum(max(0, violation)^2) with
    L-BFGS, doubling lam from 1.  The returned value is the plain GW objective
    of the final point; ``max_violation`` says how feasible it is.
    """
    graph = as_graph(instance)
    n = graph.n
    if n > MAX_GWPLUS_VERTICES:
        raise GuardError(f"GW+ is limited to {MAX_GWPLUS_VERTICES} vertices, got {n}")
    d = instance.d if isinstance(instance, HypercubeInstance) else None
    r = params.rank if params.rank is not None else default_rank(n)
    gw = solve_gw(instance, SolverParams(r, params.max_sweeps, params.tol, params.seed, params.restarts))
    x = np.array(gw.solution.vectors)
    full = all_triples(n) if n <= FULL_ENUMERATION_VERTICES else None
    rng = np.random.default_rng(params.seed)
    pool = np.empty(0, dtype=np.int64)
    lam, rounds, worst = 1.0, 0, np.inf

    def scan(x):
        cand = full if full is not None else np.union1d(sample_triples(n, rng), pool)
        v = violations(x @ x.T, n, cand)
        return cand, v

    cand, v = scan(x)
    worst = float(v.max(initial=-np.inf))
    while worst > vtol and rounds < MAX_ROUNDS:
        pool = np.union1d(pool, cand[v > 0])
        fun = _penalized(graph, x.shape, pool, lam)
        res = scipy.optimize.minimize(fun, x.reshape(-1), jac=True, method="L-BFGS-B",
                                      options={"maxiter": 20000, "gtol": 1e-13, "ftol": 1e-16, "maxcor": 20})
        y = res.x.reshape(x.shape)
        x = y / np.linalg.norm(y, axis=1, keepdims=True)
        rounds += 1
        lam = min(2.0 * lam, LAMBDA_CAP)
        cand, v = scan(x)
        worst = float(v.max(initial=-np.inf))
    sol = VectorSolution(x, d)
    return GWPlusResult(objective(graph, x), sol, max(worst, 0.0) if np.isfinite(worst) else 0.0,
                        worst <= vtol, rounds, gw.value, len(pool))


def cycle_edge_sum(instance, solution: VectorSolution, cycle) -> float:
    """Sum over the cycle's edges of ||x_u - s x_v||^2 / 4."""
    graph = as_graph(instance)
    sign = {}
    for u, v, s in zip(graph.u.tolist(), graph.v.tolist(), graph.sign.tolist()):
        sign[min(u, v), max(u, v)] = s
    x = solution.vectors
    total = 0.0
    for u, v in cycle.edge_pairs():
        diff = x[u] - sign[min(u, v), max(u, v)] * x[v]
        total += float(diff @ diff) / 4.0
    return total
