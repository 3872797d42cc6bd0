"""
Edge-disjoint inconsistent cycle packings.

Two constructions: a greedy packing of odd 4-faces that works for any
instance, and the flow construction for delta(k, d).  The latter routes
``ell`` units from every suffix vertex in H (weight <= m/2) to the vertices
outside H inside one suffix cube Q_m, splits the flow into edge-disjoint
paths, colours the paths so no two paths of one colour share an endpoint, and
closes each path of colour i in subcube x with its copy in subcube x ^ e_i.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import maximum_bipartite_matching, maximum_flow

from .core import (
    CubeError,
    Cycle,
    HypercubeInstance,
    SignedGraph,
    cycle_edge_ids,
    cycle_parity,
    delete_bit,
    face_cycle,
    insert_zero_bit,
    popcount,
)


class SaturationError(CubeError):
    """The flow network cannot route ell units out of every source vertex."""

    def __init__(self, m: int, ell: int, value: int, required: int):
        super().__init__(f"max-flow on Q_{m} with ell={ell} is {value}, saturation needs {required}")
        self.m, self.ell, self.value, self.required = m, ell, value, required


@dataclass(frozen=True, eq=False)
class FlowNetwork:
    m: int
    ell: int
    capacity: sp.csr_matrix

    @property
    def source(self) -> int:
        return 1 << self.m

    @property
    def sink(self) -> int:
        return (1 << self.m) + 1

    @property
    def required(self) -> int:
        return self.ell << (self.m - 1)


@dataclass
class PathSystem:
    m: int
    ell: int
    paths: list[tuple[int, ...]]
    flow_value: int
    colors: list[int] | None = None  # 1..ell, parallel to paths


@dataclass
class CertificateSet:
    cycles: list[Cycle]
    d: int
    k: int | None = None
    ell: int | None = None
    paths_per_subcube: int | None = None

    def __len__(self):
        return len(self.cycles)


def in_half(m: int) -> np.ndarray:
    return 2 * popcount(np.arange(1 << m)) <= m


def flow_network(m: int, ell: int) -> FlowNetwork:
    if m < 1 or m % 2 == 0:
        raise CubeError(f"the flow construction needs odd d-k, got {m}")
    if ell < 1:
        raise CubeError(f"ell must be >= 1, got {ell}")
    n = 1 << m
    v = np.arange(n)
    tails = [np.repeat(v, m)]
    heads = [(v[:, None] ^ (1 << np.arange(m))[None, :]).reshape(-1)]
    caps = [np.ones(n * m, dtype=np.int32)]
    h = in_half(m)
    tails += [np.full(h.sum(), n), v[~h]]
    heads += [v[h], np.full((~h).sum(), n + 1)]
    caps += [np.full(h.sum(), ell, dtype=np.int32), np.full((~h).sum(), ell, dtype=np.int32)]
    cap = sp.csr_matrix((np.concatenate(caps), (np.concatenate(tails), np.concatenate(heads))), shape=(n + 2, n + 2))
    cap.sort_indices()
    return FlowNetwork(m, ell, cap)


def _net_flow(net: FlowNetwork) -> tuple[int, sp.csr_matrix]:
    res = maximum_flow(net.capacity, net.source, net.sink, method="dinic")
    return int(res.flow_value), res.flow.tocsr()


def max_flow_value(m: int, ell: int) -> int:
    return _net_flow(flow_network(m, ell))[0]


def disjoint_paths(k: int, d: int, ell: int) -> PathSystem:
    """Edge-disjoint H-to-complement paths in Q_{d-k}, ell starting at each H vertex.

    The max-flow returns net flow, so antiparallel unit arcs never both carry
    flow.  Paths are peeled off by walking from each source vertex (ascending)
    along the lowest-numbered remaining flow arc; a walk that revisits a
    vertex drops the loop it closed.
    """
    if not 1 <= ell <= k:
        raise CubeError(f"need 1 <= ell <= k, got ell={ell}, k={k}")
    m = d - k
    net = flow_network(m, ell)
    value, flow = _net_flow(net)
    if value != net.required:
        raise SaturationError(m, ell, value, net.required)

    n, sink = 1 << m, net.sink
    out: list[list[int]] = [[] for _ in range(n + 2)]
    left = {}
    flow.sum_duplicates()
    for u in range(n):
        lo, hi = flow.indptr[u], flow.indptr[u + 1]
        for w, f in zip(flow.indices[lo:hi].tolist(), flow.data[lo:hi].tolist()):
            if f > 0:
                out[u].append(w)
                left[u, w] = f
    for u in range(n):
        out[u].sort()

    def next_arc(u):
        for w in out[u]:
            if left[u, w] > 0:
                left[u, w] -= 1
                return w
        raise AssertionError(f"flow conservation broken at vertex {u}")

    paths = []
    for start in np.flatnonzero(in_half(m)).tolist():
        for _ in range(ell):
            walk, pos = [start], {start: 0}
            u = next_arc(start)
            while u != sink:
                if u in pos:
                    for x in walk[pos[u] + 1:]:
                        del pos[x]
                    del walk[pos[u] + 1:]
                else:
                    pos[u] = len(walk)
                    walk.append(u)
                u = next_arc(u)
            paths.append(tuple(walk))
    return PathSystem(m, ell, paths, value)


def color_paths(system: PathSystem) -> PathSystem:
    """Split the start/end multigraph into ell perfect matchings; colour = matching index."""
    ell, m = system.ell, system.m
    starts = sorted({p[0] for p in system.paths})
    ends = sorted({p[-1] for p in system.paths})
    si = {v: i for i, v in enumerate(starts)}
    ei = {v: i for i, v in enumerate(ends)}
    size = max(len(starts), len(ends))
    mult: dict[tuple[int, int], int] = {}
    by_pair: dict[tuple[int, int], list[int]] = {}
    for idx, p in enumerate(system.paths):
        key = (si[p[0]], ei[p[-1]])
        mult[key] = mult.get(key, 0) + 1
        by_pair.setdefault(key, []).append(idx)
    # pad to ell-regular with dummy edges
    row_def, col_def = [ell] * size, [ell] * size
    for (i, j), c in mult.items():
        row_def[i] -= c
        col_def[j] -= c
    if min(row_def) < 0 or min(col_def) < 0:
        raise CubeError("an endpoint carries more than ell paths")
    rows = [i for i in range(size) for _ in range(row_def[i])]
    cols = [j for j in range(size) for _ in range(col_def[j])]
    for i, j in zip(rows, cols):
        mult[i, j] = mult.get((i, j), 0) + 1

    colors = [0] * len(system.paths)
    for color in range(1, ell + 1):
        keys = [key for key, c in mult.items() if c > 0]
        r, c = np.array(keys).T
        graph = sp.csr_matrix((np.ones(len(keys)), (r, c)), shape=(size, size))
        match = maximum_bipartite_matching(graph, perm_type="column")
        if (match < 0).any():
            raise AssertionError("regular bipartite multigraph without a perfect matching")
        for i, j in enumerate(match.tolist()):
            mult[i, j] -= 1
            if by_pair.get((i, j)):
                colors[by_pair[i, j].pop()] = color
    return PathSystem(m, ell, system.paths, system.flow_value, colors)


def stitch_cycles(k: int, d: int, system: PathSystem) -> CertificateSet:
    """Close each coloured path in subcube x with its copy in x ^ e_colour (one cycle per pair)."""
    if system.colors is None:
        raise CubeError("paths must be coloured first")
    if system.ell > k:
        raise CubeError(f"ell={system.ell} exceeds k={k}")
    if system.m != d - k:
        raise CubeError("path system lives in the wrong suffix cube")
    cycles = []
    for x in range(1 << k):
        for path, color in zip(system.paths, system.colors):
            e = 1 << (color - 1)
            if x & e:
                continue
            here = [x | (p << k) for p in path]
            there = [(x | e) | (p << k) for p in reversed(path)]
            cycles.append(Cycle(here + there))
    return CertificateSet(cycles, d, k, system.ell, len(system.paths))


def delta_certificates(k: int, d: int, ell: int | None = None) -> CertificateSet:
    """Flow construction for delta(k, d); default ell is the largest saturating value."""
    if ell is not None:
        return stitch_cycles(k, d, color_paths(disjoint_paths(k, d, ell)))
    m = d - k
    top = min(k, math.isqrt(m - 1) + 1 if m > 0 else 1)
    last = None
    for cand in range(top, 0, -1):
        try:
            return stitch_cycles(k, d, color_paths(disjoint_paths(k, d, cand)))
        except SaturationError as exc:
            last = exc
    raise last


def inconsistent_faces(instance: HypercubeInstance) -> list[Cycle]:
    """Odd-parity 4-faces, in the order of ``faces(d)``: (b1, b2) lexicographic, then base."""
    d, t = instance.d, instance.tables
    out = []
    for b1 in range(d):
        for b2 in range(b1 + 1, d):
            e1, e2 = 1 << b1, 1 << b2
            base = insert_zero_bit(insert_zero_bit(np.arange(1 << (d - 2)), b1), b2)
            parity = (t[b1, delete_bit(base, b1)] ^ t[b1, delete_bit(base | e2, b1)]
                      ^ t[b2, delete_bit(base, b2)] ^ t[b2, delete_bit(base | e1, b2)])
            out.extend(face_cycle(b1, b2, v) for v in base[parity == 1].tolist())
    return out


def greedy_face_packing(instance: HypercubeInstance) -> CertificateSet:
    used: set[int] = set()
    kept = []
    for c in inconsistent_faces(instance):
        ids = cycle_edge_ids(instance.d, c)
        if used.isdisjoint(ids):
            used.update(ids)
            kept.append(c)
    return CertificateSet(kept, instance.d)


def _graph_edge_index(graph: SignedGraph) -> dict[tuple[int, int], tuple[int, int]]:
    idx = {}
    for e, (u, v, s) in enumerate(zip(graph.u.tolist(), graph.v.tolist(), graph.sign.tolist())):
        idx[min(u, v), max(u, v)] = (e, 0 if s > 0 else 1)
    return idx


def _cycle_ids_and_parity(instance, cycle: Cycle, index) -> tuple[list[int], int]:
    if isinstance(instance, HypercubeInstance):
        return cycle_edge_ids(instance.d, cycle), cycle_parity(instance, cycle)
    if len(cycle) < 3:
        raise CubeError("a cycle needs at least 3 vertices")
    ids, parity = [], 0
    for u, w in cycle.edge_pairs():
        key = (min(u, w), max(u, w))
        if key not in index:
            raise CubeError(f"{key} is not an edge")
        e, bit = index[key]
        ids.append(e)
        parity ^= bit
    if len(set(ids)) != len(ids):
        raise CubeError("cycle repeats an edge")
    return ids, parity


def verify_certificates(instance, cycles) -> tuple[bool, str | None]:
    """(True, None) when the cycles are valid, pairwise edge-disjoint and all inconsistent.

    Otherwise (False, message) describing the first failure.  Works for
    hypercube instances and for plain signed graphs.
    """
    cycles = cycles.cycles if isinstance(cycles, CertificateSet) else cycles
    index = None if isinstance(instance, HypercubeInstance) else _graph_edge_index(instance)
    seen: dict[int, int] = {}
    for n, c in enumerate(cycles):
        try:
            ids, parity = _cycle_ids_and_parity(instance, c, index)
        except CubeError as exc:
            return False, f"cycle {n}: {exc}"
        if parity != 1:
            return False, f"cycle {n} is consistent"
        for e in ids:
            if e in seen:
                return False, f"cycles {seen[e]} and {n} share edge {e}"
            seen[e] = n
    return True, None


def certificate_bound(instance, cycles) -> Fraction:
    """|C| / |E| for a verified packing; raises on an invalid one."""
    ok, why = verify_certificates(instance, cycles)
    if not ok:
        raise CubeError(f"invalid certificate set: {why}")
    cycles = cycles.cycles if isinstance(cycles, CertificateSet) else cycles
    return Fraction(len(cycles), instance.n_edges)


def serialize_certificates(cert: CertificateSet) -> str:
    return json.dumps({"k": cert.k, "d": cert.d, "ell": cert.ell,
                       "cycles": [list(c.vertices) for c in cert.cycles]}, separators=(",", ":"))


def parse_certificates(text: str) -> CertificateSet:
    try:
        data = json.loads(text)
        cycles = [Cycle(c) for c in data["cycles"]]
        return CertificateSet(cycles, int(data["d"]), data.get("k"), data.get("ell"))
    except (ValueError, KeyError, TypeError) as exc:
        raise CubeError(f"malformed certificate file: {exc}") from exc
