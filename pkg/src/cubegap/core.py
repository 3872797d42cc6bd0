"""
Max-2-LIN(Z2) instances on the boolean hypercube Q_d.

Vertices are integers in ``[0, 2**d)``; coordinate ``i`` (1-based) lives in bit
``i - 1``.  An instance stores, for every direction, one bit per canonical edge
``(v, v | 1 << b)`` where ``v`` has bit ``b`` clear.  The table index of that
edge is ``v`` with bit ``b`` deleted.  Bit 0 means equality, bit 1 inequality.

Values follow the "lower is better" convention: the value of an assignment is
the fraction of edges it leaves unsatisfied.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np


class CubeError(ValueError):
    """Malformed input or a violated precondition."""


class GuardError(CubeError):
    """A size guard on an exhaustive or materialized computation was hit."""


def popcount(x) -> np.ndarray:
    return np.bitwise_count(np.asarray(x, dtype=np.int64)).astype(np.int64)


def insert_zero_bit(j, b: int):
    """Spread ``j`` so that bit ``b`` of the result is 0."""
    j = np.asarray(j, dtype=np.int64)
    low = j & ((1 << b) - 1)
    return ((j >> b) << (b + 1)) | low


def delete_bit(v, b: int):
    v = np.asarray(v, dtype=np.int64)
    low = v & ((1 << b) - 1)
    return ((v >> (b + 1)) << b) | low


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class HypercubeInstance:
    d: int
    tables: np.ndarray  # shape (d, 2**(d-1)), uint8

    def __post_init__(self):
        if self.d < 1:
            raise CubeError(f"dimension must be >= 1, got {self.d}")
        tables = np.asarray(self.tables, dtype=np.uint8)
        if tables.shape != (self.d, 1 << (self.d - 1)):
            raise CubeError(
                f"expected {self.d} tables of length {1 << (self.d - 1)}, got shape {tables.shape}"
            )
        if np.any(tables > 1):
            raise CubeError("constraint bits must be 0 or 1")
        object.__setattr__(self, "tables", _freeze(tables))

    @property
    def n_vertices(self) -> int:
        return 1 << self.d

    @property
    def n_edges(self) -> int:
        return self.d << (self.d - 1)

    def __eq__(self, other):
        if not isinstance(other, HypercubeInstance):
            return NotImplemented
        return self.d == other.d and np.array_equal(self.tables, other.tables)

    def __hash__(self):
        return hash((self.d, self.tables.tobytes()))

    def __repr__(self):
        return f"HypercubeInstance(d={self.d}, inequalities={self.n_inequalities})"

    @property
    def n_inequalities(self) -> int:
        return int(self.tables.sum())

    def edge_bit(self, u: int, w: int) -> int:
        b = edge_direction(u, w)
        v = min(u, w)
        return int(self.tables[b, int(delete_bit(v, b))])

    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(lower, upper, bit)`` arrays ordered by edge id."""
        half = 1 << (self.d - 1)
        j = np.arange(half, dtype=np.int64)
        lower = np.concatenate([insert_zero_bit(j, b) for b in range(self.d)])
        upper = lower | np.repeat(1 << np.arange(self.d, dtype=np.int64), half)
        return lower, upper, self.tables.reshape(-1).astype(np.int64)

    def signed_graph(self) -> "SignedGraph":
        lower, upper, bit = self.edges()
        return SignedGraph(self.n_vertices, lower, upper, 1 - 2 * bit)


def edge_direction(u: int, w: int) -> int:
    x = u ^ w
    if x <= 0 or x & (x - 1):
        raise CubeError(f"vertices {u} and {w} are not adjacent")
    return x.bit_length() - 1


def edge_id(d: int, u: int, w: int) -> int:
    b = edge_direction(u, w)
    return (b << (d - 1)) | int(delete_bit(min(u, w), b))


@dataclass(frozen=True, eq=False)
class SignedGraph:
    """Edge list with signs: +1 for equality edges, -1 for inequality edges.

    The SDP solvers work on this form so that cycles and other small test
    graphs can share code with hypercube instances.
    """

    n: int
    u: np.ndarray
    v: np.ndarray
    sign: np.ndarray

    def __post_init__(self):
        for name in ("u", "v", "sign"):
            object.__setattr__(self, name, _freeze(np.asarray(getattr(self, name), dtype=np.int64)))
        if not (len(self.u) == len(self.v) == len(self.sign)):
            raise CubeError("edge arrays differ in length")

    @property
    def n_edges(self) -> int:
        return len(self.u)


def signed_cycle(n: int, inequalities: int = 1) -> SignedGraph:
    """The cycle 0-1-...-(n-1)-0 with the first ``inequalities`` edges set to inequality."""
    if n < 3:
        raise CubeError("a cycle needs at least 3 vertices")
    u = np.arange(n)
    sign = np.ones(n, dtype=np.int64)
    sign[:inequalities] = -1
    return SignedGraph(n, u, (u + 1) % n, sign)


def all_equal_instance(d: int) -> HypercubeInstance:
    return HypercubeInstance(d, np.zeros((d, 1 << (d - 1)), dtype=np.uint8))


def delta_instance(k: int, d: int) -> HypercubeInstance:
    """Inequalities on directions 1..k wherever the suffix weight is at most (d-k)/2."""
    if not 1 <= k <= d:
        raise CubeError(f"need 1 <= k <= d, got k={k}, d={d}")
    tables = np.zeros((d, 1 << (d - 1)), dtype=np.uint8)
    j = np.arange(1 << (d - 1), dtype=np.int64)
    for b in range(k):
        suffix = popcount(insert_zero_bit(j, b) >> k)
        # strict ">" in the rule: ties on the middle layer stay inequality
        tables[b] = 2 * suffix <= d - k
    return HypercubeInstance(d, tables)


def tensor_product(first: HypercubeInstance, second: HypercubeInstance) -> HypercubeInstance:
    """Directions 1..d1 copy ``first`` on the low coordinates, the rest copy ``second``."""
    d1, d2 = first.d, second.d
    d = d1 + d2
    j = np.arange(1 << (d - 1), dtype=np.int64)
    tables = np.empty((d, 1 << (d - 1)), dtype=np.uint8)
    for b in range(d):
        v = insert_zero_bit(j, b)
        if b < d1:
            tables[b] = first.tables[b][delete_bit(v & ((1 << d1) - 1), b)]
        else:
            tables[b] = second.tables[b - d1][delete_bit(v >> d1, b - d1)]
    return HypercubeInstance(d, tables)


@dataclass(frozen=True, eq=False)
class Assignment:
    d: int
    labels: np.ndarray  # uint8, one per vertex

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.uint8)
        if labels.shape != (1 << self.d,):
            raise CubeError(f"expected {1 << self.d} labels, got {labels.shape}")
        if np.any(labels > 1):
            raise CubeError("labels must be 0 or 1")
        object.__setattr__(self, "labels", _freeze(labels))

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return self.d == other.d and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.d, self.labels.tobytes()))

    @classmethod
    def from_int(cls, d: int, code: int) -> "Assignment":
        n = 1 << d
        raw = np.frombuffer(code.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
        return cls(d, np.unpackbits(raw, bitorder="little")[:n])

    def to_int(self) -> int:
        return int.from_bytes(np.packbits(self.labels, bitorder="little").tobytes(), "little")

    def complement(self) -> "Assignment":
        return Assignment(self.d, 1 - self.labels)


def unsatisfied_count(instance: HypercubeInstance, assignment: Assignment) -> int:
    if instance.d != assignment.d:
        raise CubeError(f"dimension mismatch: instance d={instance.d}, assignment d={assignment.d}")
    lower, upper, bit = instance.edges()
    labels = assignment.labels.astype(np.int64)
    return int(np.count_nonzero((labels[lower] ^ labels[upper]) != bit))


def assignment_value(instance: HypercubeInstance, assignment: Assignment) -> Fraction:
    return Fraction(unsatisfied_count(instance, assignment), instance.n_edges)


@dataclass(frozen=True)
class Cycle:
    """A closed walk; the closing edge from the last vertex back to the first is implicit."""

    vertices: tuple[int, ...]

    def __init__(self, vertices: Iterable[int]):
        vs = tuple(int(v) for v in vertices)
        if len(vs) > 1 and vs[0] == vs[-1]:
            vs = vs[:-1]
        object.__setattr__(self, "vertices", vs)

    def __len__(self):
        return len(self.vertices)

    def edge_pairs(self) -> list[tuple[int, int]]:
        vs = self.vertices
        return [(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]


def cycle_edge_ids(d: int, cycle: Cycle) -> list[int]:
    """Edge ids along the cycle; raises if the walk is not a cycle of distinct edges in Q_d."""
    if len(cycle) < 4:
        raise CubeError(f"a hypercube cycle has at least 4 vertices, got {len(cycle)}")
    ids = []
    for u, w in cycle.edge_pairs():
        if not (0 <= u < 1 << d and 0 <= w < 1 << d):
            raise CubeError(f"vertex out of range for d={d}: {(u, w)}")
        ids.append(edge_id(d, u, w))
    if len(set(ids)) != len(ids):
        raise CubeError("cycle repeats an edge")
    return ids


def cycle_parity(instance: HypercubeInstance, cycle: Cycle) -> int:
    """XOR of the constraint bits along the cycle: 1 means no assignment satisfies all of it."""
    ids = cycle_edge_ids(instance.d, cycle)
    flat = instance.tables.reshape(-1)
    return int(np.bitwise_xor.reduce(flat[ids]))


def is_inconsistent(instance: HypercubeInstance, cycle: Cycle) -> bool:
    return cycle_parity(instance, cycle) == 1


# -- serialization -----------------------------------------------------------

def bits_to_hex(bits: np.ndarray) -> str:
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes().hex()


def hex_to_bits(text: str, length: int) -> np.ndarray:
    try:
        raw = bytes.fromhex(text)
    except (ValueError, TypeError) as exc:
        raise CubeError(f"bad hex string: {text!r}") from exc
    if len(raw) != (length + 7) // 8:
        raise CubeError(f"hex string encodes {8 * len(raw)} bits, expected {length}")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    if np.any(bits[length:]):
        raise CubeError("nonzero padding bits in hex string")
    return bits[:length].copy()


def table_bits(instance: HypercubeInstance, direction: int) -> str:
    """Bits of one direction (1-based) in table-index order, e.g. ``"10"``."""
    return "".join(str(int(b)) for b in instance.tables[direction - 1])


def serialize_instance(instance: HypercubeInstance) -> str:
    return json.dumps({"d": instance.d, "directions": [bits_to_hex(t) for t in instance.tables]})


def _load(text: str) -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CubeError(f"malformed JSON: {exc}") from exc
    if not isinstance(data, dict) or not isinstance(data.get("d"), int):
        raise CubeError("expected a JSON object with integer field 'd'")
    return data


def parse_instance(text: str) -> HypercubeInstance:
    data = _load(text)
    d = data["d"]
    dirs = data.get("directions")
    if d < 1 or not isinstance(dirs, list) or len(dirs) != d:
        raise CubeError(f"expected {d} direction tables")
    half = 1 << (d - 1)
    return HypercubeInstance(d, np.stack([hex_to_bits(h, half) for h in dirs]))


def serialize_assignment(assignment: Assignment) -> str:
    return json.dumps({"d": assignment.d, "labels": bits_to_hex(assignment.labels)})


def parse_assignment(text: str) -> Assignment:
    data = _load(text)
    d = data["d"]
    if d < 1 or not isinstance(data.get("labels"), str):
        raise CubeError("expected string field 'labels'")
    return Assignment(d, hex_to_bits(data["labels"], 1 << d))


def faces(d: int) -> Sequence[tuple[int, int, int]]:
    """All axis-aligned 4-cycles as ``(b1, b2, base)`` with ``b1 < b2`` and both bits clear in base."""
    out = []
    for b1 in range(d):
        for b2 in range(b1 + 1, d):
            m = (1 << b1) | (1 << b2)
            out.extend((b1, b2, v) for v in range(1 << d) if not v & m)
    return out


def face_cycle(b1: int, b2: int, base: int) -> Cycle:
    e1, e2 = 1 << b1, 1 << b2
    return Cycle((base, base | e1, base | e1 | e2, base | e2))
