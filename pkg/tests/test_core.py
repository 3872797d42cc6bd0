from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cubegap.core import (
    Assignment,
    CubeError,
    Cycle,
    HypercubeInstance,
    all_equal_instance,
    assignment_value,
    cycle_edge_ids,
    cycle_parity,
    delta_instance,
    edge_id,
    face_cycle,
    faces,
    parse_assignment,
    parse_instance,
    popcount,
    serialize_assignment,
    serialize_instance,
    table_bits,
    tensor_product,
    unsatisfied_count,
)


@st.composite
def instances(draw, max_d=5):
    d = draw(st.integers(1, max_d))
    bits = draw(st.lists(st.integers(0, 1), min_size=d << (d - 1), max_size=d << (d - 1)))
    return HypercubeInstance(d, np.array(bits, dtype=np.uint8).reshape(d, 1 << (d - 1)))


def naive_delta_bit(k, d, u, w):
    b = (u ^ w).bit_length() - 1
    suffix = bin(u >> k).count("1")
    return int(b < k and 2 * suffix <= d - k)


def test_delta_matches_definition_edge_by_edge():
    for k, d in [(1, 2), (1, 3), (2, 5), (3, 6)]:
        inst = delta_instance(k, d)
        for u in range(1 << d):
            for b in range(d):
                w = u ^ (1 << b)
                assert inst.edge_bit(u, w) == naive_delta_bit(k, d, u, w)


def test_delta_1_2_layout():
    inst = delta_instance(1, 2)
    assert table_bits(inst, 1) == "10"
    assert table_bits(inst, 2) == "00"
    assert serialize_instance(inst) == '{"d": 2, "directions": ["01", "00"]}'
    assert inst.n_inequalities == 1


def test_edge_ids_are_a_bijection():
    d = 4
    ids = sorted(edge_id(d, u, u | 1 << b) for u in range(1 << d) for b in range(d) if not u >> b & 1)
    assert ids == list(range(d << (d - 1)))


def test_edges_order_matches_edge_id():
    inst = delta_instance(2, 4)
    lower, upper, _ = inst.edges()
    assert [edge_id(4, u, w) for u, w in zip(lower.tolist(), upper.tolist())] == list(range(inst.n_edges))


@given(instances())
def test_instance_roundtrip(inst):
    assert parse_instance(serialize_instance(inst)) == inst


@given(instances(), st.data())
def test_assignment_roundtrip_and_value(inst, data):
    code = data.draw(st.integers(0, (1 << (1 << inst.d)) - 1))
    a = Assignment.from_int(inst.d, code)
    assert a.to_int() == code
    assert parse_assignment(serialize_assignment(a)) == a
    naive = sum(((code >> u ^ code >> w) & 1) != inst.edge_bit(u, w)
                for u in range(1 << inst.d) for b in range(inst.d) for w in [u | 1 << b] if w != u)
    assert unsatisfied_count(inst, a) == naive
    assert assignment_value(inst, a.complement()) == assignment_value(inst, a)


@given(instances(3), instances(3))
@settings(max_examples=30)
def test_tensor_product_edges(a, b):
    t = tensor_product(a, b)
    assert t.d == a.d + b.d
    for v in range(1 << t.d):
        for bit in range(t.d):
            w = v | 1 << bit
            if w == v:
                continue
            if bit < a.d:
                expect = a.edge_bit(v & ((1 << a.d) - 1), w & ((1 << a.d) - 1))
            else:
                expect = b.edge_bit(v >> a.d, w >> a.d)
            assert t.edge_bit(v, w) == expect


def test_faces_count_and_parity():
    for d in range(2, 6):
        assert len(faces(d)) == d * (d - 1) // 2 * (1 << (d - 2))
    inst = delta_instance(1, 2)
    assert cycle_parity(inst, face_cycle(0, 1, 0)) == 1
    assert cycle_parity(all_equal_instance(3), face_cycle(0, 2, 2)) == 0


def test_cycle_validation():
    assert Cycle([0, 1, 3, 2, 0]) == Cycle([0, 1, 3, 2])
    with pytest.raises(CubeError):
        cycle_edge_ids(2, Cycle([0, 3, 1, 2]))  # 0-3 is not an edge
    with pytest.raises(CubeError):
        cycle_edge_ids(2, Cycle([0, 1, 0, 1]))  # repeats an edge
    with pytest.raises(CubeError):
        cycle_edge_ids(2, Cycle([0, 1, 3]))


def test_bad_inputs():
    with pytest.raises(CubeError):
        delta_instance(3, 2)
    with pytest.raises(CubeError):
        parse_instance('{"d": 2, "directions": ["07", "00"]}')  # padding bit set
    with pytest.raises(CubeError):
        parse_instance("not json")
    with pytest.raises(CubeError):
        HypercubeInstance(2, np.zeros((2, 3), dtype=np.uint8))


def test_all_ones_value_is_inequality_fraction():
    for k, d in product(range(1, 4), range(1, 6)):
        if k > d:
            continue
        inst = delta_instance(k, d)
        ones = Assignment(d, np.ones(1 << d, dtype=np.uint8))
        assert assignment_value(inst, ones) == Fraction(inst.n_inequalities, inst.n_edges)


def test_popcount():
    assert popcount(np.arange(8)).tolist() == [0, 1, 1, 2, 1, 2, 2, 3]
