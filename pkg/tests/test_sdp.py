import json
import math

import numpy as np
import pytest
import scipy.optimize
from hypothesis import given, settings, strategies as st

from cubegap.core import (
    Assignment,
    CubeError,
    GuardError,
    HypercubeInstance,
    all_equal_instance,
    assignment_value,
    delta_instance,
    signed_cycle,
    tensor_product,
)
from cubegap.exact import brute_force_opt
from cubegap.sdp import (
    SolverParams,
    VectorSolution,
    amplify,
    amplify_solution,
    analytic_angles,
    analytic_delta_value,
    analytic_solution,
    default_rank,
    hyperplane_round,
    integral_solution,
    layered_delta_graph,
    lift_layered,
    objective,
    parse_solution,
    sdp_value,
    serialize_solution,
    solve_gw,
    solve_gw_layered,
    tensor_solution,
)

OPT_4CYCLE = (2 - math.sqrt(2)) / 4


def delta12_planar(theta):
    """Closed-form objective of delta(1,2) with vertex angles (t0, t1, t2, t3)."""
    t0, t1, t2, t3 = theta
    return (2 + 2 * math.cos(t0 - t1) + 2 - 2 * math.cos(t2 - t3)
            + 2 - 2 * math.cos(t0 - t2) + 2 - 2 * math.cos(t1 - t3)) / 16


def angle_grid_oracle():
    grid = np.linspace(0, 2 * np.pi, 73)[:-1]
    a, b, c = np.meshgrid(grid, grid, grid, indexing="ij")
    vals = (2 + 2 * np.cos(a) + 2 - 2 * np.cos(b - c) + 2 - 2 * np.cos(b) + 2 - 2 * np.cos(a - c)) / 16
    i = np.unravel_index(np.argmin(vals), vals.shape)
    start = [grid[i[0]], grid[i[1]], grid[i[2]]]
    res = scipy.optimize.minimize(lambda p: delta12_planar([0.0, *p]), start, method="Nelder-Mead",
                                  options={"xatol": 1e-10, "fatol": 1e-14})
    return res.fun


def random_solution(rng, d, r):
    x = rng.standard_normal((1 << d, r))
    return VectorSolution(x / np.linalg.norm(x, axis=1, keepdims=True), d)


def random_instance(rng, d):
    return HypercubeInstance(d, rng.integers(0, 2, (d, 1 << (d - 1)), dtype=np.uint8))


def test_angle_grid_oracle_agrees_with_closed_form():
    assert angle_grid_oracle() == pytest.approx(OPT_4CYCLE, abs=1e-8)


def test_sdp_value_examples():
    assert sdp_value(all_equal_instance(3), VectorSolution(np.tile([0.0, 1.0], (8, 1)), 3)) == 0.0
    inst = delta_instance(1, 2)
    ones = integral_solution(Assignment(2, np.ones(4, dtype=np.uint8)))
    assert sdp_value(inst, ones) == pytest.approx(0.25, abs=1e-15)
    # strings are x1 x2 with x1 = bit 0, so 00-01-11-10 is vertices 0, 2, 3, 1
    ang = {0: 0, 2: np.pi / 4, 3: np.pi / 2, 1: 3 * np.pi / 4}
    x = np.array([[math.cos(ang[v]), math.sin(ang[v])] for v in range(4)])
    assert sdp_value(inst, VectorSolution(x, 2)) == pytest.approx(OPT_4CYCLE, abs=1e-12)


def test_unit_norm_enforced():
    with pytest.raises(CubeError):
        VectorSolution(np.array([[1.0, 1e-4]] * 2), 1)
    with pytest.raises(CubeError):
        SolverParams(rank=1)
    with pytest.raises(CubeError):
        SolverParams(tol=0.0)


@given(st.integers(1, 4), st.integers(0, 2**16 - 1), st.integers(0, 10**6))
@settings(max_examples=40)
def test_integral_embedding_matches_assignment(d, code, seed):
    inst = random_instance(np.random.default_rng(seed), d)
    a = Assignment.from_int(d, code % (1 << (1 << d)))
    assert abs(sdp_value(inst, integral_solution(a)) - float(assignment_value(inst, a))) < 1e-12


def test_analytic_angle_cases():
    k, d, t = 1, 7, 1.5  # m = 6, band (1.5, 4.5)
    v_even_low = 0  # prefix 0, suffix weight 0
    v_odd_low = 1
    assert analytic_angles(k, d, t, v_even_low) == 0.0
    assert analytic_angles(k, d, t, v_odd_low) == pytest.approx(np.pi)
    mid = 0b111 << 1  # suffix weight 3 = m/2
    assert analytic_angles(k, d, t, mid) == pytest.approx(np.pi / 4)
    top = 0b111111 << 1
    assert analytic_angles(k, d, t, top) == pytest.approx(np.pi / 2)
    assert analytic_angles(k, d, t, top | 1) == pytest.approx(np.pi / 2)


def test_analytic_value_matches_materialized():
    for k, d in [(1, 2), (1, 3), (2, 5), (2, 8), (3, 9), (2, 12)]:
        value, t = analytic_delta_value(k, d)
        assert t == pytest.approx(math.sqrt((d - k) / k))
        assert value == pytest.approx(sdp_value(delta_instance(k, d), analytic_solution(k, d)), abs=1e-13)
    v, _ = analytic_delta_value(2, 8, t=0.7)
    assert v == pytest.approx(sdp_value(delta_instance(2, 8), analytic_solution(2, 8, 0.7)), abs=1e-13)


def test_analytic_value_bound_sweep():
    for d in range(4, 65, 4):
        for k in range(1, math.isqrt(d) + 1):
            assert analytic_delta_value(k, d)[0] <= 4 * math.sqrt(k) / d


def test_analytic_guards():
    with pytest.raises(CubeError):
        analytic_solution(2, 2)
    with pytest.raises(GuardError):
        analytic_solution(2, 21)


def test_solve_gw_examples():
    assert solve_gw(all_equal_instance(4)).value <= 1e-9
    res = solve_gw(delta_instance(1, 2), SolverParams(rank=2))
    assert res.value == pytest.approx(angle_grid_oracle(), abs=1e-4)
    res = solve_gw(delta_instance(2, 8), SolverParams(rank=8))
    assert res.value <= analytic_delta_value(2, 8)[0] + 1e-6
    assert res.converged


def test_solver_monotone_and_deterministic():
    inst = delta_instance(2, 6)
    a = solve_gw(inst, SolverParams(rank=5, seed=3))
    b = solve_gw(inst, SolverParams(rank=5, seed=3))
    assert np.array_equal(a.solution.vectors, b.solution.vectors)
    h = np.array(a.history)
    assert np.all(np.diff(h) <= 1e-15)
    assert a.value == pytest.approx(sdp_value(inst, a.solution), abs=1e-14)


def test_solver_on_cycles():
    for n in (5, 6, 9):
        res = solve_gw(signed_cycle(n), SolverParams(rank=n))
        assert res.value == pytest.approx((1 - math.cos(math.pi / n)) / 2, abs=1e-7)
        assert solve_gw(signed_cycle(n, 2), SolverParams(rank=3)).value < 1e-9


def test_default_rank():
    assert default_rank(4) == 4  # ceil(sqrt 8) + 1
    assert default_rank(256) == 24
    assert default_rank(8) == 5


def test_layered_graph_weights_and_lift():
    for k, d in [(1, 4), (2, 6), (3, 8)]:
        g = layered_delta_graph(k, d)
        assert g.weight.sum() == d << (d - 1)
        res = solve_gw_layered(k, d, SolverParams(rank=6, seed=1))
        lifted = lift_layered(k, d, res.solution.vectors)
        assert sdp_value(delta_instance(k, d), lifted) == pytest.approx(res.value, abs=1e-12)
        full = solve_gw(delta_instance(k, d), SolverParams(rank=6))
        assert res.value >= full.value - 1e-7  # a restricted feasible set


def test_layered_analytic_classes():
    k, d = 2, 7
    m = d - k
    classes = np.array([analytic_angles(k, d, math.sqrt(m / k), x | (((1 << i) - 1) << k))
                        for x in range(1 << k) for i in range(m + 1)])
    x = np.stack([np.cos(classes), np.sin(classes)], axis=1)
    assert objective(layered_delta_graph(k, d), x) == pytest.approx(analytic_delta_value(k, d)[0], abs=1e-14)


def test_hyperplane_round_properties():
    inst = delta_instance(1, 2)
    a = Assignment.from_int(2, 0b1011)
    got, value = hyperplane_round(inst, integral_solution(a), trials=5, seed=0)
    assert got == a and value == assignment_value(inst, a)
    opt = solve_gw(inst, SolverParams(rank=2)).solution
    assert hyperplane_round(inst, opt, 100, seed=4)[1] == brute_force_opt(inst)[0]
    rng = np.random.default_rng(0)
    for _ in range(20):
        i = random_instance(rng, 3)
        s = random_solution(rng, 3, 3)
        assert hyperplane_round(i, s, 10, seed=1)[1] >= brute_force_opt(i)[0]
    assert hyperplane_round(inst, opt, 10, seed=9) == hyperplane_round(inst, opt, 10, seed=9)


def test_tensor_solution_identity():
    rng = np.random.default_rng(5)
    for _ in range(20):
        d1, d2 = rng.integers(1, 5, 2)
        i1, i2 = random_instance(rng, d1), random_instance(rng, d2)
        s1, s2 = random_solution(rng, d1, 3), random_solution(rng, d2, 2)
        t = tensor_solution(s1, s2)
        assert t.r == 6
        expect = (d1 * sdp_value(i1, s1) + d2 * sdp_value(i2, s2)) / (d1 + d2)
        assert sdp_value(tensor_product(i1, i2), t) == pytest.approx(expect, abs=1e-12)


def test_tensor_examples():
    inst = delta_instance(1, 2)
    opt = solve_gw(inst, SolverParams(rank=2)).solution
    sq = amplify_solution(opt, 2)
    assert sdp_value(amplify(inst, 2), sq) == pytest.approx(sdp_value(inst, opt), abs=1e-12)
    ones = integral_solution(Assignment(2, np.ones(4, dtype=np.uint8)))
    v = sdp_value(tensor_product(inst, all_equal_instance(2)), tensor_solution(opt, ones))
    assert v == pytest.approx(2 * sdp_value(inst, opt) / 4, abs=1e-12)


def test_amplify():
    inst = delta_instance(1, 2)
    assert amplify(inst, 1) == inst
    assert amplify(all_equal_instance(2), 3) == all_equal_instance(6)
    assert brute_force_opt(amplify(inst, 2))[0] >= brute_force_opt(inst)[0]
    with pytest.raises(GuardError):
        amplify(delta_instance(1, 5), 5)


def test_solution_roundtrip():
    s = random_solution(np.random.default_rng(2), 3, 4)
    text = serialize_solution(s)
    back = parse_solution(text)
    assert np.array_equal(back.vectors, s.vectors) and back.d == 3
    assert json.loads(text)["r"] == 4
