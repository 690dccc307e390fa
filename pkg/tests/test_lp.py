import numpy as np
import pytest

from mullkit.lp import LinearProgram, LpStatus, solve_lp
from oracles import enumerate_lp


def test_single_binding_constraint():
    lp = LinearProgram(c=[1.0], A=[[-1.0]], b=[-1.0])
    sol = solve_lp(lp)
    assert sol.status == LpStatus.OPTIMAL
    assert sol.z[0] == pytest.approx(1.0, abs=1e-9)
    assert sol.objective_value == pytest.approx(1.0, abs=1e-9)


def test_symmetric_two_variable():
    lp = LinearProgram(c=[1.0, 1.0], A=[[-1.0, -1.0]], b=[-2.0])
    sol = solve_lp(lp)
    assert sol.status == LpStatus.OPTIMAL
    assert sol.objective_value == pytest.approx(2.0, abs=1e-9)


def test_infeasible_detected():
    # z1 <= -1 with z1 >= 0 is empty
    lp = LinearProgram(c=[1.0], A=[[1.0]], b=[-1.0])
    assert solve_lp(lp).status == LpStatus.INFEASIBLE


def test_unbounded_detected():
    lp = LinearProgram(c=[-1.0], A=[[-1.0]], b=[0.0])
    assert solve_lp(lp).status == LpStatus.UNBOUNDED


def _random_lp(rng):
    m = int(rng.integers(1, 7))
    q = int(rng.integers(1, 7))
    A = rng.normal(size=(q, m))
    b = rng.normal(size=q) * 2
    c = rng.normal(size=m)
    return LinearProgram(c, A, b)


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(100)
    counts = {"optimal": 0, "infeasible": 0, "unbounded": 0}
    for _ in range(200):
        lp = _random_lp(rng)
        status, _, obj = enumerate_lp(lp.c, lp.A, lp.b)
        counts[status] += 1
        sol = solve_lp(lp)
        assert sol.status.value == status, f"{lp} -> {sol.status} vs {status}"
        if status == "optimal":
            assert sol.objective_value == pytest.approx(obj, abs=1e-8)
            # feasibility certificate
            scale = 1.0 + float(np.max(np.abs(lp.b)))
            assert np.max(lp.A @ sol.z - lp.b) <= 1e-8 * scale
            assert np.min(sol.z) >= -1e-8
    # the generator should exercise all three outcomes
    assert min(counts.values()) >= 5


def test_determinism():
    rng = np.random.default_rng(7)
    lp = _random_lp(rng)
    s1 = solve_lp(lp)
    s2 = solve_lp(lp)
    assert s1.status == s2.status
    if s1.status == LpStatus.OPTIMAL:
        assert np.array_equal(s1.z, s2.z)


def test_objective_scaling_keeps_vertex():
    rng = np.random.default_rng(8)
    for _ in range(20):
        lp = _random_lp(rng)
        sol = solve_lp(lp)
        if sol.status != LpStatus.OPTIMAL:
            continue
        scaled = LinearProgram(2.5 * lp.c, lp.A, lp.b)
        sol2 = solve_lp(scaled)
        assert sol2.status == LpStatus.OPTIMAL
        assert sol2.objective_value == pytest.approx(2.5 * sol.objective_value,
                                                     rel=1e-9, abs=1e-9)
        active1 = np.abs(lp.A @ sol.z - lp.b) < 1e-7
        active2 = np.abs(lp.A @ sol2.z - lp.b) < 1e-7
        assert np.array_equal(active1, active2)


def test_degenerate_lp_terminates():
    # many redundant constraints through the same vertex
    A = np.array([[1.0, 1.0], [1.0, 1.0], [2.0, 2.0], [1.0, 0.0], [0.0, 1.0]])
    b = np.array([1.0, 1.0, 2.0, 1.0, 1.0])
    lp = LinearProgram([-1.0, -1.0], A, b)
    sol = solve_lp(lp)
    assert sol.status == LpStatus.OPTIMAL
    assert sol.objective_value == pytest.approx(-1.0, abs=1e-9)


def test_equality_like_rows():
    # x1 + x2 <= 1 and -(x1 + x2) <= -1 pins the simplex face
    A = np.array([[1.0, 1.0], [-1.0, -1.0]])
    b = np.array([1.0, -1.0])
    lp = LinearProgram([1.0, 2.0], A, b)
    sol = solve_lp(lp)
    assert sol.status == LpStatus.OPTIMAL
    assert sol.objective_value == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(sol.z, [1.0, 0.0], atol=1e-8)


def test_dimension_validation():
    with pytest.raises(ValueError):
        LinearProgram([1.0], np.ones((2, 2)), [1.0, 1.0])
    with pytest.raises(ValueError):
        LinearProgram([1.0, np.inf], np.ones((1, 2)), [1.0])


def test_no_constraints():
    lp = LinearProgram([1.0, 0.0], np.zeros((0, 2)), np.zeros(0))
    sol = solve_lp(lp)
    assert sol.status == LpStatus.OPTIMAL
    assert np.allclose(sol.z, 0.0)
    assert solve_lp(LinearProgram([-1.0], np.zeros((0, 1)), np.zeros(0))).status \
        == LpStatus.UNBOUNDED
