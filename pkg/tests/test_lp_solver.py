import numpy as np
import pytest

from lp_oracle import random_lp, vertex_enumeration
from windsed.lp_solver import (Basis, LinearProgram, RepeatSolver,
                               SolveOptions, solve_lp)

INF = np.inf


def simple_lp(c, A, rlo, rhi, lo, up):
    A = np.asarray(A, dtype=float).reshape(len(rlo), len(c))
    rows, cols = np.nonzero(np.ones_like(A))
    return LinearProgram(len(c), len(rlo), c, rows, cols, A[rows, cols],
                         rlo, rhi, lo, up)


def test_bound_constrained_minimum():
    lp = LinearProgram(1, 0, [1.0], [], [], [], [], [], [0.0], [INF])
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.objective == 0.0
    assert sol.x[0] == 0.0


def test_box_vertex_against_enumeration():
    # min -x-y s.t. x+y <= 1, x,y in [0,1]
    lp = simple_lp([-1.0, -1.0], [[1.0, 1.0]], [-INF], [1.0], [0, 0], [1, 1])
    sol = solve_lp(lp)
    status, val = vertex_enumeration(
        np.array([-1.0, -1.0]), np.array([[1.0, 1.0]]),
        np.array([-INF]), np.array([1.0]), np.zeros(2), np.ones(2))
    assert sol.status == status == "optimal"
    assert abs(sol.objective - val) < 1e-12
    assert abs(sol.objective + 1.0) < 1e-12


def test_contradictory_bounds_infeasible():
    lp = simple_lp([0.0], [[1.0]], [-INF], [-1.0], [0.0], [INF])
    assert solve_lp(lp).status == "infeasible"


def test_unbounded_detected():
    lp = LinearProgram(1, 0, [-1.0], [], [], [], [], [], [0.0], [INF])
    assert solve_lp(lp).status == "unbounded"


def test_iteration_limit_reported():
    rng = np.random.default_rng(3)
    c, A, rlo, rhi, lo, up = random_lp(rng)
    lp = simple_lp(c, A, rlo, rhi, lo, up)
    sol = solve_lp(lp, SolveOptions(max_iterations=1))
    assert sol.status in ("iteration_limit", "optimal", "infeasible")


def test_validation_rejects_bad_input():
    with pytest.raises(ValueError):
        LinearProgram(2, 0, [1.0], [], [], [], [], [], [0, 0], [1, 1])
    with pytest.raises(ValueError):
        LinearProgram(1, 0, [np.nan], [], [], [], [], [], [0.0], [1.0])
    with pytest.raises(ValueError):
        LinearProgram(1, 0, [1.0], [], [], [], [], [], [2.0], [1.0])
    with pytest.raises(ValueError):
        LinearProgram(1, 1, [1.0], [0], [5], [1.0], [0.0], [0.0], [0.0], [1.0])


def test_random_lps_match_oracle_and_duality():
    rng = np.random.default_rng(2718)
    n_opt = n_inf = 0
    for _ in range(120):
        c, A, rlo, rhi, lo, up = random_lp(rng)
        lp = simple_lp(c, A, rlo, rhi, lo, up)
        sol = solve_lp(lp)
        status, val = vertex_enumeration(c, A, rlo, rhi, lo, up)
        if status == "optimal":
            n_opt += 1
            assert sol.status == "optimal"
            assert abs(sol.objective - val) <= 1e-8 * (1 + abs(val))
            gap = abs(sol.objective - sol.dual_objective(lp))
            assert gap <= 1e-7 * (1 + abs(sol.objective))
        else:
            n_inf += 1
            assert sol.status == "infeasible"
    assert n_opt >= 20 and n_inf >= 20  # both branches exercised


def test_deterministic_bases():
    rng = np.random.default_rng(11)
    for _ in range(20):
        c, A, rlo, rhi, lo, up = random_lp(rng)
        lp = simple_lp(c, A, rlo, rhi, lo, up)
        s1 = solve_lp(lp)
        s2 = solve_lp(lp)
        assert s1.status == s2.status
        assert np.array_equal(s1.basis.basic, s2.basis.basic)
        assert np.array_equal(s1.basis.status, s2.basis.status)


def test_warm_start_after_bound_change():
    rng = np.random.default_rng(7)
    hits = 0
    for _ in range(30):
        c, A, rlo, rhi, lo, up = random_lp(rng)
        lp = simple_lp(c, A, rlo, rhi, lo, up)
        base = solve_lp(lp)
        if base.status != "optimal":
            continue
        hits += 1
        lp.row_lower = lp.row_lower - 0.05
        lp.row_upper = lp.row_upper + 0.05
        warm = solve_lp(lp, warm_basis=base.basis)
        cold = solve_lp(lp)
        assert warm.status == cold.status
        if warm.status == "optimal":
            assert abs(warm.objective - cold.objective) <= 1e-8 * (1 + abs(cold.objective))
            assert warm.iterations <= cold.iterations + 5
    assert hits >= 5


def test_warm_start_rejects_malformed_basis():
    lp = simple_lp([1.0, 1.0], [[1.0, 1.0]], [1.0], [1.0], [0, 0], [5, 5])
    sol = solve_lp(lp)
    bad = Basis(sol.basis.basic.copy(), sol.basis.status.copy())
    bad.status[:] = 0  # no basic columns at all
    with pytest.raises(ValueError):
        solve_lp(lp, warm_basis=bad)


def test_repeat_solver_tracks_bound_sweeps():
    # min x+y s.t. x+y >= b, tracking b
    lp = simple_lp([1.0, 1.0], [[1.0, 1.0]], [1.0], [INF], [0, 0], [10, 10])
    rs = RepeatSolver(lp)
    for b in (1.0, 3.5, 2.0, 7.25, 0.5):
        lp.row_lower[0] = b
        sol = rs.solve()
        assert sol.status == "optimal"
        assert abs(sol.objective - b) < 1e-9
    assert abs(rs.solve_value() - 0.5) < 1e-9


def test_lp_text_round_trip():
    rng = np.random.default_rng(23)
    c, A, rlo, rhi, lo, up = random_lp(rng)
    lp = simple_lp(c, A, rlo, rhi, lo, up)
    text = lp.to_text()
    lp2 = LinearProgram.from_text(text)
    assert lp2.num_rows == lp.num_rows and lp2.num_cols == lp.num_cols
    assert np.array_equal(lp2.objective, lp.objective)
    assert np.array_equal(lp2.matrix().toarray(), lp.matrix().toarray())
    assert np.array_equal(lp2.row_lower, lp.row_lower)
    assert np.array_equal(lp2.col_upper, lp.col_upper)
    s1 = solve_lp(lp)
    s2 = solve_lp(lp2)
    assert s1.status == s2.status
