import math

import numpy as np
import pytest

from windsed import estimate as est
from windsed.pce import MultiIndexSet, build_sparse_grid, project


def quadratic_4d(g):
    return 100.0 + 3.0 * g[0] - 2.0 * g[1] + 1.5 * g[2] ** 2 + 0.8 * g[3] ** 2 \
        + 0.5 * g[0] * g[1]


QUAD_MEAN = 100.0 + 1.5 + 0.8  # analytic expectation


def test_mc_constant_model():
    mean, se = est.mc_estimate(lambda g: 7.0, 3, 200, seed=1)
    assert mean == 7.0 and se == 0.0


def test_mc_clt_bounds():
    mean, se = est.mc_estimate(lambda g: g[0], 1, 200_000, seed=2)
    assert abs(mean) < 4 * se
    mean, se = est.mc_estimate(lambda g: g[0] ** 2, 1, 200_000, seed=3)
    assert abs(mean - 1.0) < 4 * se


def test_mc_needs_two_samples():
    with pytest.raises(ValueError):
        est.mc_estimate(lambda g: 1.0, 1, 1, seed=0)


def test_pce_estimate_constant_and_lognormal():
    assert est.pce_estimate(lambda g: 3.25, 2, level=2) == pytest.approx(3.25, abs=1e-12)
    got = est.pce_estimate(lambda g: math.exp(0.1 * g[0]), 1, level=4)
    assert got == pytest.approx(math.exp(0.005), abs=1e-8)


def test_pce_estimate_equals_weighted_node_sum():
    grid = build_sparse_grid(3, 2)
    model = lambda g: 1.0 + g[0] ** 2 + math.sin(g[1])
    direct = math.fsum(w * model(x) for w, x in zip(grid.weights, grid.nodes))
    assert est.pce_estimate(model, 3, level=2) == pytest.approx(direct, abs=1e-12)


def test_pce_and_mc_agree_on_smooth_model():
    model = lambda g: math.exp(0.2 * g[0] - 0.1 * g[1])
    c0 = est.pce_estimate(model, 2, level=4, order=2)
    mean, se = est.mc_estimate(model, 2, 400_000, seed=5)
    assert abs(c0 - mean) < 4 * se


# -- convergence study --------------------------------------------------------

def test_constant_model_all_errors_zero():
    rep = est.convergence_study(lambda g: 42.0, 2, levels=[1, 2],
                                mc_schedule=[10, 100], realizations=3, seed=0)
    # c0 per level is 42 * sum(weights); sums agree with 1 only to ~1e-15
    assert all(e < 1e-13 for _, _, e in rep.pce_errors)
    assert all(e == 0.0 for _, _, e in rep.mc_errors)
    assert rep.mc_fit is None  # no positive MC errors to fit


def test_quadratic_mc_rate_near_half():
    rep = est.convergence_study(quadratic_4d, 4, levels=[1, 2, 3],
                                mc_schedule=[10, 100, 1000, 10000],
                                realizations=10, seed=42)
    assert 0.35 <= rep.mc_fit.rate <= 0.65
    # quadrature integrates the quadratic exactly at every level
    assert all(e < 1e-10 for _, _, e in rep.pce_errors)
    assert {r.level: r.c0 for r in rep.pce_records}[3] == pytest.approx(QUAD_MEAN)


def test_study_is_bitwise_deterministic():
    kwargs = dict(levels=[1, 2], mc_schedule=[10, 100], realizations=4, seed=9)
    r1 = est.convergence_study(quadratic_4d, 4, **kwargs)
    r2 = est.convergence_study(quadratic_4d, 4, **kwargs)
    assert r1.to_csv() == r2.to_csv()
    assert r1.long_table() == r2.long_table()


def test_study_input_validation():
    with pytest.raises(ValueError):
        est.convergence_study(quadratic_4d, 4, levels=[2],
                              mc_schedule=[10, 100], realizations=2, seed=0)
    with pytest.raises(ValueError):
        est.convergence_study(quadratic_4d, 4, levels=[1, 2],
                              mc_schedule=[10], realizations=2, seed=0)
    with pytest.raises(ValueError):
        est.convergence_study(quadratic_4d, 4, levels=[1, 2],
                              mc_schedule=[10, 100], realizations=0, seed=0)


def test_zero_reference_reported_as_failure():
    with pytest.raises(ZeroDivisionError):
        est.convergence_study(lambda g: g[0], 1, levels=[1, 2],
                              mc_schedule=[10, 100], realizations=2, seed=0)


def test_report_csv_shape():
    rep = est.convergence_study(quadratic_4d, 4, levels=[1, 2],
                                mc_schedule=[10, 100], realizations=2, seed=3)
    lines = rep.to_csv().splitlines()
    assert lines[0] == "method,resolution,realization,value,error"
    assert sum(1 for l in lines if l.startswith("pce,")) == 2
    assert sum(1 for l in lines if l.startswith("mc,")) == 4
    long_lines = rep.long_table().splitlines()
    assert long_lines[0] == "method,n_evals,error"
    assert len(long_lines) == 1 + 1 + 2  # one PCE error pair, two MC errors


def test_mc_grand_mean_converges_to_c0():
    model = lambda g: math.exp(0.15 * g[0]) + 0.5 * g[1] ** 2
    rep = est.convergence_study(model, 2, levels=[2, 3, 4],
                                mc_schedule=[100, 1000, 10000],
                                realizations=10, seed=21)
    c0_best = {r.level: r.c0 for r in rep.pce_records}[4]
    biggest = [r.mean for r in rep.mc_records if r.n_samples == 10000]
    grand = float(np.mean(biggest))
    spread = float(np.std(biggest, ddof=1) / math.sqrt(len(biggest)))
    assert abs(grand - c0_best) < 4 * max(spread, 1e-12)


def test_nested_nodes_evaluated_once():
    calls = []

    def counting(g):
        calls.append(tuple(g))
        return 1.0 + g[0] ** 2

    est.convergence_study(counting, 2, levels=[1, 2, 3],
                          mc_schedule=[10, 100], realizations=1, seed=0)
    grid_calls = len(calls) - (10 + 100)
    assert grid_calls == len(build_sparse_grid(2, 3))  # shared across levels


# -- power-law fit ------------------------------------------------------------

def test_fit_power_law_recovers_slope():
    ns = np.array([10, 100, 1000, 10000])
    errs = 3.0 * ns ** -0.5
    fit = est.fit_power_law(ns, errs)
    assert fit.rate == pytest.approx(0.5, abs=1e-12)
    assert fit.amplitude == pytest.approx(3.0, rel=1e-9)
    assert est.fit_power_law([10, 100], [0.0, 0.0]) is None


# -- cross validation -----------------------------------------------------------

def test_cross_validate_span_model_exact():
    grid = build_sparse_grid(3, 3)
    idx = MultiIndexSet.total_degree(3, 2)
    model = lambda g: 5.0 + g[0] - 0.5 * g[1] * g[2]
    sur = project(model, grid, idx)
    cv = est.cross_validate(sur, model, 400, seed=8)
    assert cv["median"] <= 1e-9
    assert np.max(cv["percent_errors"]) <= 1e-7


def test_cross_validate_constant_zero_error():
    grid = build_sparse_grid(2, 2)
    idx = MultiIndexSet.total_degree(2, 1)
    sur = project(lambda g: 11.0, grid, idx)
    cv = est.cross_validate(sur, lambda g: 11.0, 50, seed=2)
    assert cv["median"] < 1e-12  # zero up to the weight-sum roundoff


def test_cross_validate_errors_shrink_with_order():
    model = lambda g: math.exp(0.4 * g[0] + 0.2 * g[1])
    medians = []
    for order in (1, 2, 3):
        grid = build_sparse_grid(2, order + 1)
        sur = project(model, grid, MultiIndexSet.total_degree(2, order))
        medians.append(est.cross_validate(sur, model, 2000, seed=4)["median"])
    assert medians[0] > medians[1] > medians[2]


def test_parallel_map_matches_serial():
    germs = np.random.default_rng(0).standard_normal((300, 4))
    serial = est.parallel_map(quadratic_4d, germs, jobs=1)
    twice = est.parallel_map(quadratic_4d, germs, jobs=2)
    assert np.allclose(serial, twice)
