import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from windsed import wind_kl as wk
from windsed.forecast import MaternKernel


def ten_minute_day(date, speeds_by_interval):
    return [(f"{date}T{h:02d}:{m:02d}:00", speeds_by_interval(h, m))
            for h in range(24) for m in range(0, 60, 10)]


# -- hourly averaging --------------------------------------------------------

def test_constant_day_gives_log_constant():
    recs = ten_minute_day("2004-01-01", lambda h, m: 6.0)
    ws = wk.hourly_average(recs, "x")
    assert ws.samples.shape == (1, 24)
    assert np.allclose(ws.samples, math.log(6.0))


def test_alternating_speeds_average_before_log():
    recs = ten_minute_day("2004-01-02", lambda h, m: 4.0 if (m // 10) % 2 == 0 else 8.0)
    ws = wk.hourly_average(recs)
    assert np.allclose(ws.samples, math.log(6.0))  # mean of raw, then log


def test_incomplete_day_dropped_and_counted():
    full = ten_minute_day("2004-01-01", lambda h, m: 5.0)
    partial = ten_minute_day("2004-01-02", lambda h, m: 5.0)[:-1]
    ws = wk.hourly_average(full + partial)
    assert len(ws) == 1
    assert ws.dropped["missing"] == 1


def test_nonpositive_speed_rejects_day_with_reason():
    bad = ten_minute_day("2004-01-03", lambda h, m: 0.0 if h == 12 else 5.0)
    good = ten_minute_day("2004-01-04", lambda h, m: 5.0)
    ws = wk.hourly_average(bad + good)
    assert len(ws) == 1
    assert ws.dropped["nonpositive"] == 1
    with pytest.raises(wk.WindDataError):
        wk.hourly_average(bad)


# -- covariance ---------------------------------------------------------------

def test_identical_samples_zero_covariance():
    mat = np.tile(np.linspace(1, 2, 24), (5, 1))
    assert np.allclose(wk.empirical_covariance(mat), 0.0)


def test_two_point_covariance_by_hand():
    d = 0.3
    a = np.zeros(24)
    b = np.zeros(24)
    a[0], b[0] = d, -d
    cov = wk.empirical_covariance(np.array([a, b]))
    assert cov[0, 0] == pytest.approx(2 * d * d)
    assert np.abs(cov).sum() == pytest.approx(2 * d * d)


def test_covariance_psd_and_needs_two_samples():
    rng = np.random.default_rng(1)
    cov = wk.empirical_covariance(rng.normal(size=(40, 24)))
    assert np.allclose(cov, cov.T)
    assert np.linalg.eigvalsh(cov).min() >= -1e-10
    with pytest.raises(wk.WindDataError):
        wk.empirical_covariance(np.zeros((1, 24)))


# -- KL decomposition -------------------------------------------------------------

def test_identity_covariance_flat_spectrum():
    basis = wk.kl_decompose(np.eye(24), np.zeros(24))
    assert np.allclose(basis.eigenvalues, 1.0)


def test_rank_one_covariance_analytic():
    v = np.linspace(0.1, 1.0, 24)
    basis = wk.kl_decompose(np.outer(v, v), np.zeros(24))
    assert basis.eigenvalues[0] == pytest.approx(float(v @ v))
    assert np.max(np.abs(basis.eigenvalues[1:])) < 1e-12
    assert np.allclose(np.abs(basis.eigenvectors[:, 0]), v / np.linalg.norm(v))
    assert basis.eigenvectors[np.argmax(np.abs(basis.eigenvectors[:, 0])), 0] > 0


def test_trace_identity_and_orthonormality():
    rng = np.random.default_rng(7)
    mat = rng.normal(size=(60, 24)) @ np.diag(np.linspace(0.1, 1, 24))
    cov = wk.empirical_covariance(mat)
    basis = wk.kl_decompose(cov, mat.mean(axis=0))
    assert abs(basis.eigenvalues.sum() - np.trace(cov)) < 1e-8
    gram = basis.eigenvectors.T @ basis.eigenvectors
    assert np.max(np.abs(gram - np.eye(24))) < 1e-10


def test_asymmetric_covariance_rejected():
    cov = np.eye(24)
    cov[0, 1] = 0.5
    with pytest.raises(ValueError, match="symmetric"):
        wk.kl_decompose(cov, np.zeros(24))


def test_variance_fraction_cases():
    lam = np.zeros(24)
    lam[0], lam[1] = 3.0, 1.0
    basis = wk.KLBasis(np.zeros(24), lam, np.eye(24))
    assert wk.variance_fraction(basis, 1) == pytest.approx(75.0)
    assert wk.variance_fraction(basis, 24) == 100.0
    degenerate = wk.KLBasis(np.zeros(24), np.zeros(24), np.eye(24))
    assert wk.variance_fraction(degenerate, 3) == 100.0
    with pytest.raises(ValueError):
        wk.variance_fraction(basis, 0)


# -- projection / reconstruction ------------------------------------------------------

@pytest.fixture(scope="module")
def gaussian_basis():
    cov = MaternKernel(11.0, 0.6, 0.25).covariance_matrix()
    return wk.kl_decompose(cov, np.linspace(1.5, 2.5, 24))


def test_projecting_mean_gives_zero(gaussian_basis):
    xi, skipped = wk.project_samples(gaussian_basis, gaussian_basis.mean[None, :])
    assert np.max(np.abs(xi)) < 1e-10
    assert skipped == []


def test_unit_mode_projection(gaussian_basis):
    b = gaussian_basis
    sample = b.mean + math.sqrt(b.eigenvalues[0]) * b.eigenvectors[:, 0]
    xi, _ = wk.project_samples(b, sample[None, :])
    assert xi[0, 0] == pytest.approx(1.0)
    assert np.max(np.abs(xi[0, 1:])) < 1e-9


def test_full_rank_round_trip(gaussian_basis):
    rng = np.random.default_rng(3)
    samples = wk.reconstruct(gaussian_basis, rng.standard_normal((20, 24)), 24)
    xi, _ = wk.project_samples(gaussian_basis, samples)
    again = wk.reconstruct(gaussian_basis, xi, 24)
    assert np.max(np.abs(again - samples)) < 1e-8


def test_zero_germ_reconstructs_mean(gaussian_basis):
    assert np.allclose(wk.reconstruct(gaussian_basis, np.zeros(24), 6),
                       gaussian_basis.mean)


def test_truncation_error_is_parseval_tail(gaussian_basis):
    b = gaussian_basis
    rng = np.random.default_rng(4)
    xi = rng.standard_normal(24)
    n = 6
    full = wk.reconstruct(b, xi, 24)
    trunc = wk.reconstruct(b, xi, n)
    err2 = float(np.sum((full - trunc) ** 2))
    tail = float(np.sum(b.eigenvalues[n:] * xi[n:] ** 2))
    assert err2 == pytest.approx(tail, rel=1e-10)


def test_reconstruct_bounds_checked(gaussian_basis):
    with pytest.raises(ValueError):
        wk.reconstruct(gaussian_basis, np.zeros(24), 25)
    with pytest.raises(ValueError):
        wk.reconstruct(gaussian_basis, np.zeros(3), 6)


def test_zero_eigenvalue_columns_skipped():
    lam = np.zeros(24)
    lam[0] = 2.0
    basis = wk.KLBasis(np.zeros(24), lam, np.eye(24))
    xi, skipped = wk.project_samples(basis, np.ones((2, 24)))
    assert skipped == list(range(1, 24))
    assert np.all(xi[:, 1:] == 0.0)


def test_sampled_covariance_converges_to_input(gaussian_basis):
    b = gaussian_basis
    rng = np.random.default_rng(11)
    fields = wk.reconstruct(b, rng.standard_normal((100_000, 24)), 24)
    emp = wk.empirical_covariance(fields)
    target = b.eigenvectors @ np.diag(b.eigenvalues) @ b.eigenvectors.T
    rel = np.linalg.norm(emp - target) / np.linalg.norm(target)
    assert rel < 0.05


# -- CDFs and KS --------------------------------------------------------------------

def test_two_point_cdf_steps():
    cdf = wk.empirical_cdf([-1.0, 1.0])
    assert cdf(-1.0001) == 0.0
    assert cdf(-1.0) == 0.5
    assert cdf(0.0) == 0.5
    assert cdf(1.0) == 1.0


def test_ks_normal_sample_small():
    rng = np.random.default_rng(21)
    ks = wk.compare_to_normal(rng.standard_normal(10_000))
    assert ks < 0.03


def test_ks_degenerate_sample_large():
    assert wk.compare_to_normal(np.zeros(50)) >= 0.5
    with pytest.raises(ValueError):
        wk.compare_to_normal([1.0])


# -- distance correlation -------------------------------------------------------------

def dcor_oracle(x, y):
    """Direct double-centering computation, O(n^2) memory."""
    x = np.atleast_2d(np.asarray(x, float).T).T
    y = np.atleast_2d(np.asarray(y, float).T).T
    a = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2))
    b = np.sqrt(((y[:, None, :] - y[None, :, :]) ** 2).sum(axis=2))
    A = a - a.mean(axis=0) - a.mean(axis=1)[:, None] + a.mean()
    B = b - b.mean(axis=0) - b.mean(axis=1)[:, None] + b.mean()
    dcov2 = (A * B).mean()
    dvx = (A * A).mean()
    dvy = (B * B).mean()
    return math.sqrt(dcov2 / math.sqrt(dvx * dvy))


def test_dcor_self_dependence_is_one():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(100)
    assert wk.distance_correlation(x, x) == pytest.approx(1.0)


def test_dcor_five_point_hand_sample():
    x = np.array([0.1, -1.2, 0.7, 2.0, -0.4])
    y = np.array([1.0, 0.3, -0.6, 1.1, 0.0])
    assert wk.distance_correlation(x, y) == pytest.approx(dcor_oracle(x, y), abs=1e-12)


def test_dcor_independent_samples_small():
    rng = np.random.default_rng(17)
    x = rng.standard_normal(10_000)
    y = rng.standard_normal(10_000)
    assert wk.distance_correlation(x, y) < 0.1


def test_dcor_constant_input_zero():
    assert wk.distance_correlation(np.ones(30), np.arange(30.0)) == 0.0


def test_dcor_symmetric():
    rng = np.random.default_rng(8)
    x = rng.standard_normal(60)
    y = x ** 2 + 0.1 * rng.standard_normal(60)
    assert wk.distance_correlation(x, y) == pytest.approx(
        wk.distance_correlation(y, x), abs=1e-12)


@given(a=st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3),
       b=st.floats(-10, 10))
@settings(max_examples=25, deadline=None)
def test_dcor_affine_invariant(a, b):
    rng = np.random.default_rng(12)
    x = rng.standard_normal(50)
    y = np.sin(x) + 0.2 * rng.standard_normal(50)
    d1 = wk.distance_correlation(x, y)
    d2 = wk.distance_correlation(a * x + b, y)
    assert abs(d1 - d2) < 1e-10


# -- power curve -----------------------------------------------------------------------

def test_power_zero_outside_cut_in_out():
    sp = np.linspace(3.2, 26.0, 2000)
    curve = wk.build_power_curve(sp, sp / 30, 0.05)
    assert curve(2.0) == 0.0   # below cut-in
    assert curve(27.0) == 0.0  # beyond cut-out
    assert curve(10.0) > 0.0


def test_linear_scatter_reproduced_at_bin_centers():
    sp = np.linspace(3.2, 26.0, 4000)
    curve = wk.build_power_curve(sp, sp / 30, 0.05, nameplate=1.0)
    centers = curve.knot_speeds
    assert np.max(np.abs(curve(centers) - centers / 30)) < 1e-3


def test_empty_interior_bins_interpolated():
    sp = np.concatenate([np.linspace(4, 8, 300), np.linspace(12, 20, 300)])
    pw = sp / 30
    curve = wk.build_power_curve(sp, pw, 0.05)
    assert curve(10.0) == pytest.approx(10.0 / 30, rel=0.05)


def test_all_empty_scatter_rejected():
    with pytest.raises(ValueError):
        wk.build_power_curve(np.array([]), np.array([]), 0.05)
    with pytest.raises(ValueError):
        wk.build_power_curve(np.array([1.0]), np.array([1.0]), -0.1)


def test_wind_to_power_exponentiates():
    sp = np.linspace(1.0, 30.0, 3000)
    curve = wk.build_power_curve(sp, np.minimum(sp, 15.0), 0.05,
                                 cut_in=0.0, cut_out=100.0, nameplate=15.0)
    w_log = np.log(np.array([5.0, 20.0]))
    out = wk.wind_to_power(curve, w_log)
    assert out[0] == pytest.approx(5.0, rel=0.02)
    assert out[1] == pytest.approx(15.0, rel=0.02)


def test_power_clamped_to_nameplate():
    sp = np.linspace(3.2, 26.0, 2000)
    curve = wk.build_power_curve(sp, sp, 0.05, nameplate=10.0)
    speeds = np.linspace(0, 30, 500)
    out = curve(speeds)
    assert out.min() >= 0.0 and out.max() <= 10.0


# -- serialization ----------------------------------------------------------------------

def test_kl_basis_text_round_trip(gaussian_basis):
    again = wk.KLBasis.from_text(gaussian_basis.to_text())
    assert np.array_equal(again.mean, gaussian_basis.mean)
    assert np.array_equal(again.eigenvalues, gaussian_basis.eigenvalues)
    assert np.array_equal(again.eigenvectors, gaussian_basis.eigenvectors)
