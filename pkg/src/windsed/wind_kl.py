"""Karhunen-Loeve representation of daily log-wind profiles plus the
diagnostics used to justify it: explained-variance fractions, empirical CDFs
against a standard normal, distance correlation between mode coordinates,
and the filtered rated-power curve for converting wind speed to power.

Days are 24-dimensional samples of W_L = log(wind speed); the discrete
Fredholm eigenproblem with unit-width midpoint weights reduces to the plain
symmetric eigendecomposition of the 24x24 covariance matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

HOURS = 24
INTERVALS_PER_DAY = 144  # 10-minute raw cadence


class WindDataError(Exception):
    pass


@dataclass(frozen=True)
class WindSampleSet:
    site_label: str
    samples: np.ndarray          # (n_days, 24) of log wind speed
    day_labels: tuple = ()       # ISO dates, parallel to rows when known
    dropped: dict = field(default_factory=dict)  # reason -> count

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != HOURS:
            raise ValueError("samples must be (n_days, 24)")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class KLBasis:
    mean: np.ndarray          # (24,)
    eigenvalues: np.ndarray   # (24,), nonincreasing
    eigenvectors: np.ndarray  # (24, 24), columns orthonormal

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        vec = np.asarray(self.eigenvectors, dtype=float)
        mean = np.asarray(self.mean, dtype=float)
        if mean.shape != (HOURS,) or lam.shape != (HOURS,) or vec.shape != (HOURS, HOURS):
            raise ValueError("KLBasis shapes must be 24 / 24 / 24x24")
        if np.any(np.diff(lam) > 1e-12):
            raise ValueError("eigenvalues must be nonincreasing")
        if np.any(lam < -1e-10):
            raise ValueError("eigenvalues must be nonnegative")
        if np.max(np.abs(vec.T @ vec - np.eye(HOURS))) > 1e-10:
            raise ValueError("eigenvectors must be orthonormal")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenvectors", vec)

    def to_text(self) -> str:
        out = ["KLBASIS 24"]
        out.append("MEAN " + " ".join(repr(float(v)) for v in self.mean))
        out.append("EIGENVALUES " + " ".join(repr(float(v)) for v in self.eigenvalues))
        for k in range(HOURS):
            out.append(f"VEC {k} " + " ".join(repr(float(v)) for v in self.eigenvectors[:, k]))
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "KLBasis":
        lines = [l.split() for l in text.splitlines() if l.strip()]
        if lines[0][0] != "KLBASIS":
            raise ValueError("not a KL basis file")
        mean = np.array([float(v) for v in lines[1][1:]])
        lam = np.array([float(v) for v in lines[2][1:]])
        vec = np.empty((HOURS, HOURS))
        for row in lines[3:]:
            vec[:, int(row[1])] = [float(v) for v in row[2:]]
        return cls(mean, lam, vec)


# -- data preparation ---------------------------------------------------------

def hourly_average(records, site_label: str = "") -> WindSampleSet:
    """Collapse 10-minute (timestamp, speed) records into daily 24-vectors of
    log hourly-mean speed.

    Days with missing intervals or nonpositive speeds are dropped and counted
    in the result's `dropped` mapping rather than raising.
    """
    by_day = {}
    for ts, speed in records:
        day = str(ts)[:10]
        by_day.setdefault(day, []).append((str(ts), float(speed)))
    rows, labels = [], []
    dropped = {"missing": 0, "nonpositive": 0}
    for day in sorted(by_day):
        recs = by_day[day]
        if len(recs) != INTERVALS_PER_DAY:
            dropped["missing"] += 1
            continue
        speeds = np.array([s for _, s in sorted(recs)])
        if np.any(speeds <= 0):
            dropped["nonpositive"] += 1
            continue
        rows.append(np.log(speeds.reshape(HOURS, 6).mean(axis=1)))
        labels.append(day)
    if not rows:
        raise WindDataError(
            f"no complete days (dropped: {dropped})" if any(dropped.values())
            else "no records")
    return WindSampleSet(site_label, np.array(rows), tuple(labels), dropped)


def empirical_covariance(samples: WindSampleSet | np.ndarray) -> np.ndarray:
    """Unbiased (n-1) sample covariance across days; symmetric PSD."""
    mat = samples.samples if isinstance(samples, WindSampleSet) else np.asarray(samples, dtype=float)
    if len(mat) < 2:
        raise WindDataError("need at least 2 samples for a covariance")
    centered = mat - mat.mean(axis=0)
    cov = centered.T @ centered / (len(mat) - 1)
    return 0.5 * (cov + cov.T)


# -- KL decomposition -----------------------------------------------------------

def kl_decompose(cov: np.ndarray, mean: np.ndarray) -> KLBasis:
    """Eigendecomposition of the covariance, sorted by nonincreasing
    eigenvalue, with each eigenvector's largest-magnitude entry made positive.

    With unit-width midpoint weights on the hourly grid the Nystrom
    discretization of the covariance eigenproblem is exactly this matrix
    problem.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (HOURS, HOURS):
        raise ValueError("covariance must be 24x24")
    if np.max(np.abs(cov - cov.T)) > 1e-8:
        raise ValueError("covariance is not symmetric")
    lam, vec = np.linalg.eigh(0.5 * (cov + cov.T))
    lam = np.maximum(lam[::-1], 0.0)  # clip eigh's roundoff-negative tail
    vec = vec[:, ::-1].copy()
    for k in range(HOURS):
        j = int(np.argmax(np.abs(vec[:, k])))
        if vec[j, k] < 0:
            vec[:, k] = -vec[:, k]
    return KLBasis(np.asarray(mean, dtype=float), lam, vec)


def variance_fraction(basis: KLBasis, n_modes: int) -> float:
    """Percentage of total variance captured by the first n_modes modes."""
    if not 1 <= n_modes <= HOURS:
        raise ValueError("n_modes must be in 1..24")
    total = float(basis.eigenvalues.sum())
    if total == 0.0:
        return 100.0  # constant field: any truncation is exact
    return 100.0 * float(basis.eigenvalues[:n_modes].sum()) / total


def project_samples(basis: KLBasis, samples: WindSampleSet | np.ndarray,
                    lam_tol: float = 1e-12):
    """Mode coordinates xi_jk = (sample_j - mean).f_k / sqrt(lambda_k).

    Modes with lambda <= lam_tol are skipped (their xi column is zero) and
    returned in the second element.
    """
    mat = samples.samples if isinstance(samples, WindSampleSet) else np.asarray(samples, dtype=float)
    centered = mat - basis.mean
    proj = centered @ basis.eigenvectors
    xi = np.zeros_like(proj)
    skipped = []
    for k in range(HOURS):
        lam = basis.eigenvalues[k]
        if lam > lam_tol:
            xi[:, k] = proj[:, k] / math.sqrt(lam)
        else:
            skipped.append(k)
    return xi, skipped


def reconstruct(basis: KLBasis, xi, n_modes: int) -> np.ndarray:
    """Truncated expansion mean + sum_{k<=N} sqrt(lambda_k) xi_k f_k.

    Accepts a single germ vector or a (n_samples, >=N) matrix of them.
    """
    if n_modes > HOURS:
        raise ValueError("truncation exceeds 24 modes")
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] < n_modes:
        raise ValueError("germ vector shorter than truncation order")
    modes = basis.eigenvectors[:, :n_modes] * np.sqrt(basis.eigenvalues[:n_modes])
    return basis.mean + xi[..., :n_modes] @ modes.T


# -- distribution diagnostics ----------------------------------------------------

@dataclass(frozen=True)
class EmpiricalCdf:
    """Right-continuous step CDF of a sample."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.sort(np.asarray(self.points, dtype=float))
        if len(pts) == 0:
            raise ValueError("empty sample")
        object.__setattr__(self, "points", pts)

    def __call__(self, x):
        return np.searchsorted(self.points, x, side="right") / len(self.points)


def empirical_cdf(values) -> EmpiricalCdf:
    return EmpiricalCdf(np.asarray(values, dtype=float))


def _normal_cdf(x):
    return 0.5 * (1.0 + np.vectorize(math.erf)(np.asarray(x) / math.sqrt(2.0)))


def compare_to_normal(values) -> float:
    """Kolmogorov-Smirnov distance between the sample and N(0,1)."""
    values = np.asarray(values, dtype=float)
    if len(values) < 2:
        raise ValueError("need at least 2 samples")
    xs = np.sort(values)
    n = len(xs)
    phi = _normal_cdf(xs)
    upper = np.max(np.arange(1, n + 1) / n - phi)
    lower = np.max(phi - np.arange(0, n) / n)
    return float(max(upper, lower))


def distance_correlation(x, y, block: int = 1024) -> float:
    """Szekely sample distance correlation via double-centered distance
    matrices, computed blockwise so 1e4-sample inputs stay in memory.

    Returns 0 for inputs with zero distance variance (constant samples).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    n = len(x)
    if n != len(y):
        raise ValueError("samples must be paired")
    if n < 2:
        raise ValueError("need at least 2 samples")

    ax = np.zeros(n)
    ay = np.zeros(n)
    sxx = syy = sxy = 0.0
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        dx = np.sqrt(np.sum((x[lo:hi, None, :] - x[None, :, :]) ** 2, axis=2))
        dy = np.sqrt(np.sum((y[lo:hi, None, :] - y[None, :, :]) ** 2, axis=2))
        ax[lo:hi] = dx.sum(axis=1)
        ay[lo:hi] = dy.sum(axis=1)
        sxx += float(np.sum(dx * dx))
        syy += float(np.sum(dy * dy))
        sxy += float(np.sum(dx * dy))
    sx = float(ax.sum())
    sy = float(ay.sum())

    def centered_dot(sab, ra, rb, ta, tb):
        # sum over ij of (a_ij - rowmean_i - colmean_j + grand)(same for b)
        return (sab / n ** 2 - 2.0 * float(ra @ rb) / n ** 3
                + ta * tb / n ** 4)

    dcov2 = centered_dot(sxy, ax, ay, sx, sy)
    dvarx = centered_dot(sxx, ax, ax, sx, sx)
    dvary = centered_dot(syy, ay, ay, sy, sy)
    if dvarx <= 1e-24 or dvary <= 1e-24:
        return 0.0
    val = dcov2 / math.sqrt(dvarx * dvary)
    return float(min(max(val, 0.0), 1.0) ** 0.5)


# -- rated power curve ------------------------------------------------------------

@dataclass(frozen=True)
class PowerCurve:
    """Cubic-spline interpolant of top-hat-filtered power vs wind speed,
    clamped to [0, nameplate] and zero outside [cut_in, cut_out]."""

    knot_speeds: np.ndarray
    knot_powers: np.ndarray
    cut_in: float
    cut_out: float
    nameplate: float

    def __post_init__(self):
        ks = np.asarray(self.knot_speeds, dtype=float)
        kp = np.asarray(self.knot_powers, dtype=float)
        if len(ks) < 2 or len(ks) != len(kp):
            raise ValueError("need at least two knots")
        object.__setattr__(self, "knot_speeds", ks)
        object.__setattr__(self, "knot_powers", kp)
        object.__setattr__(self, "_spline",
                           CubicSpline(ks, kp, bc_type="natural"))

    def __call__(self, speed):
        speed = np.asarray(speed, dtype=float)
        # hold end-knot values outside the fitted span (no cubic extrapolation)
        inside = np.clip(speed, self.knot_speeds[0], self.knot_speeds[-1])
        power = np.clip(self._spline(inside), 0.0, self.nameplate)
        power = np.where((speed < self.cut_in) | (speed > self.cut_out), 0.0, power)
        return power if power.ndim else float(power)


def build_power_curve(speeds, powers, bin_width: float = 0.05,
                      cut_in: float = 3.2, cut_out: float = 26.0,
                      nameplate: float | None = None) -> PowerCurve:
    """Top-hat filter of the (speed, power) scatter: per-bin mean power at bin
    centers, empty interior bins filled by linear interpolation, then a
    natural cubic spline through the knots."""
    speeds = np.asarray(speeds, dtype=float)
    powers = np.asarray(powers, dtype=float)
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    if speeds.size == 0 or speeds.size != powers.size:
        raise ValueError("need a nonempty paired scatter")
    lo, hi = float(speeds.min()), float(speeds.max())
    nbins = max(int(math.ceil((hi - lo) / bin_width)), 1)
    which = np.clip(((speeds - lo) / bin_width).astype(int), 0, nbins - 1)
    sums = np.bincount(which, weights=powers, minlength=nbins)
    counts = np.bincount(which, minlength=nbins)
    centers = lo + (np.arange(nbins) + 0.5) * bin_width
    filled = counts > 0
    if filled.sum() < 2:
        raise WindDataError("scatter collapses to fewer than two bins")
    means = np.empty(nbins)
    means[filled] = sums[filled] / counts[filled]
    means[~filled] = np.interp(centers[~filled], centers[filled], means[filled])
    if nameplate is None:
        nameplate = float(powers.max())
    return PowerCurve(centers, means, cut_in, cut_out, nameplate)


def wind_to_power(curve: PowerCurve, w_log) -> np.ndarray:
    """Rated power for a log-wind profile: exponentiate, then evaluate."""
    return curve(np.exp(np.asarray(w_log, dtype=float)))
