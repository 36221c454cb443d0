"""Forecast-consistent wind power scenario generation.

Per site: fit or specify a Matern covariance over the 24-hour lag grid,
scale it by a sigma_W derived from the forecast power uncertainty sigma_P,
eigendecompose, and map iid standard-normal germs through the truncated
expansion into log-wind fields around the day-ahead forecast profile, then
through the rated power curve.  Cross-site dependence of leading modes is
modeled as exact sharing of germ coordinates.

Randomness comes exclusively from numpy's counter-based Philox generator,
keyed per scenario index, so scenario sets are bit-reproducible and
independent of evaluation order.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import gamma as gamma_fn, kv

from .wind_kl import HOURS, KLBasis, PowerCurve, kl_decompose

_PHILOX_TAG_SCENARIO = 0x5EED0001


class ForecastError(Exception):
    pass


@dataclass(frozen=True)
class MaternKernel:
    length_scale: float  # hours
    smoothness: float    # nu
    variance: float = 1.0  # sigma_W^2, (log m/s)^2

    def __post_init__(self):
        if self.length_scale <= 0 or self.smoothness <= 0:
            raise ValueError("length scale and smoothness must be positive")
        if self.variance < 0:
            raise ValueError("variance must be nonnegative")

    def __call__(self, lag):
        return matern(lag, self)

    def covariance_matrix(self, hours: int = HOURS) -> np.ndarray:
        lags = np.abs(np.arange(hours)[:, None] - np.arange(hours)[None, :])
        return matern(lags.astype(float), self)


def matern(lag, kernel: MaternKernel):
    """Matern covariance at time lag(s) >= 0 hours.

    Standard form sigma^2 * 2^(1-nu)/Gamma(nu) * z^nu * K_nu(z) with
    z = sqrt(2 nu) lag / l; the zero-lag limit is sigma^2.
    """
    lag = np.asarray(lag, dtype=float)
    if np.any(lag < 0):
        raise ValueError("lag must be nonnegative")
    nu, ell = kernel.smoothness, kernel.length_scale
    z = math.sqrt(2.0 * nu) * lag / ell
    with np.errstate(invalid="ignore", over="ignore"):
        vals = (2.0 ** (1.0 - nu) / gamma_fn(nu)) * z ** nu * kv(nu, z)
    vals = np.where(z == 0.0, 1.0, vals)
    vals = np.nan_to_num(vals, nan=0.0)  # kv underflow at huge lags
    out = kernel.variance * vals
    return out if out.ndim else float(out)


def _pooled_lag_data(cov: np.ndarray):
    """Diagonal-normalized covariance values against lag, pooled over all
    anchor rows (the grey-line cloud of a covariance-decay plot)."""
    n = cov.shape[0]
    diag = np.diag(cov)
    if np.any(diag <= 0):
        raise ForecastError("covariance has nonpositive diagonal")
    lags, vals = [], []
    for i in range(n):
        for j in range(n):
            lags.append(abs(i - j))
            vals.append(cov[i, j] / diag[i])
    return np.array(lags, dtype=float), np.array(vals)


def fit_matern(cov: np.ndarray) -> MaternKernel:
    """Least-squares (l, nu) fit of the normalized Matern model to pooled
    lag-decay data; deterministic multi-start over a fixed grid."""
    cov = np.asarray(cov, dtype=float)
    if cov.shape[0] != cov.shape[1] or np.max(np.abs(cov - cov.T)) > 1e-8:
        raise ForecastError("need a symmetric covariance")
    lags, vals = _pooled_lag_data(cov)
    if float(np.std(vals[lags > 0])) < 1e-12:
        raise ForecastError("covariance shows no lag decay to fit")

    def residual(params):
        ell, nu = params
        if ell <= 0 or nu <= 0:
            return 1e12
        model = matern(lags, MaternKernel(ell, nu, 1.0))
        return float(np.sum((model - vals) ** 2))

    starts = [(ell, nu) for ell in (2.0, 5.0, 11.0, 20.0, 40.0)
              for nu in (0.3, 0.5, 0.8, 1.5, 3.0)]
    best = None
    history = []
    for start in starts:
        res = minimize(residual, start, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000})
        history.append((start, float(res.fun)))
        if res.x[0] > 0 and res.x[1] > 0 and (best is None or res.fun < best.fun):
            best = res
    if best is None:
        raise ForecastError(f"Matern fit failed; residual history: {history}")
    ell, nu = best.x
    return MaternKernel(float(ell), float(nu), 1.0)


def sigma_w_from_sigma_p(sigma_p: float, mean_wind, curve: PowerCurve,
                         bracket: float = 3.0) -> float:
    """Log-wind sigma_W such that pushing N(0, sigma_W^2) log-wind
    perturbations through the power curve yields an hourly-averaged relative
    power spread (std/mean) of sigma_p.

    The pushforward moments are evaluated with the in-repo 15-point nested
    Gaussian rule, so the construction is deterministic; the root is found
    by bisection.
    """
    if sigma_p < 0:
        raise ValueError("sigma_p must be nonnegative")
    if sigma_p == 0.0:
        return 0.0
    w = np.asarray(mean_wind, dtype=float)
    base = np.asarray(curve(w), dtype=float)
    active = base > 1e-9 * curve.nameplate
    if not np.any(active):
        raise ForecastError("mean wind sits entirely in flat curve regions")
    w = w[active]

    from .pce import rule_1d
    qx, qw = rule_1d(6)

    def spread(s):
        # speeds (hours, nodes); per-hour pushforward mean and std
        speeds = w[:, None] * np.exp(s * qx[None, :])
        power = np.asarray(curve(speeds), dtype=float)
        mean = power @ qw
        var = np.maximum((power ** 2) @ qw - mean ** 2, 0.0)
        ok = mean > 1e-12 * curve.nameplate
        if not np.any(ok):
            return 0.0
        return float(np.mean(np.sqrt(var[ok]) / mean[ok]))

    # spread(s) rises while the perturbed winds stay inside the operating
    # range and collapses once exp(s) crosses cut-out, so bracket the first
    # crossing on a scan grid before bisecting.
    grid = np.linspace(0.0, bracket, 241)[1:]
    cross = next((k for k, s in enumerate(grid) if spread(float(s)) >= sigma_p), None)
    if cross is None:
        raise ForecastError(
            f"target spread {sigma_p} unreachable within sigma_W <= {bracket} "
            "(curve sensitivity too low)")
    lo_s = 0.0 if cross == 0 else float(grid[cross - 1])
    hi_s = float(grid[cross])
    for _ in range(100):
        mid = 0.5 * (lo_s + hi_s)
        if spread(mid) < sigma_p:
            lo_s = mid
        else:
            hi_s = mid
    return 0.5 * (lo_s + hi_s)


@dataclass(frozen=True)
class SiteModel:
    label: str
    mean_wind: np.ndarray  # day-ahead forecast profile, m/s, length 24
    kernel: MaternKernel   # unit-variance shape; sigma_W applied separately
    sigma_w: float
    truncation: int
    curve: PowerCurve

    def __post_init__(self):
        mw = np.asarray(self.mean_wind, dtype=float)
        if mw.shape != (HOURS,):
            raise ValueError("mean wind profile must have 24 hours")
        if np.any(mw <= 0):
            raise ValueError("mean wind must be positive (log transform)")
        if not 1 <= self.truncation <= HOURS:
            raise ValueError("truncation must be in 1..24")
        object.__setattr__(self, "mean_wind", mw)

    def kl_basis(self) -> KLBasis:
        # pure function of frozen fields; memoized because scenario loops
        # call it per evaluation
        cached = getattr(self, "_kl_cache", None)
        if cached is None:
            cov = (self.sigma_w ** 2) * self.kernel.covariance_matrix()
            cached = kl_decompose(cov, np.log(self.mean_wind))
            object.__setattr__(self, "_kl_cache", cached)
        return cached


@dataclass(frozen=True)
class ForecastSpec:
    sites: tuple  # SiteModel, in declaration order
    sigma_p: float
    dependence_groups: tuple = ()  # each: tuple of (site_label, mode) pairs

    def __post_init__(self):
        if self.sigma_p <= 0:
            raise ValueError("sigma_p must be positive")
        labels = [s.label for s in self.sites]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate site label")
        seen = set()
        for group in self.dependence_groups:
            for pair in group:
                if pair in seen:
                    raise ValueError("dependence groups must be disjoint")
                seen.add(pair)
                label, mode = pair
                site = self.site(label)
                if not 1 <= mode <= site.truncation:
                    raise ValueError(f"mode {mode} outside truncation of {label}")

    def site(self, label: str) -> SiteModel:
        for s in self.sites:
            if s.label == label:
                return s
        raise KeyError(f"unknown site {label}")

    def germ_layout(self):
        """Germ coordinate index for every (site, mode); shared-group members
        reuse the coordinate of the first member encountered."""
        group_of = {}
        for group in self.dependence_groups:
            for pair in group:
                group_of[pair] = group
        assigned: dict = {}
        layout = {}
        dim = 0
        for site in self.sites:
            for mode in range(1, site.truncation + 1):
                pair = (site.label, mode)
                group = group_of.get(pair)
                if group is not None and group in assigned:
                    layout[pair] = assigned[group]
                    continue
                layout[pair] = dim
                if group is not None:
                    assigned[group] = dim
                dim += 1
        return layout, dim

    @property
    def dimension(self) -> int:
        return self.germ_layout()[1]


@dataclass(frozen=True)
class ScenarioSet:
    germs: np.ndarray         # (n_scenarios, dim)
    power: np.ndarray         # (n_scenarios, n_sites, 24) MW
    site_labels: tuple
    weights: np.ndarray | None = None  # optional quadrature weights

    def __post_init__(self):
        if self.power.ndim != 3 or self.power.shape[2] != HOURS:
            raise ValueError("power tensor must be (n, sites, 24)")
        if self.power.shape[0] != self.germs.shape[0]:
            raise ValueError("germ/power scenario counts differ")
        if len(self.site_labels) != self.power.shape[1]:
            raise ValueError("site label count mismatch")

    def __len__(self):
        return self.power.shape[0]

    def to_csv(self) -> str:
        out = ["scenario,site,hour,power_mw"]
        for s in range(len(self)):
            for j, label in enumerate(self.site_labels):
                for h in range(HOURS):
                    out.append(f"{s},{label},{h},{float(self.power[s, j, h])!r}")
        return "\n".join(out) + "\n"

    def to_binary(self) -> bytes:
        """Columnar dump: magic, counts, then germs / power / weights as
        little-endian float64 in C order (docs/file_formats.md)."""
        n, nsites, _ = self.power.shape
        dim = self.germs.shape[1]
        labels = ",".join(self.site_labels).encode()
        head = struct.pack("<4sIIII", b"WSCN", n, nsites, dim, len(labels))
        body = (labels
                + np.ascontiguousarray(self.germs, dtype="<f8").tobytes()
                + np.ascontiguousarray(self.power, dtype="<f8").tobytes())
        wflag = struct.pack("<B", 1 if self.weights is not None else 0)
        if self.weights is not None:
            body += np.ascontiguousarray(self.weights, dtype="<f8").tobytes()
        return head + wflag + body

    @classmethod
    def from_binary(cls, blob: bytes) -> "ScenarioSet":
        magic, n, nsites, dim, lablen = struct.unpack_from("<4sIIII", blob, 0)
        if magic != b"WSCN":
            raise ValueError("not a scenario dump")
        off = struct.calcsize("<4sIIII")
        (wflag,) = struct.unpack_from("<B", blob, off)
        off += 1
        labels = tuple(blob[off:off + lablen].decode().split(","))
        off += lablen
        germs = np.frombuffer(blob, "<f8", n * dim, off).reshape(n, dim).copy()
        off += 8 * n * dim
        power = np.frombuffer(blob, "<f8", n * nsites * HOURS, off).reshape(
            n, nsites, HOURS).copy()
        off += 8 * n * nsites * HOURS
        weights = None
        if wflag:
            weights = np.frombuffer(blob, "<f8", n, off).copy()
        return cls(germs, power, labels, weights)


def germ_sampler(seed: int, dimension: int):
    """Per-index iid N(0,1) germ draws from counter-based Philox streams;
    germ i is independent of how many or in what order others are drawn."""
    def draw(index: int) -> np.ndarray:
        bits = np.random.Philox(key=[np.uint64(seed), np.uint64(_PHILOX_TAG_SCENARIO + index)])
        return np.random.Generator(bits).standard_normal(dimension)
    return draw


def sample_germs(seed: int, n_scenarios: int, dimension: int) -> np.ndarray:
    draw = germ_sampler(seed, dimension)
    return np.stack([draw(i) for i in range(n_scenarios)])


def generate_scenarios(spec: ForecastSpec, germs=None, seed: int | None = None,
                       n_scenarios: int | None = None,
                       weights=None) -> ScenarioSet:
    """Map germ vectors (given, or sampled with `seed`) into per-site hourly
    power.  Shared dependence-group modes consume a single germ coordinate."""
    layout, dim = spec.germ_layout()
    if germs is None:
        if seed is None or n_scenarios is None:
            raise ValueError("need either explicit germs or (seed, n_scenarios)")
        germs = sample_germs(seed, n_scenarios, dim)
    germs = np.atleast_2d(np.asarray(germs, dtype=float))
    if germs.shape[1] != dim:
        raise ForecastError(
            f"germ dimension {germs.shape[1]} != spec dimension {dim}")
    n = germs.shape[0]
    power = np.empty((n, len(spec.sites), HOURS))
    for j, site in enumerate(spec.sites):
        basis = site.kl_basis()
        cols = [layout[(site.label, mode)] for mode in range(1, site.truncation + 1)]
        xi = germs[:, cols]
        modes = basis.eigenvectors[:, :site.truncation] * np.sqrt(
            basis.eigenvalues[:site.truncation])
        w_log = basis.mean + xi @ modes.T
        power[:, j, :] = site.curve(np.exp(w_log))
    return ScenarioSet(germs, power, tuple(s.label for s in spec.sites),
                       None if weights is None else np.asarray(weights, dtype=float))
