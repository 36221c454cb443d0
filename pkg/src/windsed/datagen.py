"""Synthetic wind data generator.

Stands in for real 10-minute SCADA exports: draws daily log-wind fields from
a Matern-covariance KL model around a mean profile, holds each hourly value
across its six 10-minute intervals, and writes the same
`timestamp,speed_mps,power_mw` CSV the ingestion path reads.
"""
from __future__ import annotations

import datetime
from dataclasses import dataclass

import numpy as np

from .forecast import MaternKernel
from .wind_kl import HOURS, PowerCurve, build_power_curve, kl_decompose

_PHILOX_TAG_DATAGEN = 0xDA7A0001


def default_power_curve(nameplate: float = 150.0) -> PowerCurve:
    """Reference rated-power curve: smooth logistic rise from cut-in toward
    the rated band, built through the same top-hat filter as data-driven
    curves so both paths share code."""
    speeds = np.linspace(2.0, 30.0, 4000)
    powers = nameplate / (1.0 + np.exp(-(speeds - 9.0) / 1.7))
    return build_power_curve(speeds, powers, 0.05, cut_in=3.2, cut_out=26.0,
                             nameplate=nameplate)


@dataclass(frozen=True)
class SyntheticSite:
    label: str
    kernel: MaternKernel      # unit-variance lag shape
    sigma_w: float            # log-wind standard deviation
    mean_wind: float = 8.0    # m/s, flat daily profile unless profile given
    profile: tuple = ()       # optional 24 mean speeds


def synthetic_wind_table(site: SyntheticSite, days: int, seed: int,
                         curve: PowerCurve | None = None,
                         start: str = "2004-01-01"):
    """Rows of (timestamp, speed_mps, power_mw) at 10-minute cadence."""
    if days < 1:
        raise ValueError("need at least one day")
    curve = curve or default_power_curve()
    profile = np.array(site.profile, dtype=float) if site.profile else np.full(
        HOURS, site.mean_wind)
    if profile.shape != (HOURS,) or np.any(profile <= 0):
        raise ValueError("mean profile must be 24 positive speeds")
    cov = (site.sigma_w ** 2) * site.kernel.covariance_matrix()
    basis = kl_decompose(cov, np.log(profile))
    rng = np.random.Generator(np.random.Philox(
        key=[np.uint64(seed), np.uint64(_PHILOX_TAG_DATAGEN)]))
    xi = rng.standard_normal((days, HOURS))
    modes = basis.eigenvectors * np.sqrt(basis.eigenvalues)
    w_log = basis.mean + xi @ modes.T          # (days, 24)
    speeds = np.exp(w_log)
    day0 = datetime.date.fromisoformat(start)
    rows = []
    for d in range(days):
        stamp_day = day0 + datetime.timedelta(days=d)
        for h in range(HOURS):
            s = float(speeds[d, h])
            p = float(curve(s))
            for m in range(0, 60, 10):
                ts = f"{stamp_day.isoformat()}T{h:02d}:{m:02d}:00"
                rows.append((ts, s, p))
    return rows


def write_wind_csv(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("timestamp,speed_mps,power_mw\n")
        for ts, s, p in rows:
            fh.write(f"{ts},{s!r},{p!r}\n")


def read_wind_csv(path):
    """Parse a wind CSV into ((timestamp, speed) records, (speed, power)
    scatter arrays)."""
    records = []
    speeds = []
    powers = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header[:2] != ["timestamp", "speed_mps"]:
            raise ValueError(f"{path}: not a wind CSV (header {header})")
        has_power = len(header) > 2 and header[2] == "power_mw"
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) < 2 or not parts[0]:
                continue
            records.append((parts[0], float(parts[1])))
            if has_power:
                speeds.append(float(parts[1]))
                powers.append(float(parts[2]))
    return records, (np.array(speeds), np.array(powers))
