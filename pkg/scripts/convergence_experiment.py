#!/usr/bin/env python3
"""Standalone MC-vs-PCE convergence experiment on the 3-bus fixture.

Runs the same machinery as `windsed study` but with a denser MC schedule and
three quadrature levels, then prints the error table and fitted rates.  The
long-format CSV it writes plots directly as error vs number of model
evaluations on log-log axes.
"""
import argparse
import time
from pathlib import Path

import numpy as np

from windsed import estimate, forecast
from windsed.datagen import default_power_curve
from windsed.grid_model import load_case
from windsed.lp_solver import SolveOptions
from windsed.sed_model import SedEvaluator

DATA = Path(__file__).parent.parent / "data"


def build_model(case_path, truncation, segments):
    case = load_case(case_path)
    sites = []
    kernels = {"site_a": (11.40, 0.56), "site_b": (9.79, 0.78)}
    for s in case.renewable_sites:
        curve = default_power_curve(s.nameplate)
        mean_wind = np.full(24, 8.0)
        sigma_w = forecast.sigma_w_from_sigma_p(0.35, mean_wind, curve)
        ell, nu = kernels[s.site_label]
        sites.append(forecast.SiteModel(s.site_label, mean_wind,
                                        forecast.MaternKernel(ell, nu, 1.0),
                                        sigma_w, truncation, curve))
    spec = forecast.ForecastSpec(tuple(sites), 0.35)
    return SedEvaluator(case, spec, segments,
                        opts=SolveOptions(refactor_every=24))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--case", default=str(DATA / "case3.txt"))
    ap.add_argument("--truncation", type=int, default=3)
    ap.add_argument("--segments", type=int, default=3)
    ap.add_argument("--levels", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--mc-schedule", type=int, nargs="+",
                    default=[10, 100, 1000, 10000])
    ap.add_argument("--realizations", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="out/convergence")
    args = ap.parse_args()

    model = build_model(args.case, args.truncation, args.segments)
    t0 = time.time()
    report = estimate.convergence_study(
        model, model.dim, levels=args.levels, mc_schedule=args.mc_schedule,
        realizations=args.realizations, seed=args.seed, jobs=args.jobs)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.csv").write_text(report.to_csv())
    (outdir / "report_long.csv").write_text(report.long_table())

    print(f"elapsed {time.time() - t0:.1f}s")
    print("level  nodes      c0            E_PC")
    errs = {lvl: e for lvl, _, e in report.pce_errors}
    for rec in report.pce_records:
        e = errs.get(rec.level)
        print(f"{rec.level:>5}  {rec.n_nodes:>5}  {rec.c0:>14.4f}  "
              f"{'' if e is None else format(e, '.3e')}")
    if report.mc_fit:
        print(f"MC power-law rate  b = {report.mc_fit.rate:.3f}")
    if report.pce_fit:
        print(f"PCE power-law rate b = {report.pce_fit.rate:.3f}")
    print(f"wrote {outdir}/report.csv and report_long.csv")


if __name__ == "__main__":
    main()
