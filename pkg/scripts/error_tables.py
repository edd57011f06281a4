#!/usr/bin/env python3
"""Write error tables for the catalog pairings and report decay slopes.

Usage: python scripts/error_tables.py [--M 3] [--outdir results] [--workers 4]

Each (family, phi) pair gets ``<outdir>/<family>__<phi>__M<M>.csv``; a
summary with one slope per pair is printed to stdout.
"""

import argparse
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from asympt.families import binomial, gamma, negbinomial, poisson
from asympt.phicat import log, power, xlogx
from asympt.verify import decay_slope, error_table, geometric_grid, natural_grid, slope_passes, write_csv


@dataclass
class ExperimentConfig:
    M: int = 3
    start: int = 100
    stop: int = 800
    outdir: Path = Path("results")
    workers: int = 1
    families: list = field(default_factory=lambda: [poisson(), gamma(), binomial(Fraction(1, 2)), negbinomial(Fraction(1, 2))])
    phis: list = field(default_factory=lambda: [power(Fraction(-1, 2)), power(1, 1), log(1), xlogx()])


def grid_for(family, cfg: ExperimentConfig):
    means = geometric_grid(cfg.start, cfg.stop)
    if family.kind == "binomial":
        return natural_grid(family, [m / family.p for m in means])
    if family.kind == "negbinomial":
        return natural_grid(family, [m * family.p / family.q for m in means])
    return means


def slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", label.replace("-", "m")).strip("_")


def run(cfg: ExperimentConfig) -> int:
    cfg.outdir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for fam in cfg.families:
        xs = grid_for(fam, cfg)
        for phi in cfg.phis:
            rows = error_table(fam, phi, cfg.M, xs, workers=cfg.workers)
            path = cfg.outdir / f"{slug(fam.label)}__{slug(phi.label)}__M{cfg.M}.csv"
            with open(path, "w", newline="") as fh:
                write_csv(rows, fh)
            slope = decay_slope(rows)
            ok = slope_passes(slope, cfg.M)
            failures += not ok
            print(f"{fam.label:16s} {phi.label:22s} slope={slope:8.4f} pass={ok}")
    return failures


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=3)
    ap.add_argument("--start", type=int, default=100)
    ap.add_argument("--stop", type=int, default=800)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    cfg = ExperimentConfig(M=a.M, start=a.start, stop=a.stop, outdir=a.outdir, workers=a.workers)
    raise SystemExit(1 if run(cfg) else 0)


if __name__ == "__main__":
    main()
