"""Numerical checks of expansions against the brute-force oracles."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import oracle
from .expansion import CollectedSeries, build_expansion, collect_powers, evaluate
from .families import FamilySpec, bkn_poisson, ckn_table, family_mean_index, natural_index, poisson
from .phicat import PhiSpec, growth_envelope, phi_value

CSV_HEADER = ("x", "oracle", "expansion", "abs_err", "scaled_err")
SLOPE_SLACK = 0.3


class InsufficientDataError(ValueError):
    """Fewer than three usable rows for a slope fit."""


class RowError(RuntimeError):
    """Oracle failure at one grid point; ``index`` is the row position."""

    def __init__(self, index: int, x: float, cause: Exception):
        super().__init__(f"row {index} (x={x}): {cause}")
        self.index = index
        self.x = x
        self.cause = cause


@dataclass(frozen=True)
class ErrorRow:
    x: float
    oracle: float
    expansion: float
    abs_err: float
    scaled_err: float
    oracle_bound: float = field(default=0.0, compare=False)
    envelope: float = field(default=1.0, compare=False)

    def csv_fields(self) -> list[str]:
        return [repr(float(v)) for v in (self.x, self.oracle, self.expansion, self.abs_err, self.scaled_err)]


def _oracle_tol(phi: PhiSpec, M: int, x: float, tol: float) -> float:
    # a tenth of the expected error scale G(x) x^-M, relative to |phi(x)|
    expected = growth_envelope(phi, x) * x ** (-M)
    ref = max(abs(phi_value(phi, x)), 1e-300)
    return max(min(tol, 0.1 * expected / ref), 1e-15)


def error_table(
    family: FamilySpec,
    phi: PhiSpec,
    M: int,
    xs: Sequence,
    tol: float = 1e-15,
    workers: int = 1,
) -> list[ErrorRow]:
    """Oracle vs expansion at each mean ``x``; discrete means must map to integer indices."""
    xs = list(xs)
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("xs must be strictly increasing")
    for x in xs:
        if family.discrete and family.kind != "poisson":
            natural_index(family, Fraction(x))
    e = build_expansion(family, phi, M)

    def row(i_x):
        i, x = i_x
        xf = float(x)
        try:
            res = oracle.expect(family, phi, Fraction(x), _oracle_tol(phi, M, xf, tol))
        except (oracle.OracleConvergenceError, oracle.OracleDomainError) as exc:
            raise RowError(i, xf, exc) from exc
        s = evaluate(e, xf)
        err = abs(res.value - s)
        g = growth_envelope(phi, xf)
        return ErrorRow(xf, res.value, s, err, err * xf**M / g, float(res.tail_bound), g)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(row, enumerate(xs)))
    return [row(ix) for ix in enumerate(xs)]


def natural_grid(family: FamilySpec, naturals: Iterable) -> list[Fraction]:
    """Means for a list of natural indices (n for binomial/NB, x otherwise)."""
    return [family_mean_index(family, n) for n in naturals]


def decay_slope(rows: Sequence[ErrorRow], normalize: bool = True) -> float:
    """Least-squares slope of log(abs_err / G(x)) against log x.

    ``normalize=False`` fits log(abs_err) directly (G = 1).  Rows whose error
    is within 10x of the oracle's own uncertainty are skipped.
    """
    usable = []
    for r in rows:
        floor = 10 * (r.oracle_bound + 4 * np.finfo(float).eps * abs(r.oracle))
        if r.abs_err > floor and r.abs_err > 0:
            usable.append(r)
    if len(usable) < 3:
        raise InsufficientDataError(f"need at least 3 usable rows, got {len(usable)}")
    lx = np.log([r.x for r in usable])
    ly = np.log([r.abs_err for r in usable])
    if normalize:
        ly -= np.log([r.envelope for r in usable])
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)


def slope_passes(slope: float, M: int) -> bool:
    return slope <= -M + SLOPE_SLACK


@dataclass(frozen=True)
class CoefficientVerdict:
    key: object
    expected: object
    actual: object
    ok: bool


@dataclass(frozen=True)
class CoefficientReport:
    verdicts: tuple[CoefficientVerdict, ...]

    @property
    def passed(self) -> bool:
        return all(v.ok for v in self.verdicts)

    def __str__(self):
        lines = [f"{'ok ' if v.ok else 'BAD'} {v.key}: expected {v.expected}, got {v.actual}" for v in self.verdicts]
        lines.append(f"pass={self.passed}")
        return "\n".join(lines)


def coefficient_check(collected: CollectedSeries, expected: dict) -> CoefficientReport:
    """Exact per-exponent comparison.

    Keys of ``expected`` are exponents for plain powers, or ``("log", e)``
    for ``x**e * log(x)`` terms.  Any exponent present in the collected
    series but missing from ``expected`` is reported as a failure.
    """
    verdicts = []
    seen = set()
    for key, want in expected.items():
        if isinstance(key, tuple) and key[0] == "log":
            got = collected.log_coefficients.get(Fraction(key[1]) if not isinstance(key[1], float) else key[1], 0)
        else:
            got = collected.coefficients.get(Fraction(key) if not isinstance(key, float) else key, 0)
        seen.add(key)
        verdicts.append(CoefficientVerdict(key, want, got, got == want))
    for p, c in collected.coefficients.items():
        if p not in {k for k in expected if not isinstance(k, tuple)}:
            verdicts.append(CoefficientVerdict(p, 0, c, c == 0))
    for p, c in collected.log_coefficients.items():
        if ("log", p) not in expected:
            verdicts.append(CoefficientVerdict(("log", p), 0, c, c == 0))
    return CoefficientReport(tuple(verdicts))


def recursion_check(M: int) -> bool:
    """The Poisson integer recursion reproduces the cumulant-derived table."""
    return bkn_poisson(M) == ckn_table(poisson(), M)


def write_csv(rows: Sequence[ErrorRow], fh=None) -> str:
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue() if fh is None else ""


def collected_expectation_error(family, phi, M, x) -> float:
    """|collected(x) - evaluate(x)|; used to compare the two forms."""
    e = build_expansion(family, phi, M)
    return abs(collect_powers(e).evaluate(x) - evaluate(e, x))


def geometric_grid(start, stop, factor: int = 2) -> list[Fraction]:
    out = []
    v = Fraction(start)
    while v <= Fraction(stop):
        out.append(v)
        v *= factor
    return out

