import io
import math
from fractions import Fraction as F

import pytest

from asympt.expansion import build_expansion, collect_powers
from asympt.families import binomial, gamma, negbinomial, poisson
from asympt.phicat import log, power, xlogx
from asympt.verify import (
    CSV_HEADER,
    ErrorRow,
    InsufficientDataError,
    RowError,
    coefficient_check,
    decay_slope,
    error_table,
    geometric_grid,
    natural_grid,
    recursion_check,
    slope_passes,
    write_csv,
)

SQRT = power(F(-1, 2))


def synthetic(xs, f):
    return [ErrorRow(x, 0.0, f(x), f(x), 0.0) for x in xs]


def test_poisson_sqrt_scaled_err_bounded():
    rows = error_table(poisson(), SQRT, 3, [100, 200, 400, 800])
    scaled = [r.scaled_err for r in rows]
    assert all(0.02 < s < 0.05 for s in scaled)
    assert max(scaled) / min(scaled) < 1.1


def test_m1_identity_exact():
    rows = error_table(poisson(), power(-1), 1, [10, 20, 40])
    for r in rows:
        assert r.abs_err <= 1e-13 * r.x


def test_binomial_log_scaled_err_bounded():
    fam = binomial(F(1, 2))
    rows = error_table(fam, log(1), 3, natural_grid(fam, [64, 128, 256, 512]))
    assert [r.x for r in rows] == [32, 64, 128, 256]
    assert all(0.1 < r.scaled_err < 0.5 for r in rows)


def test_error_table_validation():
    with pytest.raises(ValueError):
        error_table(poisson(), SQRT, 3, [200, 100, 400])
    with pytest.raises(ValueError):
        error_table(binomial(F(1, 3)), SQRT, 3, [F(1, 2), 10])


def test_row_error_carries_index(monkeypatch):
    monkeypatch.setenv("ASYMPT_MAX_TERMS", "5")
    with pytest.raises(RowError) as info:
        error_table(poisson(), SQRT, 3, [100, 200])
    assert info.value.index == 0


def test_workers_match_serial():
    xs = [100, 200, 400, 800]
    assert error_table(gamma(), xlogx(), 3, xs, workers=4) == error_table(gamma(), xlogx(), 3, xs)


def test_slope_synthetic():
    rows = synthetic([100, 200, 400, 800], lambda x: 7 * x**-3.0)
    assert decay_slope(rows, normalize=False) == pytest.approx(-3, abs=1e-12)
    assert decay_slope(rows) == pytest.approx(-3, abs=1e-12)  # envelope defaults to 1


def test_slope_insufficient():
    with pytest.raises(InsufficientDataError):
        decay_slope(synthetic([100, 200], lambda x: x**-3.0))
    zeros = synthetic([1, 2, 4, 8], lambda x: 0.0)
    with pytest.raises(InsufficientDataError):
        decay_slope(zeros)


def test_slope_skips_oracle_noise():
    rows = synthetic([100, 200, 400], lambda x: x**-3.0)
    rows.append(ErrorRow(800.0, 1.0, 1.0, 1e-12, 0.0, oracle_bound=1e-12))
    assert decay_slope(rows, normalize=False) == pytest.approx(-3, abs=1e-12)


def test_poisson_sqrt_slope():
    s = decay_slope(error_table(poisson(), SQRT, 3, [100, 200, 400, 800]))
    assert abs(s + 3) <= 0.3


def test_gamma_xlogx_slope():
    s = decay_slope(error_table(gamma(), xlogx(), 3, [50, 100, 200, 400]))
    assert s <= -2 + 0.3


def test_poisson_log_slope():
    s = decay_slope(error_table(poisson(), log(1), 3, [100, 200, 400, 800]))
    assert s <= -3 + 0.3


CATALOG_FAMILIES = [poisson(), gamma(), binomial(F(1, 2)), negbinomial(F(1, 2))]
CATALOG_PHIS = [SQRT, power(1, 1), log(1), xlogx()]


def _grid(fam):
    base = geometric_grid(100, 800)
    if fam.kind in ("binomial", "negbinomial"):
        return natural_grid(fam, [2 * x if fam.kind == "binomial" else x for x in base])
    return base


@pytest.mark.parametrize("fam", CATALOG_FAMILIES, ids=lambda f: f.label)
@pytest.mark.parametrize("phi", CATALOG_PHIS, ids=lambda p: p.label)
@pytest.mark.parametrize("M", [2, 3])
def test_catalog_slopes(fam, phi, M):
    rows = error_table(fam, phi, M, _grid(fam))
    assert len(rows) >= 4 and rows[0].x >= 100
    assert slope_passes(decay_slope(rows), M)
    # measured error at the largest x is well above the oracle's own uncertainty
    assert rows[-1].abs_err >= 10 * rows[-1].oracle_bound


def test_coefficient_check_examples():
    cs = collect_powers(build_expansion(poisson(), SQRT, 3))
    rep = coefficient_check(cs, {F(1, 2): 1, F(-1, 2): F(-1, 8), F(-3, 2): F(-7, 128)})
    assert rep.passed

    p, q = F(1, 3), F(2, 3)
    cs = collect_powers(build_expansion(binomial(p), SQRT, 3))
    rep = coefficient_check(cs, {F(1, 2): 1, F(-1, 2): -q / 8, F(-3, 2): (q - p) * q / 16 - 15 * q * q / 128})
    assert rep.passed

    cs = collect_powers(build_expansion(gamma(), xlogx(), 3))
    assert coefficient_check(cs, {("log", 1): 1, 0: F(1, 2), -1: F(-1, 12)}).passed


def test_coefficient_check_failures():
    cs = collect_powers(build_expansion(poisson(), SQRT, 3))
    rep = coefficient_check(cs, {F(1, 2): 1, F(-1, 2): F(-1, 8), F(-3, 2): F(-7, 127)})
    assert not rep.passed
    # a collected exponent missing from the expectation also fails
    assert not coefficient_check(cs, {F(1, 2): 1, F(-1, 2): F(-1, 8)}).passed
    assert "pass=False" in str(rep)


@pytest.mark.parametrize("M", range(1, 11))
def test_recursion_check(M):
    assert recursion_check(M)


def test_csv():
    rows = error_table(poisson(), SQRT, 2, [100, 200, 400])
    text = write_csv(rows)
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER) == "x,oracle,expansion,abs_err,scaled_err"
    assert len(lines) == 4
    first = [float(v) for v in lines[1].split(",")]
    assert first == [rows[0].x, rows[0].oracle, rows[0].expansion, rows[0].abs_err, rows[0].scaled_err]
    buf = io.StringIO()
    write_csv(rows, buf)
    assert buf.getvalue() == text


def test_geometric_grid():
    assert geometric_grid(100, 800) == [100, 200, 400, 800]
    assert geometric_grid(50, 400, 2) == [50, 100, 200, 400]
