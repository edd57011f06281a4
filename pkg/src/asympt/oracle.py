"""Brute-force expectations ``E phi(U_x)`` used as ground truth.

Discrete families are summed outward from the mode with weights generated
by their ratio recurrences, relative to the mode weight and normalised by
their own sum; the gamma family is integrated by adaptive quadrature on
a window around the mean whose outside mass is bounded with incomplete
gamma functions.  Each result carries an estimate of the truncation error.

phi may be a catalog :class:`~asympt.phicat.PhiSpec` or any callable; a
callable must come with a ``majorant``: pairs ``(c, d)`` such that
``|phi(u)| <= sum c * u**d`` for u > 0.
"""

from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence, Union

from scipy import integrate, special

from .phicat import PhiSpec

DEFAULT_MAX_TERMS = 10_000_000
DEFAULT_MAX_EVALS = 1_000_000
EULER_GAMMA = 0.57721566490153286061

Phi = Union[PhiSpec, Callable[[float], float]]
Majorant = Sequence[tuple[float, float]]


class OracleConvergenceError(RuntimeError):
    """Tolerance not reached within the iteration cap; carries the best value."""

    def __init__(self, message: str, value: float, terms_used: int, tail_bound: float):
        super().__init__(message)
        self.value = value
        self.terms_used = terms_used
        self.tail_bound = tail_bound


class OracleDomainError(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    value: float
    terms_used: int
    tail_bound: float
    method: str  # "sum" or "quadrature"


def max_terms() -> int:
    env = os.environ.get("ASYMPT_MAX_TERMS")
    return int(env) if env else DEFAULT_MAX_TERMS


def _lattice(phi: Phi) -> Callable[[int], float]:
    return phi.lattice_value if isinstance(phi, PhiSpec) else phi


def _majorant(phi: Phi, majorant: Majorant | None) -> list[tuple[float, float]]:
    if majorant is not None:
        return [(float(c), float(d)) for c, d in majorant]
    if isinstance(phi, PhiSpec):
        return phi.majorant()
    raise TypeError("a callable phi needs an explicit majorant")


def _maj_value(maj, u: float) -> float:
    return sum(c * u**d for c, d in maj)


def _max_degree(maj) -> float:
    return max(max(d for _, d in maj), 0.0)


class _OutwardSum:
    """Mode-outward accumulation of ``w_k * phi(k)`` with ratio recurrences.

    Weights are relative to the mode weight (= 1) and the final value is
    normalised by the accumulated weight, so no absolute pmf is needed.
    ``up(k)`` is ``w_{k+1}/w_k`` and ``down(k)`` is ``w_{k-1}/w_k``.
    """

    def __init__(self, f, mode: int, up, down):
        self.f = f
        self.up = up
        self.down = down
        v = f(mode)
        self.weights: list[float] = [1.0]
        self.terms: list[float] = [v]
        self.lo = self.hi = mode
        self.w_lo = self.w_hi = 1.0
        self.phi_lo_max = abs(v)
        # running (uncompensated) sums, only used for stopping decisions
        self.run_w = 1.0
        self.run_t = v
        self.run_abs = abs(v)

    def _push(self, w: float, v: float):
        t = w * v
        self.weights.append(w)
        self.terms.append(t)
        self.run_w += w
        self.run_t += t
        self.run_abs += abs(t)

    def step_low(self):
        self.w_lo *= self.down(self.lo)
        self.lo -= 1
        v = self.f(self.lo)
        self.phi_lo_max = max(self.phi_lo_max, abs(v))
        self._push(self.w_lo, v)

    def step_high(self):
        self.w_hi *= self.up(self.hi)
        self.hi += 1
        self._push(self.w_hi, self.f(self.hi))

    def result(self) -> float:
        return math.fsum(self.terms) / math.fsum(self.weights)


def _discrete_expectation(f, maj, mode, up, down, kmin, kmax, tol, low_ratio, high_ratio):
    """Outward summation with geometric tail bounds.

    ``low_ratio(k)`` bounds ``w_{j-1}/w_j`` for all j <= k and
    ``high_ratio(k)`` bounds ``w_{j+1}/w_j`` for all j > k.
    """
    cap = max_terms()
    acc = _OutwardSum(f, mode, up, down)
    d = _max_degree(maj)
    low_done = mode <= kmin
    high_done = kmax is not None and mode >= kmax
    phi0 = abs(f(kmin))
    tail = 0.0
    while not (low_done and high_done):
        if not low_done:
            acc.step_low()
            low_done = acc.lo <= kmin
        if not high_done and (tol == 0 or len(acc.terms) < cap):
            acc.step_high()
            high_done = kmax is not None and acc.hi >= kmax
        if tol == 0:
            continue
        total_w = acc.run_w
        value = acc.run_t / total_w
        tail = 0.0
        if not low_done:
            rho = low_ratio(acc.lo)
            if rho >= 1:
                tail = math.inf
            else:
                mass = acc.w_lo * rho / (1 - rho) / total_w
                env = max(acc.phi_lo_max, phi0, _maj_value(maj, 1.0), _maj_value(maj, float(acc.lo)))
                tail += mass * (env + abs(value))
        if not high_done:
            k = acc.hi
            rho = high_ratio(k) * ((k + 1) / k) ** d if k > 0 else math.inf
            if rho >= 1:
                tail = math.inf
            else:
                mass = acc.w_hi * rho / (1 - rho) / total_w
                tail += mass * (_maj_value(maj, float(k)) + abs(value))
        scale = max(abs(value), 1e-3 * acc.run_abs / total_w, 1e-300)
        if tail <= tol * scale:
            break
        if len(acc.terms) >= cap:
            raise OracleConvergenceError(
                f"tolerance {tol} not reached after {len(acc.terms)} terms",
                acc.result(),
                len(acc.terms),
                tail,
            )
    if low_done and high_done:
        tail = 0.0
    return OracleResult(acc.result(), len(acc.terms), tail, "sum")


def expect_poisson(phi: Phi, x: float, tol: float = 1e-13, majorant: Majorant | None = None) -> OracleResult:
    """``exp(-x) * sum_k x^k phi(k) / k!`` summed outward from floor(x)."""
    x = float(x)
    if x <= 0 or tol <= 0:
        raise OracleDomainError("need x > 0 and tol > 0")
    maj = _majorant(phi, majorant)
    mode = int(math.floor(x))
    return _discrete_expectation(
        _lattice(phi),
        maj,
        mode,
        up=lambda k: x / (k + 1),
        down=lambda k: k / x,
        kmin=0,
        kmax=None,
        tol=tol,
        low_ratio=lambda k: k / x,
        high_ratio=lambda k: x / (k + 2),
    )


def expect_binomial(phi: Phi, n: int, p: float) -> OracleResult:
    """Exact finite sum over k = 0..n of C(n,k) p^k q^(n-k) phi(k)."""
    if n < 1 or not 0 < p < 1:
        raise OracleDomainError("need n >= 1 and 0 < p < 1")
    p = float(p)
    q = 1.0 - p
    odds = p / q
    mode = min(n, int(math.floor((n + 1) * p)))
    res = _discrete_expectation(
        _lattice(phi),
        [(1.0, 0.0)],
        mode,
        up=lambda k: (n - k) / (k + 1) * odds,
        down=lambda k: k / (n - k + 1) / odds,
        kmin=0,
        kmax=n,
        tol=0.0,
        low_ratio=lambda k: 0.0,
        high_ratio=lambda k: 0.0,
    )
    return OracleResult(res.value, res.terms_used, 0.0, "sum")


def expect_negbinomial(
    phi: Phi, n: int, p: float, tol: float = 1e-13, majorant: Majorant | None = None
) -> OracleResult:
    """sum_k C(n+k-1, k) p^n q^k phi(k), truncated by a geometric tail bound."""
    if n < 1 or not 0 < p < 1 or tol <= 0:
        raise OracleDomainError("need n >= 1, 0 < p < 1, tol > 0")
    p = float(p)
    q = 1.0 - p
    maj = _majorant(phi, majorant)
    mode = int(math.floor((n - 1) * q / p)) if n > 1 else 0
    return _discrete_expectation(
        _lattice(phi),
        maj,
        mode,
        up=lambda k: (n + k) / (k + 1) * q,
        down=lambda k: k / ((n + k - 1) * q),
        kmin=0,
        kmax=None,
        tol=tol,
        low_ratio=lambda k: k / ((n + k - 1) * q),
        high_ratio=lambda k: (n + k + 1) / (k + 2) * q,
    )


def _gamma_tail(maj, x: float, lo: float, hi: float) -> float:
    """Bound on the phi-weighted Gam(x, 1) mass outside [lo, hi]."""
    total = 0.0
    for c, d in maj:
        if x + d <= 0:
            return math.inf
        scale = math.exp(special.gammaln(x + d) - special.gammaln(x))
        low = special.gammainc(x + d, lo) if lo > 0 else 0.0
        high = special.gammaincc(x + d, hi)
        total += c * scale * (low + high)
    return total


def expect_gamma(phi: Phi, x: float, tol: float = 1e-13, majorant: Majorant | None = None) -> OracleResult:
    """Quadrature of phi(u) u^(x-1) e^(-u) / Gamma(x) over a widening window."""
    x = float(x)
    if x < 1:
        raise OracleDomainError("gamma oracle supports x >= 1 only")
    if tol <= 0:
        raise OracleDomainError("need tol > 0")
    maj = _majorant(phi, majorant)
    f = phi if not isinstance(phi, PhiSpec) else phi.__call__
    lgx = math.lgamma(x)

    def integrand(u: float) -> float:
        if u <= 0:
            return 0.0
        return f(u) * math.exp((x - 1) * math.log(u) - u - lgx)

    sd = math.sqrt(x)
    scale = abs(f(x)) + _maj_value(maj, x) * 1e-3 + 1e-300
    width = 8.0
    while True:
        lo = max(0.0, x - width * sd)
        hi = x + width * sd
        tail = _gamma_tail(maj, x, lo, hi)
        if tail <= 0.1 * tol * scale or width > 1e4:
            break
        width *= 1.5
    # quad refuses epsrel below 50 machine epsilons
    rel = max(tol, 2e-14)
    pieces = []
    evals = 0
    # split at the mean and at +-1, 3 sd so each piece is smooth and unimodal-ish
    cuts = sorted({lo, hi, x, *[c for c in (x - 3 * sd, x - sd, x + sd, x + 3 * sd) if lo < c < hi]})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(cuts[:-1], cuts[1:]):
            val, err, info = integrate.quad(
                integrand, a, b, epsabs=0.0, epsrel=rel, limit=400, full_output=True
            )[:3]
            pieces.append(val)
            evals += info["neval"]
            tail += err
    value = math.fsum(pieces)
    if evals > DEFAULT_MAX_EVALS or not math.isfinite(value):
        raise OracleConvergenceError("quadrature did not converge", value, evals, tail)
    if tail > 10 * rel * max(abs(value), scale):
        raise OracleConvergenceError(
            f"gamma quadrature error {tail:.3g} exceeds tolerance", value, evals, tail
        )
    return OracleResult(value, evals, float(tail), "quadrature")


_BERNOULLI_OVER_2K = [
    1.0 / 12,
    -1.0 / 120,
    1.0 / 252,
    -1.0 / 240,
    1.0 / 132,
    -691.0 / 32760,
    1.0 / 12,
]


def digamma_reference(x: float) -> float:
    """psi(x) by upward recurrence to x > 30, then the asymptotic series."""
    x = float(x)
    if x <= 0:
        raise OracleDomainError("digamma_reference needs x > 0")
    shifts = []
    while x <= 30:
        shifts.append(-1.0 / x)
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = []
    pw = inv2
    for b in _BERNOULLI_OVER_2K:
        series.append(-b * pw)
        pw *= inv2
    return math.fsum([math.log(x), -0.5 / x, *series, *shifts])


def expect(family, phi: Phi, x, tol: float = 1e-13, majorant: Majorant | None = None) -> OracleResult:
    """Dispatch on the family; ``x`` is the mean (discrete indices must be integral)."""
    from .families import BINOMIAL, GAMMA, NEGBINOMIAL, POISSON, natural_index

    if family.kind == POISSON:
        return expect_poisson(phi, float(x), tol, majorant)
    if family.kind == GAMMA:
        return expect_gamma(phi, float(x), tol, majorant)
    if family.kind == BINOMIAL:
        return expect_binomial(phi, natural_index(family, x), float(family.p))
    if family.kind == NEGBINOMIAL:
        return expect_negbinomial(phi, natural_index(family, x), float(family.p), tol, majorant)
    raise NotImplementedError(f"no oracle for family {family.label}")
