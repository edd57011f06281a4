"""Convolution families with mgf ``E exp(s U_x) = exp(x g(s))``.

Every family is indexed by its mean ``x``.  Central moments come from the
cumulants ``x * g^{(j)}(0)`` through the standard cumulant recursion, which
gives each ``mu_n`` as a polynomial in ``x``; ``c_kn`` is the coefficient of
``x^{n-k+1}`` in ``mu_n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb

from .exactmath import RatPoly, RatSeries, RationalLike, as_rational, series_exp, series_log


class FamilyParameterError(ValueError):
    """Invalid family parameters (p outside (0, 1), bad base mgf, ...)."""


POISSON = "poisson"
BINOMIAL = "binomial"
NEGBINOMIAL = "negbinomial"
GAMMA = "gamma"
CUSTOM_IID = "custom_iid"

KINDS = (POISSON, BINOMIAL, NEGBINOMIAL, GAMMA, CUSTOM_IID)
DISCRETE_KINDS = (POISSON, BINOMIAL, NEGBINOMIAL)


@dataclass(frozen=True)
class FamilySpec:
    """A distribution family satisfying the convolution mgf condition.

    Use the constructors :func:`poisson`, :func:`binomial`,
    :func:`negbinomial`, :func:`gamma` and :func:`custom_iid` rather than
    building instances directly.
    """

    kind: str
    p: Fraction | None = None
    base_mgf: RatSeries | None = field(default=None, compare=True)
    base_mean: Fraction | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FamilyParameterError(f"unknown family {self.kind!r}")
        if self.kind in (BINOMIAL, NEGBINOMIAL):
            if self.p is None:
                raise FamilyParameterError(f"{self.kind} needs p")
            p = as_rational(self.p)
            if not 0 < p < 1:
                raise FamilyParameterError(f"p must lie in (0, 1), got {p}")
            object.__setattr__(self, "p", p)
        if self.kind == CUSTOM_IID:
            if self.base_mgf is None or self.base_mean is None:
                raise FamilyParameterError("custom_iid needs base_mgf and base_mean")
            mean = as_rational(self.base_mean)
            if mean <= 0:
                raise FamilyParameterError("base_mean must be positive")
            if self.base_mgf.coeffs[0] != 1:
                raise FamilyParameterError("base mgf must equal 1 at s = 0")
            if self.base_mgf.order < 2:
                raise FamilyParameterError("base mgf must be known through s^2 at least")
            object.__setattr__(self, "base_mean", mean)
        g = g_series(self, 2)
        if g[0] != 0 or g[1] != 1:
            raise FamilyParameterError(
                f"g'(0) must equal 1 (got {g[1]}); the base mean does not match the base mgf"
            )

    @property
    def q(self) -> Fraction | None:
        return None if self.p is None else 1 - self.p

    @property
    def discrete(self) -> bool:
        return self.kind in DISCRETE_KINDS

    @property
    def max_order(self) -> int | None:
        """Highest s-order for which g is known (None = unbounded)."""
        return self.base_mgf.order if self.kind == CUSTOM_IID else None

    @property
    def label(self) -> str:
        if self.kind == BINOMIAL:
            return f"binomial:p={self.p}"
        if self.kind == NEGBINOMIAL:
            return f"nb:p={self.p}"
        if self.kind == CUSTOM_IID:
            return "iid"
        return self.kind

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.p is not None:
            out["p"] = str(self.p)
        if self.kind == CUSTOM_IID:
            out["base_mgf"] = [str(c) for c in self.base_mgf.coeffs]
            out["base_mean"] = str(self.base_mean)
        return out

    @classmethod
    def from_json(cls, d: dict) -> "FamilySpec":
        kind = d["kind"]
        if kind == CUSTOM_IID:
            mgf = RatSeries.from_coeffs([Fraction(c) for c in d["base_mgf"]])
            return cls(kind, base_mgf=mgf, base_mean=Fraction(d["base_mean"]))
        p = d.get("p")
        return cls(kind, p=None if p is None else Fraction(p))


def poisson() -> FamilySpec:
    return FamilySpec(POISSON)


def binomial(p: RationalLike) -> FamilySpec:
    return FamilySpec(BINOMIAL, p=as_rational(p))


def negbinomial(p: RationalLike) -> FamilySpec:
    return FamilySpec(NEGBINOMIAL, p=as_rational(p))


def gamma() -> FamilySpec:
    return FamilySpec(GAMMA)


def custom_iid(base_mgf: RatSeries, base_mean: RationalLike) -> FamilySpec:
    """Family of sums of i.i.d. copies of Y, indexed by ``x = n * E[Y]``.

    ``base_mgf`` holds the Taylor coefficients of ``E exp(sY)``.
    """
    return FamilySpec(CUSTOM_IID, base_mgf=base_mgf, base_mean=as_rational(base_mean))


def custom_iid_from_moments(raw_moments) -> FamilySpec:
    """Build a custom i.i.d. family from raw moments ``E[Y], E[Y^2], ...``."""
    moments = [as_rational(m) for m in raw_moments]
    coeffs = [Fraction(1)]
    fact = 1
    for j, m in enumerate(moments, start=1):
        fact *= j
        coeffs.append(m / fact)
    return custom_iid(RatSeries.from_coeffs(coeffs), moments[0])


def g_series(family: FamilySpec, order: int) -> RatSeries:
    """Taylor coefficients of ``g(s)`` through ``s**order``."""
    if order < 2:
        raise ValueError("order must be at least 2")
    return _g_series(family, order)


@lru_cache(maxsize=256)
def _g_series(family: FamilySpec, order: int) -> RatSeries:
    s = RatSeries.variable(order)
    if family.kind == POISSON:
        return series_exp(s) - RatSeries.one(order)
    if family.kind == GAMMA:
        # -log(1 - s)
        return -series_log(RatSeries.one(order) - s)
    if family.kind == BINOMIAL:
        p = family.p
        em1 = series_exp(s) - RatSeries.one(order)
        # log(q + p e^s) / p = log(1 + p (e^s - 1)) / p
        return series_log(RatSeries.one(order) + em1.scale(p)).scale(1 / p)
    if family.kind == NEGBINOMIAL:
        p, q = family.p, 1 - family.p
        em1 = series_exp(s) - RatSeries.one(order)
        # (p/q) log(p / (1 - q e^s)) = -(p/q) log(1 - (q/p)(e^s - 1))
        return series_log(RatSeries.one(order) - em1.scale(q / p)).scale(-p / q)
    if family.kind == CUSTOM_IID:
        if order > family.base_mgf.order:
            raise FamilyParameterError(
                f"base mgf known only through s^{family.base_mgf.order}, order {order} requested"
            )
        return series_log(family.base_mgf.truncate(order)).scale(1 / family.base_mean)
    raise FamilyParameterError(f"unknown family {family.kind!r}")


def cumulants(family: FamilySpec, nmax: int) -> list[RatPoly]:
    """Cumulants ``kappa_j = x * g^{(j)}(0)`` as polynomials in x, j = 0..nmax."""
    order = max(nmax, 2)
    g = g_series(family, order)
    return [RatPoly.monomial(g.derivative_at_zero(j), 1) if j else RatPoly() for j in range(nmax + 1)]


def central_moments(family: FamilySpec, nmax: int) -> list[RatPoly]:
    """Central moments ``mu_0 .. mu_nmax`` as exact polynomials in the mean x.

    mu_n = sum_{j=0}^{n-2} C(n-1, j) * mu_j * x * g^{(n-j)}(0),  mu_0 = 1, mu_1 = 0.
    """
    if nmax < 0:
        raise ValueError("nmax must be nonnegative")
    return list(_central_moments(family, nmax))


@lru_cache(maxsize=256)
def _central_moments(family: FamilySpec, nmax: int) -> tuple[RatPoly, ...]:
    mu = [RatPoly.constant(1), RatPoly()]
    if nmax < 2:
        return tuple(mu[: nmax + 1])
    g = g_series(family, nmax)
    gd = [g.derivative_at_zero(j) for j in range(nmax + 1)]
    for n in range(2, nmax + 1):
        acc = RatPoly()
        for j in range(n - 1):
            if not mu[j]:
                continue
            acc = acc + mu[j].shift_power(1).scale(comb(n - 1, j) * gd[n - j])
        mu.append(acc)
    return tuple(mu)


@dataclass(frozen=True)
class CoeffTable:
    """Coefficients ``c[k, n]`` with ``mu_n = sum_k c[k, n] x^{n-k+1}``.

    Covers ``2 <= n <= 2M-1`` and ``0 <= k <= n``; entries are exact.
    """

    M: int
    entries: dict = field(hash=False)
    symbol: str = "c"

    def __getitem__(self, key: tuple[int, int]) -> Fraction:
        return self.entries[key]

    def __eq__(self, other):
        if not isinstance(other, CoeffTable):
            return NotImplemented
        return self.M == other.M and self.entries == other.entries

    @property
    def nmax(self) -> int:
        return 2 * self.M - 1

    def items(self):
        """``((k, n), value)`` sorted by n, then k."""
        return sorted(self.entries.items(), key=lambda kv: (kv[0][1], kv[0][0]))

    def nonzero(self):
        return [(kn, v) for kn, v in self.items() if v != 0]

    def vanishing_violations(self) -> list[tuple[int, int]]:
        """Keys with ``k <= floor((n+1)/2)`` but a nonzero value."""
        return [(k, n) for (k, n), v in self.entries.items() if k <= (n + 1) // 2 and v != 0]


def ckn_table(family: FamilySpec, M: int) -> CoeffTable:
    """Read ``c_kn`` off the central-moment polynomials, 2 <= n <= 2M-1."""
    if M < 1:
        raise ValueError("M must be positive")
    nmax = 2 * M - 1
    mu = central_moments(family, max(nmax, 2))
    entries = {}
    for n in range(2, nmax + 1):
        for k in range(n + 1):
            entries[(k, n)] = mu[n].coefficient(n - k + 1)
    return CoeffTable(M, entries, "c")


@lru_cache(maxsize=None)
def _b(k: int, n: int) -> int:
    if k < 2 or n < k or n > 2 * k - 2:
        return 0
    if n == k:
        return 1
    # b_{k+1,n+1} = n b_{k,n-1} + (n-k+1) b_{k,n}, shifted down by one in k and n
    return (n - 1) * _b(k - 1, n - 2) + (n - k + 1) * _b(k - 1, n - 1)


def bkn_poisson(M: int) -> CoeffTable:
    """Poisson coefficients from the integer recursion alone (no mgf machinery)."""
    if M < 1:
        raise ValueError("M must be positive")
    entries = {}
    for n in range(2, 2 * M):
        for k in range(n + 1):
            entries[(k, n)] = Fraction(_b(k, n))
    return CoeffTable(M, entries, "b")


def family_mean_index(family: FamilySpec, natural) -> Fraction:
    """Mean x for a natural index: n*p (binomial), n*q/p (NB), n*E[Y] (iid), x otherwise."""
    if family.kind in (BINOMIAL, NEGBINOMIAL, CUSTOM_IID):
        n = natural
        if isinstance(n, float):
            if not n.is_integer():
                raise FamilyParameterError(f"natural index must be an integer, got {n}")
            n = int(n)
        if not isinstance(n, int) or isinstance(n, bool):
            n = as_rational(n)
            if n.denominator != 1:
                raise FamilyParameterError(f"natural index must be an integer, got {n}")
            n = int(n)
        if n < 1:
            raise FamilyParameterError(f"natural index must be >= 1, got {n}")
        if family.kind == BINOMIAL:
            return n * family.p
        if family.kind == NEGBINOMIAL:
            return n * family.q / family.p
        return n * family.base_mean
    x = natural if isinstance(natural, float) else as_rational(natural)
    if x <= 0:
        raise FamilyParameterError(f"mean must be positive, got {x}")
    return x if isinstance(x, Fraction) else Fraction(x)


def natural_index(family: FamilySpec, x) -> int | Fraction:
    """Inverse of :func:`family_mean_index`; raises unless the index is integral."""
    x = Fraction(x)
    if family.kind == BINOMIAL:
        n = x / family.p
    elif family.kind == NEGBINOMIAL:
        n = x * family.p / family.q
    elif family.kind == CUSTOM_IID:
        n = x / family.base_mean
    else:
        return x
    if n.denominator != 1 or n < 1:
        raise FamilyParameterError(f"mean {x} does not correspond to an integer index for {family.label}")
    return int(n)
