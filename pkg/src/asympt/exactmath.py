"""Exact rational polynomials and truncated power series.

Rationals are :class:`fractions.Fraction` (always reduced, positive
denominator).  :class:`RatPoly` is a polynomial in the mean parameter ``x``;
:class:`RatSeries` is a power series in ``s`` truncated at a fixed order.
Both are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, Sequence, Union

Rational = Fraction
RationalLike = Union[int, Fraction, str]


class OrderMismatchError(ValueError):
    """Binary series operation on operands truncated at different orders."""


class SeriesDomainError(ValueError):
    """exp/log requested on a series whose constant term is not admissible."""


def as_rational(value: RationalLike) -> Fraction:
    """Coerce ``value`` to an exact Fraction; floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational")
    if isinstance(value, (int, _RationalABC)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def _strip(coeffs: Iterable[Fraction]) -> tuple[Fraction, ...]:
    out = [as_rational(c) for c in coeffs]
    while out and out[-1] == 0:
        out.pop()
    return tuple(out)


@dataclass(frozen=True)
class RatPoly:
    """Polynomial ``sum(coeffs[i] * x**i)`` with exact rational coefficients.

    The zero polynomial has an empty coefficient tuple and degree -1.
    """

    coeffs: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _strip(self.coeffs))

    @classmethod
    def constant(cls, c: RationalLike) -> "RatPoly":
        return cls((as_rational(c),))

    @classmethod
    def monomial(cls, c: RationalLike, power: int) -> "RatPoly":
        return cls((Fraction(0),) * power + (as_rational(c),))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, i: int) -> Fraction:
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return Fraction(0)

    def __bool__(self):
        return bool(self.coeffs)

    def __add__(self, other: "RatPoly") -> "RatPoly":
        n = max(len(self.coeffs), len(other.coeffs))
        return RatPoly(self.coefficient(i) + other.coefficient(i) for i in range(n))

    def __neg__(self) -> "RatPoly":
        return RatPoly(-c for c in self.coeffs)

    def __sub__(self, other: "RatPoly") -> "RatPoly":
        return self + (-other)

    def __mul__(self, other) -> "RatPoly":
        if not isinstance(other, RatPoly):
            return self.scale(other)
        if not self.coeffs or not other.coeffs:
            return RatPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return RatPoly(out)

    __rmul__ = __mul__

    def scale(self, c: RationalLike) -> "RatPoly":
        c = as_rational(c)
        return RatPoly(c * a for a in self.coeffs)

    def shift_power(self, k: int) -> "RatPoly":
        """Multiply by ``x**k`` (k >= 0)."""
        if not self.coeffs:
            return self
        return RatPoly((Fraction(0),) * k + self.coeffs)

    def derivative(self) -> "RatPoly":
        return RatPoly(i * c for i, c in enumerate(self.coeffs) if i > 0)

    def __call__(self, x):
        """Horner evaluation; exact for rational ``x``."""
        acc = Fraction(0) if isinstance(x, (int, Fraction)) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def terms(self) -> list[tuple[int, Fraction]]:
        """Nonzero ``(power, coefficient)`` pairs, ascending power."""
        return [(i, c) for i, c in enumerate(self.coeffs) if c != 0]

    def __repr__(self):
        if not self.coeffs:
            return "RatPoly(0)"
        parts = [f"{c}*x^{i}" for i, c in self.terms()]
        return "RatPoly(" + " + ".join(parts) + ")"


@dataclass(frozen=True)
class RatSeries:
    """Power series in ``s`` known through ``s**order``."""

    order: int
    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be nonnegative")
        cs = [as_rational(c) for c in self.coeffs][: self.order + 1]
        cs += [Fraction(0)] * (self.order + 1 - len(cs))
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[RationalLike], order: int | None = None) -> "RatSeries":
        if order is None:
            order = len(coeffs) - 1
        return cls(order, tuple(coeffs))

    @classmethod
    def zero(cls, order: int) -> "RatSeries":
        return cls(order, ())

    @classmethod
    def one(cls, order: int) -> "RatSeries":
        return cls(order, (Fraction(1),))

    @classmethod
    def variable(cls, order: int) -> "RatSeries":
        """The series ``s``."""
        return cls(order, (Fraction(0), Fraction(1)))

    def __getitem__(self, j: int) -> Fraction:
        return self.coeffs[j]

    def __len__(self):
        return self.order + 1

    def derivative_at_zero(self, j: int) -> Fraction:
        """``j``-th derivative at s = 0, i.e. ``j! * coeffs[j]``."""
        f = 1
        for i in range(2, j + 1):
            f *= i
        return self.coeffs[j] * f

    def truncate(self, order: int) -> "RatSeries":
        if order > self.order:
            raise OrderMismatchError(f"cannot extend a series of order {self.order} to {order}")
        return RatSeries(order, self.coeffs)

    def _check(self, other: "RatSeries"):
        if not isinstance(other, RatSeries):
            raise TypeError("expected a RatSeries")
        if other.order != self.order:
            raise OrderMismatchError(f"order mismatch: {self.order} vs {other.order}")

    def __add__(self, other: "RatSeries") -> "RatSeries":
        self._check(other)
        return RatSeries(self.order, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "RatSeries") -> "RatSeries":
        self._check(other)
        return RatSeries(self.order, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "RatSeries":
        return RatSeries(self.order, tuple(-a for a in self.coeffs))

    def __mul__(self, other) -> "RatSeries":
        if not isinstance(other, RatSeries):
            return self.scale(other)
        self._check(other)
        n = self.order
        out = [Fraction(0)] * (n + 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j in range(n + 1 - i):
                out[i + j] += a * other.coeffs[j]
        return RatSeries(n, tuple(out))

    __rmul__ = __mul__

    def scale(self, c: RationalLike) -> "RatSeries":
        c = as_rational(c)
        return RatSeries(self.order, tuple(c * a for a in self.coeffs))

    def exp(self) -> "RatSeries":
        return series_exp(self)

    def log(self) -> "RatSeries":
        return series_log(self)

    def compose(self, inner: "RatSeries") -> "RatSeries":
        return series_compose(self, inner)

    def __repr__(self):
        return f"RatSeries(order={self.order}, coeffs=[{', '.join(str(c) for c in self.coeffs)}])"


def series_arith(a: RatSeries, b, op: str) -> RatSeries:
    """Functional form of series arithmetic; ``op`` in add|sub|mul|scale.

    For ``scale`` the second operand is a rational scalar.
    """
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        if not isinstance(b, RatSeries):
            raise TypeError("mul expects two series; use op='scale' for scalars")
        return a * b
    if op == "scale":
        return a.scale(b)
    raise ValueError(f"unknown series op {op!r}")


def series_exp(a: RatSeries) -> RatSeries:
    """``exp(a(s))`` via n*c_n = sum_{k=1..n} k*a_k*c_{n-k}; needs a(0) = 0."""
    if a.coeffs[0] != 0:
        raise SeriesDomainError("series_exp needs a zero constant term")
    n = a.order
    c = [Fraction(0)] * (n + 1)
    c[0] = Fraction(1)
    for m in range(1, n + 1):
        acc = Fraction(0)
        for k in range(1, m + 1):
            if a.coeffs[k]:
                acc += k * a.coeffs[k] * c[m - k]
        c[m] = acc / m
    return RatSeries(n, tuple(c))


def series_log(a: RatSeries) -> RatSeries:
    """``log(a(s))`` for a(0) = 1, from a' = a * (log a)'."""
    if a.coeffs[0] != 1:
        raise SeriesDomainError("series_log needs constant term 1")
    n = a.order
    # b = log a; m*b_m = m*a_m - sum_{k=1..m-1} k*b_k*a_{m-k}
    b = [Fraction(0)] * (n + 1)
    for m in range(1, n + 1):
        acc = m * a.coeffs[m]
        for k in range(1, m):
            if b[k]:
                acc -= k * b[k] * a.coeffs[m - k]
        b[m] = acc / m
    return RatSeries(n, tuple(b))


def series_compose(outer: RatSeries, inner: RatSeries) -> RatSeries:
    """``outer(inner(s))`` for inner(0) = 0, truncated at the common order."""
    outer._check(inner)
    if inner.coeffs[0] != 0:
        raise SeriesDomainError("composition needs inner(0) = 0")
    n = outer.order
    acc = RatSeries.zero(n)
    power = RatSeries.one(n)
    for j in range(n + 1):
        if outer.coeffs[j]:
            acc = acc + power.scale(outer.coeffs[j])
        power = power * inner
    return acc


def poly_ops(a: RatPoly, b=None, op: str = "add", x: RationalLike | float | None = None):
    """Functional form of polynomial operations; ``op`` in add|mul|derivative|eval_at."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "derivative":
        return a.derivative()
    if op == "eval_at":
        if x is None:
            raise ValueError("eval_at needs x")
        return a(as_rational(x) if not isinstance(x, float) else x)
    raise ValueError(f"unknown polynomial op {op!r}")

