"""Catalog of test functions phi with closed-form derivatives.

Three shapes are supported:

* ``power(r, a)``: ``(x + a)**(-r)``; r = -1/2, a = 0 is sqrt(x), r > 0 with
  a = 0 gives inverse moments.
* ``log(beta)``: ``log(x + beta)`` with beta > 0.
* ``xlogx``: ``x * log(x)``, extended by continuity to 0 at x = 0.

Parameters given as ints, Fractions or decimal strings stay exact, so the
derivative coefficients used by the expansion are exact rationals.  Floats
are accepted and make those coefficients floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Number = Union[int, Fraction, float]

POWER = "power"
LOG = "log"
XLOGX = "xlogx"


class PhiDomainError(ValueError):
    """phi or one of its derivatives evaluated outside its domain."""


def _num(v) -> Fraction | float:
    if isinstance(v, bool):
        raise TypeError("bool is not a number")
    if isinstance(v, float):
        return Fraction(v) if v.is_integer() else v
    if isinstance(v, str):
        return Fraction(v.strip())
    return Fraction(v)


def _fmt(v) -> str:
    return str(v) if isinstance(v, Fraction) else repr(v)


@dataclass(frozen=True)
class DerivTerm:
    """Closed form ``(x + shift)**exponent * (coeff + log_coeff * log(x + shift))``.

    Every catalog derivative of order >= 2 has ``log_coeff == 0``; the
    logarithm only shows up in phi itself (log, xlogx) and in the first
    derivative of xlogx.
    """

    coeff: Number
    shift: Number
    exponent: Number
    log_coeff: Number = Fraction(0)

    def __call__(self, x: float) -> float:
        base = x + float(self.shift)
        if base <= 0:
            raise PhiDomainError(f"x + shift must be positive, got {base}")
        out = float(self.coeff)
        if self.log_coeff:
            out += float(self.log_coeff) * math.log(base)
        return out * base ** float(self.exponent)

    def to_json(self) -> dict:
        d = {"coeff": _fmt(self.coeff), "shift": _fmt(self.shift), "exponent": _fmt(self.exponent)}
        if self.log_coeff:
            d["log_coeff"] = _fmt(self.log_coeff)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "DerivTerm":
        return cls(
            _parse_num(d["coeff"]),
            _parse_num(d["shift"]),
            _parse_num(d["exponent"]),
            _parse_num(d.get("log_coeff", "0")),
        )


def _parse_num(s: str) -> Fraction | float:
    try:
        return Fraction(s)
    except ValueError:
        return float(s)


@dataclass(frozen=True)
class PhiSpec:
    kind: str
    r: Number = Fraction(0)
    a: Number = Fraction(0)
    beta: Number = Fraction(1)

    def __post_init__(self):
        if self.kind not in (POWER, LOG, XLOGX):
            raise ValueError(f"unknown phi kind {self.kind!r}")
        for name in ("r", "a", "beta"):
            object.__setattr__(self, name, _num(getattr(self, name)))
        if self.kind == POWER and self.a < 0:
            raise ValueError("power: shift a must be nonnegative")
        if self.kind == LOG and self.beta <= 0:
            raise ValueError("log: beta must be positive")

    @property
    def shift(self) -> Number:
        if self.kind == POWER:
            return self.a
        if self.kind == LOG:
            return self.beta
        return Fraction(0)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in (self.r, self.a, self.beta))

    @property
    def label(self) -> str:
        if self.kind == POWER:
            return f"power:r={_fmt(self.r)},a={_fmt(self.a)}"
        if self.kind == LOG:
            return f"log:beta={_fmt(self.beta)}"
        return "xlogx"

    def to_json(self) -> dict:
        if self.kind == POWER:
            return {"kind": POWER, "r": _fmt(self.r), "a": _fmt(self.a)}
        if self.kind == LOG:
            return {"kind": LOG, "beta": _fmt(self.beta)}
        return {"kind": XLOGX}

    @classmethod
    def from_json(cls, d: dict) -> "PhiSpec":
        kw = {k: _parse_num(v) for k, v in d.items() if k != "kind"}
        return cls(d["kind"], **kw)

    # convenience wrappers
    def __call__(self, x: float) -> float:
        return phi_value(self, x)

    def derivative(self, n: int, x: float) -> float:
        return phi_derivative(self, n, x)

    def lattice_value(self, k: int) -> float:
        """phi at an integer point, with the inverse-moment convention.

        For ``power`` with a = 0 and r > 0 the value at k = 0 is taken as 0
        (the sum then runs over k >= 1).
        """
        if self.kind == POWER and self.a == 0 and self.r > 0 and k < 1:
            return 0.0
        return phi_value(self, k)

    def majorant(self) -> list[tuple[float, float]]:
        """Pairs ``(c, d)`` with ``|phi(u)| <= sum c * u**d`` for all u > 0."""
        if self.kind == POWER:
            r, a = float(self.r), float(self.a)
            if r < 0:
                s = -r
                c = max(1.0, 2.0 ** (s - 1))
                return [(c, s), (c * a**s, 0.0)] if a else [(1.0, s)]
            if r == 0:
                return [(1.0, 0.0)]
            return [(a ** (-r), 0.0)] if a else [(1.0, -r)]
        if self.kind == LOG:
            b = float(self.beta)
            return [(1.0, 1.0), (b + abs(math.log(b)), 0.0)]
        return [(1.0, 2.0), (1.0 / math.e, 0.0)]


def power(r, a=0) -> PhiSpec:
    return PhiSpec(POWER, r=r, a=a)


def log(beta=1) -> PhiSpec:
    return PhiSpec(LOG, beta=beta)


def xlogx() -> PhiSpec:
    return PhiSpec(XLOGX)


def phi_value(phi: PhiSpec, x: float) -> float:
    if phi.kind == POWER:
        base = x + float(phi.a)
        r = float(phi.r)
        if base < 0 or (base == 0 and r > 0):
            raise PhiDomainError(f"power phi undefined at x={x}")
        if base == 0:
            return 1.0 if r == 0 else 0.0
        return base ** (-r)
    if phi.kind == LOG:
        base = x + float(phi.beta)
        if base <= 0:
            raise PhiDomainError(f"log phi undefined at x={x}")
        return math.log(base)
    if x < 0:
        raise PhiDomainError(f"xlogx undefined at x={x}")
    return 0.0 if x == 0 else x * math.log(x)


def _rising(r, n: int):
    """r (r+1) ... (r+n-1); stays exact for Fraction r."""
    out = Fraction(1) if isinstance(r, Fraction) else 1.0
    for i in range(n):
        out *= r + i
    return out


def phi_derivative_symbolic(phi: PhiSpec, n: int) -> DerivTerm:
    """Closed form of ``phi^{(n)}``; n = 0 returns phi itself."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    sign = -1 if n % 2 else 1
    if phi.kind == POWER:
        return DerivTerm(sign * _rising(phi.r, n), phi.a, -phi.r - n)
    if phi.kind == LOG:
        if n == 0:
            return DerivTerm(Fraction(0), phi.beta, Fraction(0), Fraction(1))
        return DerivTerm(-sign * Fraction(math.factorial(n - 1)), phi.beta, Fraction(-n))
    if n == 0:
        return DerivTerm(Fraction(0), Fraction(0), Fraction(1), Fraction(1))
    if n == 1:
        return DerivTerm(Fraction(1), Fraction(0), Fraction(0), Fraction(1))
    return DerivTerm(sign * Fraction(math.factorial(n - 2)), Fraction(0), Fraction(1 - n))


def phi_derivative(phi: PhiSpec, n: int, x: float) -> float:
    """Numeric ``phi^{(n)}(x)`` for n >= 1 from the closed forms."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if x <= 0:
        raise PhiDomainError(f"derivatives need x > 0, got {x}")
    return phi_derivative_symbolic(phi, n)(x)


def growth_envelope(phi: PhiSpec, x: float) -> float:
    """G(x): (x+a)^(-r) for power, 1 for log, x log x for xlogx."""
    if phi.kind == POWER:
        return (x + float(phi.a)) ** (-float(phi.r))
    if phi.kind == LOG:
        return 1.0
    return x * math.log(x)


def envelope_exponent(phi: PhiSpec) -> Number:
    """Leading power of x in G (log factors ignored)."""
    if phi.kind == POWER:
        return -phi.r
    if phi.kind == LOG:
        return Fraction(0)
    return Fraction(1)
