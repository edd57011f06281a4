"""Assembly, evaluation, collection and rendering of the moment expansion.

For a family with central moments ``mu_n(x)`` and a catalog phi,

    S_M(x) = phi(x) + sum_{n=2}^{2M-2} mu_n(x) * phi^{(n)}(x) / n!

approximates ``E phi(U_x)`` with error ``O(G(x) x^{-M})``.  Terms are stored
by moment order n; the ``(k, n)`` double-sum view is recovered on demand.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .exactmath import RatPoly
from .families import FamilySpec, central_moments
from .phicat import (
    DerivTerm,
    PhiDomainError,
    PhiSpec,
    envelope_exponent,
    phi_derivative_symbolic,
    phi_value,
)


class CollectionUnsupportedError(ValueError):
    """Collected (inverse-power) form requested for a shifted phi."""


@dataclass(frozen=True)
class ExpansionTerm:
    n: int
    mu: RatPoly
    deriv: DerivTerm

    def monomials(self) -> list[tuple[int, int, Union[Fraction, float]]]:
        """``(k, power_of_x, coefficient)`` with the 1/n! folded in.

        The term equals ``sum coefficient * x**power * (x+shift)**exponent``.
        """
        fact = math.factorial(self.n)
        out = []
        for power, c in self.mu.terms():
            k = self.n - power + 1
            out.append((k, power, c * self.deriv.coeff / fact))
        return out

    def value(self, x: float) -> float:
        xq = Fraction(x)
        return float(self.mu(xq)) * self.deriv(x) / math.factorial(self.n)


@dataclass(frozen=True)
class Expansion:
    family: FamilySpec
    phi: PhiSpec
    M: int
    terms: tuple[ExpansionTerm, ...]

    @property
    def lead(self) -> DerivTerm:
        return phi_derivative_symbolic(self.phi, 0)

    def evaluate(self, x: float) -> float:
        return evaluate(self, x)

    def raw_coefficients(self, n: int) -> dict[int, Union[Fraction, float]]:
        """Power of x -> coefficient for the order-n term (1/n! included)."""
        for t in self.terms:
            if t.n == n:
                return {power: c for _, power, c in t.monomials()}
        raise KeyError(f"no term of order {n} (M={self.M})")


def build_expansion(family: FamilySpec, phi: PhiSpec, M: int) -> Expansion:
    if M < 1:
        raise ValueError("M must be positive")
    nmax = 2 * M - 2
    mu = central_moments(family, max(nmax, 2))
    terms = tuple(
        ExpansionTerm(n, mu[n], phi_derivative_symbolic(phi, n)) for n in range(2, nmax + 1)
    )
    return Expansion(family, phi, M, terms)


def evaluate(e: Expansion, x: float) -> float:
    """Numeric S_M(x); each mu_n(x) is exact before a single float conversion."""
    x = float(x)
    if x <= 0:
        raise PhiDomainError(f"expansion needs x > 0, got {x}")
    parts = [phi_value(e.phi, x)]
    parts.extend(t.value(x) for t in e.terms)
    return math.fsum(parts)


def ckn_double_sum(e: Expansion, table, x: float) -> float:
    """S_M(x) term by term from a ``c_kn`` table; independent of ``terms``."""
    x = float(x)
    parts = [phi_value(e.phi, x)]
    for n in range(2, 2 * e.M - 1):
        d = phi_derivative_symbolic(e.phi, n)(x) / math.factorial(n)
        for k in range((n + 1) // 2 + 1, n + 1):
            parts.append(float(table[(k, n)]) * x ** (n - k + 1) * d)
    return math.fsum(parts)


# --------------------------------------------------------------------------
# collected form


@dataclass(frozen=True)
class CollectedSeries:
    """``sum coefficients[e] * x**e + sum log_coefficients[e] * x**e * log x``.

    Exponents differ from ``leading`` by integers; terms with exponent at or
    below ``cutoff`` (the remainder order) are dropped.
    """

    leading: Union[Fraction, float]
    cutoff: Union[Fraction, float]
    coefficients: dict
    log_coefficients: dict
    exact: bool

    def exponents(self) -> list:
        return sorted(set(self.coefficients) | set(self.log_coefficients), reverse=True)

    def evaluate(self, x: float) -> float:
        x = float(x)
        lx = math.log(x)
        parts = [float(c) * x ** float(p) for p, c in self.coefficients.items()]
        parts += [float(c) * x ** float(p) * lx for p, c in self.log_coefficients.items()]
        return math.fsum(parts)

    def relative(self) -> list:
        """Coefficients of ``x**leading * (c0 + c1/x + c2/x^2 + ...)``."""
        if self.log_coefficients:
            raise ValueError("relative form is defined only without log terms")
        depth = max((_offset(self.leading, p) for p in self.coefficients), default=0)
        out = [0] * (depth + 1)
        for p, c in self.coefficients.items():
            out[_offset(self.leading, p)] = c
        return out


def _offset(leading, p) -> int:
    d = leading - p
    return int(round(d)) if isinstance(d, float) else int(d)


def collect_powers(e: Expansion) -> CollectedSeries:
    """Expand every term into powers of x and sum per exponent.

    Only for shift-free phi (power with a = 0, or xlogx).
    """
    phi = e.phi
    if phi.shift != 0 or phi.kind == "log":
        raise CollectionUnsupportedError(f"collected form needs a shift-free phi, got {phi.label}")
    lead_exp = envelope_exponent(phi)
    exact = phi.exact
    by_offset: dict[int, object] = {}
    log_by_offset: dict[int, object] = {}
    if phi.kind == "xlogx":
        log_by_offset[0] = Fraction(1)
    else:
        by_offset[0] = Fraction(1)
    for t in e.terms:
        base_exp = t.deriv.exponent
        # offset = lead_exp - (power + base_exp); base_exp - lead_exp is an integer
        base_off = _offset(lead_exp, base_exp)
        for _, power, c in t.monomials():
            off = base_off - power
            by_offset[off] = by_offset.get(off, 0) + c
    cutoff = lead_exp - e.M
    max_off = e.M - 1  # keep lead - off > lead - M
    coeffs = {}
    for off in sorted(by_offset):
        c = by_offset[off]
        if off <= max_off and c != 0:
            coeffs[lead_exp - off] = c
    log_coeffs = {lead_exp - off: c for off, c in log_by_offset.items() if c != 0}
    return CollectedSeries(lead_exp, cutoff, coeffs, log_coeffs, exact)


# --------------------------------------------------------------------------
# rendering


def _num_text(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, int):
        return str(c)
    return repr(float(c))


def _num_latex(c) -> str:
    if isinstance(c, Fraction):
        if c.denominator == 1:
            return str(c.numerator)
        return f"\\frac{{{c.numerator}}}{{{c.denominator}}}"
    return _num_text(c)


def _signed(parts: list[tuple[object, str]], fmt_num, joiner: str) -> str:
    """Join ``(coefficient, factor-string)`` pairs with explicit +/- signs."""
    out = []
    for i, (c, factor) in enumerate(parts):
        neg = c < 0
        mag = -c if neg else c
        if factor and mag == 1:
            body = factor
        elif factor:
            body = f"{fmt_num(mag)}{joiner}{factor}"
        else:
            body = fmt_num(mag)
        if i == 0:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out) if out else "0"


def _xpow_text(p, base: str = "x") -> str:
    if p == 1:
        return base
    if isinstance(p, Fraction) and p.denominator == 1:
        return f"{base}^{p.numerator}"
    if isinstance(p, Fraction):
        return f"{base}^({p})"
    if isinstance(p, int):
        return f"{base}^{p}"
    return f"{base}^({_num_text(p)})"


def _xpow_latex(p, base: str = "x") -> str:
    if p == 1:
        return base
    if isinstance(p, Fraction) and p.denominator == 1:
        return f"{base}^{{{p.numerator}}}"
    if isinstance(p, Fraction):
        return f"{base}^{{{p}}}"
    return f"{base}^{{{_num_text(p)}}}"


def _shift_base(shift, latex: bool) -> str:
    if shift == 0:
        return "x"
    s = _num_latex(shift) if latex else _num_text(shift)
    return f"(x + {s})"


def _phi_text(phi: PhiSpec, latex: bool) -> str:
    base = _shift_base(phi.shift, latex)
    if phi.kind == "log":
        return f"\\log{base}" if latex else f"log{base}"
    if phi.kind == "xlogx":
        return "x \\log(x)" if latex else "x*log(x)"
    xp = _xpow_latex if latex else _xpow_text
    if phi.r == 0:
        return "1"
    return xp(-phi.r, base)


def _raw_parts(e: Expansion, latex: bool) -> list[tuple[object, str]]:
    xp = _xpow_latex if latex else _xpow_text
    mul = " " if latex else " * "
    parts: list[tuple[object, str]] = [(1, _phi_text(e.phi, latex))]
    for t in e.terms:
        base = _shift_base(t.deriv.shift, latex)
        dfac = xp(t.deriv.exponent, base)
        for _, power, c in sorted(t.monomials(), key=lambda m: -m[1]):
            if c == 0:
                continue
            factor = mul.join(f for f in (xp(power) if power else "", dfac) if f)
            parts.append((c, factor))
    return parts


def _collected_text(cs: CollectedSeries, latex: bool) -> str:
    xp = _xpow_latex if latex else _xpow_text
    fmt_num = _num_latex if latex else _num_text
    mul = " " if latex else " * "
    if cs.log_coefficients:
        logx = "\\log(x)" if latex else "log(x)"
        parts = []
        for p in cs.exponents():
            if p in cs.log_coefficients:
                pre = xp(p) if p != 0 else ""
                parts.append((cs.log_coefficients[p], f"{pre}{' ' if latex else '*'}{logx}" if pre else logx))
            if p in cs.coefficients:
                parts.append((cs.coefficients[p], xp(p) if p != 0 else ""))
        return _signed(parts, fmt_num, mul)
    rel = cs.relative()
    parts = [(c, xp(-i) if i else "") for i, c in enumerate(rel) if c != 0]
    inner = _signed(parts, fmt_num, mul)
    if cs.leading == 0:
        return inner
    if latex:
        return f"{xp(cs.leading)} \\left({inner}\\right)"
    return f"{xp(cs.leading)} * ({inner})"


def _str_num(c) -> str:
    return str(c) if isinstance(c, (Fraction, int)) else repr(float(c))


def expansion_to_json(e: Expansion) -> dict:
    lead = {"n": 0, "mu": [["1", "1"]], "deriv": e.lead.to_json()}
    terms = [lead]
    for t in e.terms:
        terms.append(
            {
                "n": t.n,
                "mu": [[str(c.numerator), str(c.denominator)] for c in t.mu.coeffs],
                "deriv": t.deriv.to_json(),
            }
        )
    return {"family": e.family.to_json(), "phi": e.phi.to_json(), "M": e.M, "terms": terms}


def expansion_from_json(data: Union[str, dict]) -> Expansion:
    if isinstance(data, str):
        data = json.loads(data)
    family = FamilySpec.from_json(data["family"])
    phi = PhiSpec.from_json(data["phi"])
    terms = []
    for t in data["terms"]:
        if t["n"] == 0:
            continue
        mu = RatPoly(Fraction(int(a), int(b)) for a, b in t["mu"])
        terms.append(ExpansionTerm(int(t["n"]), mu, DerivTerm.from_json(t["deriv"])))
    return Expansion(family, phi, int(data["M"]), tuple(terms))


def collected_to_json(cs: CollectedSeries) -> dict:
    return {
        "leading": _str_num(cs.leading),
        "cutoff": _str_num(cs.cutoff),
        "exact": cs.exact,
        "coefficients": [
            {"exponent": _str_num(p), "coeff": _str_num(cs.coefficients[p])}
            for p in sorted(cs.coefficients, reverse=True)
        ],
        "log_coefficients": [
            {"exponent": _str_num(p), "coeff": _str_num(cs.log_coefficients[p])}
            for p in sorted(cs.log_coefficients, reverse=True)
        ],
    }


def render(obj: Union[Expansion, CollectedSeries], format: str = "text") -> str:
    """Render an expansion (raw terms) or a collected series.

    Raw terms come in display order: phi(x) first, then increasing moment
    order n, and within one n decreasing power of x.
    """
    if format == "json":
        if isinstance(obj, Expansion):
            return json.dumps(expansion_to_json(obj))
        return json.dumps(collected_to_json(obj))
    if format not in ("text", "latex"):
        raise ValueError(f"unknown format {format!r}")
    latex = format == "latex"
    if isinstance(obj, CollectedSeries):
        return _collected_text(obj, latex)
    fmt_num = _num_latex if latex else _num_text
    return _signed(_raw_parts(obj, latex), fmt_num, " " if latex else " * ")
