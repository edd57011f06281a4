"""Command-line entry point: ``asympt {coeffs,expand,verify,oracle}``.

Exit codes: 0 success, 1 verification ran but failed its slope contract,
2 bad arguments, 3 unsupported combination, 4 numeric convergence failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import expansion as ex
from . import families as fam
from . import oracle, phicat, verify

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_UNSUPPORTED = 3
EXIT_CONVERGENCE = 4
MAX_M_COEFFS = 30


class SpecError(ValueError):
    """Malformed ``name:key=val,...`` string; ``column`` points at the problem."""

    def __init__(self, text: str, column: int, message: str):
        super().__init__(message)
        self.text = text
        self.column = column
        self.message = message

    def __str__(self):
        return f"{self.message}\n  {self.text}\n  {' ' * self.column}^"


def parse_spec(text: str) -> tuple[str, dict[str, tuple[str, int]]]:
    """Split ``name:k1=v1,k2=v2`` into the name and ``{key: (value, column)}``."""
    name, sep, rest = text.partition(":")
    name = name.strip().lower()
    if not name:
        raise SpecError(text, 0, "missing name")
    params: dict[str, tuple[str, int]] = {}
    if not sep:
        return name, params
    pos = len(name) + 1
    for chunk in rest.split(","):
        key, eq, val = chunk.partition("=")
        if not eq or not key.strip() or not val.strip():
            raise SpecError(text, pos, f"expected key=value, got {chunk!r}")
        key = key.strip().lower()
        if key in params:
            raise SpecError(text, pos, f"duplicate key {key!r}")
        params[key] = (val.strip(), pos + len(chunk.partition("=")[0]) + 1)
        pos += len(chunk) + 1
    return name, params


def _rational(text: str, params, key: str) -> Fraction:
    val, col = params[key]
    try:
        return Fraction(val)
    except (ValueError, ZeroDivisionError):
        raise SpecError(text, col, f"{key}: not a rational number: {val!r}") from None


def _only(text: str, params, allowed: set[str], required: set[str] = frozenset()):
    for key, (_, col) in params.items():
        if key not in allowed:
            raise SpecError(text, col - len(key) - 1, f"unknown parameter {key!r}")
    for key in required:
        if key not in params:
            raise SpecError(text, len(text), f"missing parameter {key!r}")


def parse_family(text: str) -> fam.FamilySpec:
    """``poisson``, ``gamma``, ``binomial:p=1/3``, ``nb:p=1/2``, ``iid:m1=..,m2=..,...``."""
    name, params = parse_spec(text)
    if name in ("poisson", "po"):
        _only(text, params, set())
        return fam.poisson()
    if name in ("gamma", "gam"):
        _only(text, params, set())
        return fam.gamma()
    if name in ("binomial", "bin", "nb", "negbinomial", "negbin"):
        _only(text, params, {"p"}, {"p"})
        p = _rational(text, params, "p")
        if not 0 < p < 1:
            raise SpecError(text, params["p"][1], f"p must lie in (0, 1), got {p}")
        return fam.binomial(p) if name.startswith("bin") else fam.negbinomial(p)
    if name == "iid":
        keys = sorted(params, key=lambda k: int(k[1:]) if k[1:].isdigit() else -1)
        for i, key in enumerate(keys, start=1):
            if key != f"m{i}":
                raise SpecError(text, params[key][1] - len(key) - 1, f"expected raw moment m{i}, got {key!r}")
        if len(keys) < 2:
            raise SpecError(text, len(text), "iid needs at least m1 and m2")
        moments = [_rational(text, params, k) for k in keys]
        try:
            return fam.custom_iid_from_moments(moments)
        except fam.FamilyParameterError as exc:
            raise SpecError(text, len(name) + 1, str(exc)) from None
    raise SpecError(text, 0, f"unknown family {name!r}")


def parse_phi(text: str) -> phicat.PhiSpec:
    """``power:r=-1/2,a=0``, ``log:beta=1``, ``xlogx``."""
    name, params = parse_spec(text)
    if name == "power":
        _only(text, params, {"r", "a"}, {"r"})
        r = _rational(text, params, "r")
        a = _rational(text, params, "a") if "a" in params else Fraction(0)
        if a < 0:
            raise SpecError(text, params["a"][1], "a must be nonnegative")
        return phicat.power(r, a)
    if name == "log":
        _only(text, params, {"beta"}, {"beta"})
        beta = _rational(text, params, "beta")
        if beta <= 0:
            raise SpecError(text, params["beta"][1], "beta must be positive")
        return phicat.log(beta)
    if name == "xlogx":
        _only(text, params, set())
        return phicat.xlogx()
    raise SpecError(text, 0, f"unknown phi {name!r}")


def parse_grid(text: str) -> list[Fraction]:
    """``start:end:xK`` (geometric, factor K) or a comma-separated list."""
    try:
        if ":" in text:
            start, end, step = text.split(":")
            if not step.startswith("x"):
                raise ValueError("step must look like x2")
            factor = Fraction(step[1:])
            if factor <= 1:
                raise ValueError("factor must exceed 1")
            out, v, stop = [], Fraction(start), Fraction(end)
            if v <= 0:
                raise ValueError("grid must start above 0")
            while v <= stop:
                out.append(v)
                v *= factor
            return out
        return [Fraction(t) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    family: fam.FamilySpec
    phi: phicat.PhiSpec | None = None
    M: int = 3
    grid: tuple[Fraction, ...] = ()
    point: Fraction | None = None
    tol: float = 1e-13
    format: str = "text"
    output: str | None = None
    collect: bool = False
    poisson_recursion: bool = False


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asympt",
        description="Moment expansions of E phi(U_x) for convolution families, with brute-force checks.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p, phi=True):
        p.add_argument("--family", required=True, help="poisson | gamma | binomial:p=a/b | nb:p=a/b | iid:m1=..,m2=..")
        if phi:
            p.add_argument("--phi", required=True, help="power:r=..,a=.. | log:beta=.. | xlogx")
        p.add_argument("--output", "-o", help="write to this file instead of stdout")

    p = sub.add_parser("coeffs", help="print the c_kn table")
    common(p, phi=False)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--poisson-recursion", action="store_true", help="use the integer b_kn recursion (Poisson only)")
    p.add_argument("--format", choices=["text", "json"], default="text")

    p = sub.add_parser("expand", help="render the expansion")
    common(p)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--collect", action="store_true", help="collect into powers of x (shift-free phi only)")
    p.add_argument("--format", choices=["text", "latex", "json"], default="text")
    p.add_argument("--at", type=float, help="also print the numeric value at this x")

    p = sub.add_parser("verify", help="error table and decay slope against the oracle")
    common(p)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--grid", type=parse_grid, required=True, help="start:end:x2, natural indices for binomial/nb")
    p.add_argument("--tol", type=float, default=1e-15)

    p = sub.add_parser("oracle", help="brute-force expectation at one point")
    common(p)
    p.add_argument("--x", type=Fraction, help="mean (poisson, gamma)")
    p.add_argument("--n", type=int, help="natural index (binomial, nb)")
    p.add_argument("--tol", type=float, default=1e-13)
    p.add_argument("--format", choices=["text", "json"], default="text")
    return parser


def _config(args) -> RunConfig:
    family = parse_family(args.family)
    phi = parse_phi(args.phi) if getattr(args, "phi", None) else None
    M = getattr(args, "M", 3)
    if M is not None and M < 1:
        raise SpecError(str(M), 0, "M must be positive")
    point = None
    if args.subcommand == "oracle":
        if family.kind in ("binomial", "negbinomial"):
            if args.n is None or args.x is not None:
                raise SpecError(args.family, 0, f"{family.label} takes --n (natural index), not --x")
            point = fam.family_mean_index(family, args.n)
        else:
            if args.x is None or args.n is not None:
                raise SpecError(args.family, 0, f"{family.label} takes --x (mean), not --n")
            if args.x <= 0:
                raise SpecError(str(args.x), 0, "x must be positive")
            point = args.x
    grid = ()
    if args.subcommand == "verify":
        if family.kind in ("binomial", "negbinomial"):
            grid = tuple(verify.natural_grid(family, args.grid))
        else:
            grid = tuple(args.grid)
        if len(grid) < 3:
            raise SpecError(",".join(str(g) for g in args.grid), 0, "insufficient data: the grid needs at least 3 points")
    return RunConfig(
        subcommand=args.subcommand,
        family=family,
        phi=phi,
        M=M,
        grid=grid,
        point=point,
        tol=getattr(args, "tol", 1e-13),
        format=getattr(args, "format", "text"),
        output=args.output,
        collect=getattr(args, "collect", False),
        poisson_recursion=getattr(args, "poisson_recursion", False),
    )


def cmd_coeffs(cfg: RunConfig, out) -> int:
    if cfg.M > MAX_M_COEFFS:
        print(f"error: M must be at most {MAX_M_COEFFS}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.poisson_recursion:
        if cfg.family.kind != "poisson":
            print("error: --poisson-recursion applies to the Poisson family only", file=sys.stderr)
            return EXIT_UNSUPPORTED
        table = fam.bkn_poisson(cfg.M)
    else:
        table = fam.ckn_table(cfg.family, cfg.M)
    rows = table.nonzero()
    if cfg.format == "json":
        payload = {
            "family": cfg.family.to_json(),
            "M": cfg.M,
            "symbol": table.symbol,
            "entries": [{"k": k, "n": n, "value": str(v)} for (k, n), v in rows],
        }
        out.write(json.dumps(payload) + "\n")
    else:
        for (k, n), v in rows:
            out.write(f"{table.symbol}[{k},{n}] = {v}\n")
    return EXIT_OK


def cmd_expand(cfg: RunConfig, out) -> int:
    e = ex.build_expansion(cfg.family, cfg.phi, cfg.M)
    if cfg.collect:
        try:
            obj = ex.collect_powers(e)
        except ex.CollectionUnsupportedError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_UNSUPPORTED
    else:
        obj = e
    out.write(ex.render(obj, cfg.format) + "\n")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out) -> int:
    try:
        rows = verify.error_table(cfg.family, cfg.phi, cfg.M, cfg.grid, cfg.tol)
    except NotImplementedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except verify.RowError as exc:
        print(f"error: oracle failed at {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    out.write(verify.write_csv(rows))
    try:
        slope = verify.decay_slope(rows)
    except verify.InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("slope=nan pass=False")
        return EXIT_FAIL
    ok = verify.slope_passes(slope, cfg.M)
    print(f"slope={slope:.4f} pass={ok}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_oracle(cfg: RunConfig, out) -> int:
    try:
        res = oracle.expect(cfg.family, cfg.phi, cfg.point, cfg.tol)
    except NotImplementedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except oracle.OracleConvergenceError as exc:
        print(f"error: {exc} (best value {exc.value!r}, tail bound {exc.tail_bound!r})", file=sys.stderr)
        return EXIT_CONVERGENCE
    except oracle.OracleDomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    if cfg.format == "json":
        payload = {
            "value": repr(res.value),
            "terms_used": res.terms_used,
            "tail_bound": repr(res.tail_bound),
            "method": res.method,
        }
        out.write(json.dumps(payload) + "\n")
    else:
        out.write(f"value={res.value!r}\nterms_used={res.terms_used}\ntail_bound={res.tail_bound!r}\nmethod={res.method}\n")
    return EXIT_OK


COMMANDS = {"coeffs": cmd_coeffs, "expand": cmd_expand, "verify": cmd_verify, "oracle": cmd_oracle}


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        cfg = _config(args)
    except (SpecError, fam.FamilyParameterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            code = COMMANDS[cfg.subcommand](cfg, fh)
    else:
        code = COMMANDS[cfg.subcommand](cfg, sys.stdout)
    if args.subcommand == "expand" and getattr(args, "at", None) is not None and code == EXIT_OK:
        print(f"value={ex.evaluate(ex.build_expansion(cfg.family, cfg.phi, cfg.M), args.at)!r}")
    return code


if __name__ == "__main__":
    sys.exit(main())
