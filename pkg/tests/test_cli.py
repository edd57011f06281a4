import json
import subprocess
import sys

import pytest

from asympt.cli import SpecError, main, parse_family, parse_grid, parse_phi
from asympt.expansion import expansion_from_json, render
from asympt.families import binomial, negbinomial, poisson
from asympt.phicat import log, power


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ---- parsing


def test_parse_family():
    assert parse_family("poisson") == poisson()
    assert parse_family("binomial:p=1/3") == binomial("1/3")
    assert parse_family("nb:p=0.5") == negbinomial("1/2")
    assert parse_family("iid:m1=1,m2=2,m3=5").kind == "custom_iid"


def test_parse_phi():
    assert parse_phi("power:r=-1/2,a=0") == power("-1/2")
    assert parse_phi("log:beta=1") == log(1)
    assert parse_phi("xlogx").kind == "xlogx"


@pytest.mark.parametrize(
    "text,col",
    [("binomial:q=1/2", 9), ("power:r=1,a=x", 12), ("poison", 0)],
)
def test_spec_error_position(text, col):
    parser = parse_phi if text.startswith("power") else parse_family
    with pytest.raises(SpecError) as info:
        parser(text)
    assert info.value.column == col
    assert "^" in str(info.value)


def test_parse_grid():
    assert parse_grid("100:800:x2") == [100, 200, 400, 800]
    assert parse_grid("50,100,200") == [50, 100, 200]


# ---- coeffs


def test_coeffs_poisson(capsys):
    code, out, _ = run(capsys, "coeffs", "--family", "poisson", "--M", "3")
    assert code == 0
    assert "c[3,4] = 3" in out.splitlines() and "c[4,4] = 1" in out.splitlines()


def test_coeffs_recursion_identical(capsys):
    _, a, _ = run(capsys, "coeffs", "--family", "poisson", "--M", "3")
    code, b, _ = run(capsys, "coeffs", "--family", "poisson", "--M", "3", "--poisson-recursion")
    assert code == 0
    assert a.replace("c[", "b[") == b


def test_coeffs_nb(capsys):
    code, out, _ = run(capsys, "coeffs", "--family", "nb:p=1/2", "--M", "3")
    assert code == 0 and "c[2,2] = 2" in out.splitlines()


def test_coeffs_json(capsys):
    code, out, _ = run(capsys, "coeffs", "--family", "binomial:p=1/3", "--M", "2", "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["symbol"] == "c"
    assert {"k": 3, "n": 3, "value": "2/9"} in d["entries"]


# ---- expand


def test_expand_collect(capsys):
    code, out, _ = run(capsys, "expand", "--family", "poisson", "--phi", "power:r=-1/2,a=0", "--M", "3", "--collect")
    assert code == 0
    assert out.strip() == "x^(1/2) * (1 - 1/8 * x^-1 - 7/128 * x^-2)"


def test_expand_binomial_log(capsys):
    code, out, _ = run(capsys, "expand", "--family", "binomial:p=1/2", "--phi", "log:beta=1", "--M", "3")
    assert code == 0
    assert out.startswith("log(x + 1) - 1/4 * x * (x + 1)^-2")


def test_expand_m1(capsys):
    code, out, _ = run(capsys, "expand", "--family", "gamma", "--phi", "log:beta=2", "--M", "1")
    assert code == 0 and out.strip() == "log(x + 2)"


def test_expand_at(capsys):
    code, out, _ = run(capsys, "expand", "--family", "poisson", "--phi", "power:r=-1/2,a=0", "--M", "2", "--at", "100")
    assert code == 0 and out.splitlines()[-1] == "value=9.9875"


def test_expand_json_round_trip(capsys):
    argv = ("expand", "--family", "nb:p=1/3", "--phi", "power:r=3/2,a=1", "--M", "4", "--format", "json")
    code, out, _ = run(capsys, *argv)
    assert code == 0
    assert render(expansion_from_json(out), "json") + "\n" == out


# ---- oracle


def test_oracle_poisson(capsys):
    code, out, _ = run(capsys, "oracle", "--family", "poisson", "--phi", "power:r=-1,a=0", "--x", "7")
    assert code == 0
    assert float(out.splitlines()[0].split("=")[1]) == pytest.approx(7, rel=1e-13)


def test_oracle_binomial(capsys):
    code, out, _ = run(capsys, "oracle", "--family", "binomial:p=1/2", "--phi", "power:r=-1,a=0", "--n", "10")
    assert code == 0 and float(out.splitlines()[0].split("=")[1]) == pytest.approx(5, rel=1e-15)


def test_oracle_nb_json(capsys):
    code, out, _ = run(
        capsys, "oracle", "--family", "nb:p=1/2", "--phi", "log:beta=1", "--n", "40", "--tol", "1e-12", "--format", "json"
    )
    d = json.loads(out)
    assert code == 0 and d["method"] == "sum"
    assert float(d["value"]) == pytest.approx(3.689205724493931565926714355258089203751, rel=1e-12)


# ---- verify


def test_verify_pass(capsys):
    code, out, _ = run(capsys, "verify", "--family", "poisson", "--phi", "power:r=-1/2,a=0", "--M", "3", "--grid", "100:800:x2")
    lines = out.splitlines()
    assert code == 0
    assert lines[0] == "x,oracle,expansion,abs_err,scaled_err" and len(lines) == 6
    slope = float(lines[-1].split()[0].split("=")[1])
    assert abs(slope + 3) <= 0.3 and lines[-1].endswith("pass=True")


def test_verify_gamma(capsys):
    code, out, _ = run(capsys, "verify", "--family", "gamma", "--phi", "xlogx", "--M", "3", "--grid", "50:400:x2")
    assert code == 0 and out.splitlines()[-1].endswith("pass=True")


def test_verify_output_file(capsys, tmp_path):
    path = tmp_path / "rows.csv"
    code, out, _ = run(
        capsys, "verify", "--family", "nb:p=1/2", "--phi", "log:beta=1", "--M", "2", "--grid", "100:400:x2", "-o", str(path)
    )
    assert code == 0
    assert path.read_text().splitlines()[0] == "x,oracle,expansion,abs_err,scaled_err"
    assert out.startswith("slope=")


# ---- exit codes


EXIT_CASES = [
    (0, ["coeffs", "--family", "gamma", "--M", "2"]),
    (1, ["verify", "--family", "binomial:p=1/10", "--phi", "power:r=1,a=0", "--M", "4", "--grid", "10:40:x2"]),
    (2, []),
    (2, ["frobnicate"]),
    (2, ["coeffs", "--family", "poisson"]),
    (2, ["coeffs", "--family", "poisson", "--M", "31"]),
    (2, ["coeffs", "--family", "poisson", "--M", "0"]),
    (2, ["coeffs", "--family", "binomial:p=3/2", "--M", "2"]),
    (2, ["expand", "--family", "poisson", "--phi", "log:beta=-1", "--M", "2"]),
    (2, ["expand", "--family", "poisson", "--phi", "power:r=1", "--M", "2", "--format", "yaml"]),
    (2, ["verify", "--family", "poisson", "--phi", "xlogx", "--M", "2", "--grid", "100:200:x2"]),
    (2, ["verify", "--family", "poisson", "--phi", "xlogx", "--M", "2", "--grid", "10:1:x2"]),
    (2, ["oracle", "--family", "binomial:p=1/2", "--phi", "xlogx", "--x", "5"]),
    (2, ["oracle", "--family", "poisson", "--phi", "xlogx", "--x", "-5"]),
    (3, ["expand", "--family", "poisson", "--phi", "log:beta=1", "--M", "3", "--collect"]),
    (3, ["expand", "--family", "poisson", "--phi", "power:r=1,a=2", "--M", "3", "--collect"]),
    (3, ["coeffs", "--family", "gamma", "--M", "3", "--poisson-recursion"]),
    (3, ["oracle", "--family", "iid:m1=1,m2=2,m3=5", "--phi", "xlogx", "--x", "5"]),
    (3, ["oracle", "--family", "gamma", "--phi", "xlogx", "--x", "1/2"]),
]


@pytest.mark.parametrize("code,argv", EXIT_CASES, ids=lambda v: " ".join(v) if isinstance(v, list) else str(v))
def test_exit_codes(capsys, code, argv):
    assert main(argv) == code
    capsys.readouterr()


def test_exit_convergence(capsys, monkeypatch):
    monkeypatch.setenv("ASYMPT_MAX_TERMS", "5")
    assert main(["oracle", "--family", "poisson", "--phi", "power:r=-1/2,a=0", "--x", "1000"]) == 4
    assert main(["verify", "--family", "poisson", "--phi", "power:r=-1/2,a=0", "--M", "3", "--grid", "100:400:x2"]) == 4
    capsys.readouterr()


# ---- determinism, via real subprocesses


@pytest.mark.parametrize(
    "argv",
    [
        ["coeffs", "--family", "nb:p=2/7", "--M", "4", "--format", "json"],
        ["expand", "--family", "binomial:p=1/3", "--phi", "power:r=-1/2,a=0", "--M", "3", "--collect", "--format", "latex"],
        ["oracle", "--family", "gamma", "--phi", "xlogx", "--x", "50"],
        ["verify", "--family", "gamma", "--phi", "log:beta=1", "--M", "2", "--grid", "100:400:x2"],
    ],
)
def test_byte_identical_stdout(argv):
    cmd = [sys.executable, "-m", "asympt", *argv]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a
