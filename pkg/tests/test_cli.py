from __future__ import annotations

import os
import subprocess
import sys
from pathlib import Path

import pytest

from cantor_spectra.cli import RECIPES, main

GOLDEN = Path(__file__).parent / "golden"


def run_cli(capsys, *argv: str) -> tuple[int, str, str]:
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_encode_decode(capsys):
    assert run_cli(capsys, "encode", "--", "-10") == (0, "2 1 | 3~\n", "")
    code, out, _ = run_cli(capsys, "decode", "2 1 | 3~")
    assert (code, out) == (0, "-10\n")
    code, out, _ = run_cli(capsys, "encode", "0", "5")
    assert out.splitlines() == ["| 0~", "1 1 | 0~"]


def test_zeros_and_phi(capsys):
    code, out, _ = run_cli(capsys, "zeros", "1", "2", "12", "0")
    assert code == 0 and out.split() == ["1", "zero", "2", "nonzero", "12", "zero", "0", "nonzero"]
    code, out, _ = run_cli(capsys, "phi", "--t", "1")
    assert code == 0 and out.splitlines()[1] == "1.0,0,0,0,0"


def test_usage_errors_exit_1(capsys):
    assert run_cli(capsys, "encode", "--bogus")[0] == 1
    assert run_cli(capsys, "frobnicate")[0] == 1
    assert run_cli(capsys, "decode", "2 1 |")[0] == 1
    assert run_cli(capsys, "gen", "--rule", "nope", "--levels", "2")[0] == 1
    assert run_cli(capsys, "gen", "--rule", "jp", "--levels", "-1")[0] == 1


def test_config_error_reports_position(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("rule=uniform\npairs.level.3=0,2\n")
    code, _, err = run_cli(capsys, "gen", "--rule", str(cfg), "--levels", "3")
    assert code == 1 and "line 2, column 15" in err


def test_gen_and_ortho(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "gen", "--rule", "jp", "--levels", "2")
    assert code == 0
    body = [line for line in out.splitlines() if not line.startswith("#")]
    assert [int(line.split()[0]) for line in body] == [0, 1, 4, 5]
    good = tmp_path / "good.txt"
    good.write_text("0\n1  # one\n4\n")
    assert run_cli(capsys, "ortho", "--set", str(good))[0] == 0
    bad = tmp_path / "bad.txt"
    bad.write_text("0\n2\n")
    assert run_cli(capsys, "ortho", "--set", str(bad))[0] == 2


def test_maximal(capsys, tmp_path):
    s = tmp_path / "s.txt"
    s.write_text("0\n4\n5\n")
    code, out, _ = run_cli(capsys, "maximal", "--set", str(s), "--window", "2")
    assert code == 2 and "1" in out


def test_verdict_failure_exit_2(capsys):
    code, out, _ = run_cli(capsys, "certify", "--rule", "jp", "--levels", "2", "--grid", "8")
    assert code == 2 and "# verdict: Inconclusive" in out
    code, _, _ = run_cli(capsys, "goodpath", "--rule", "exr4", "--p", "0", "--q", "0", "--depth", "3")
    assert code == 2


def test_counterexample_exploratory(capsys):
    code, out, _ = run_cli(capsys, "counterexample", "--gaps", "poly:2", "--nmax", "6")
    assert code == 0 and "numeric_sum" in out and "NOT A SPECTRUM" not in out


def test_sample_is_seeded(capsys):
    args = ("sample", "--count", "20000", "--seed", "7", "--t", "0.3,1")
    first = run_cli(capsys, *args)
    assert first[0] == 0 and "# seed: 7" in first[1]
    assert run_cli(capsys, *args) == first


def test_recipes_listing(capsys):
    code, out, _ = run_cli(capsys, "recipes")
    names = [line.split("\t")[0] for line in out.splitlines()]
    assert code == 0 and len(names) >= 7
    assert {"digits-15-9-nonmaximal", "exr4-propr2", "jp-spectrum"} <= set(names)


@pytest.mark.parametrize("name", sorted(RECIPES))
def test_recipe_golden(capsys, name):
    code, out, _ = run_cli(capsys, "recipes", "--run", name)
    assert code == 0
    assert out == (GOLDEN / f"{name}.txt").read_text()


def _subprocess(args: list[str], env_threads: str | None) -> subprocess.CompletedProcess:
    env = dict(os.environ)
    env.pop("CANTOR_SPECTRA_THREADS", None)
    if env_threads is not None:
        env["CANTOR_SPECTRA_THREADS"] = env_threads
    return subprocess.run([sys.executable, "-m", "cantor_spectra.cli", *args], capture_output=True, text=True, env=env)


def test_threads_env_and_byte_identical():
    args = ["certify", "--rule", "jp", "--levels", "8", "--grid", "16"]
    base = _subprocess(["--threads", "1", *args], None)
    assert base.returncode == 0
    again = _subprocess(["--threads", "1", *args], None)
    threaded = _subprocess(["--threads", "1", *args], "3")
    assert again.stdout == base.stdout == threaded.stdout
    bad = _subprocess(args, "many")
    assert bad.returncode == 1 and "CANTOR_SPECTRA_THREADS" in bad.stderr
