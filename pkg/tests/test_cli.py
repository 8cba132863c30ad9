"""Config parsing, run artifacts, command exit codes, and the sign-flip trap."""

import io
import json
import os
from pathlib import Path

import numpy as np
import pytest

import bilaplab.diagnostics
import bilaplab.problem
import bilaplab.solver
import bilaplab.verify as verify
from bilaplab.cli import main
from bilaplab.config import ConfigError, output_root, parse_config, run

BASE = "h = 0.0625\ng = harmonic:deg=1\n"


def test_parse_empty_text_yields_defaults():
    cfg = parse_config("")
    assert cfg.spec.n == 1
    assert cfg.spec.p == 2.0
    assert cfg.spec.lambda_plus == 1.0
    assert cfg.spec.lambda_minus == 1.0
    assert cfg.spec.h == 0.0625
    assert cfg.seed == 0
    assert cfg.m == 512
    assert cfg.stages == ("solve", "profile", "gamma")
    commented = parse_config("# nothing but a comment\n\n")
    assert commented.digest == cfg.digest


@pytest.mark.parametrize("text,message", [
    ("flux = 3", r"unknown key 'flux' \(line 1\)"),
    ("p = 0.5", r"key 'p'.*requires p > 1.*0\.5"),
    ("lambda_plus = 0", r"key 'lambda_plus'.*must be > 0"),
    ("lambda_minus = -2", r"key 'lambda_minus'.*must be > 0"),
    ("h = 0.3", r"key 'h'.*divide 1 exactly.*0\.3"),
    ("centers = 1.5", r"key 'centers'.*outside the open thin face"),
    ("m = 32", r"key 'm'.*>= 64"),
    ("stages = solve,fly", r"key 'stages'.*unknown stage"),
    ("p = 2\np = 3", r"key 'p' given twice \(line 2\)"),
    ("p", r"line 1: expected 'key = value'"),
])
def test_parse_errors_name_the_offending_key(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


def test_run_writes_artifact_tree(tmp_path):
    cfg = parse_config(BASE + f"output = {tmp_path / 'art'}\n")
    out = run(cfg)
    names = sorted(os.listdir(out))
    assert names == ["config.txt", "fields.csv", "gamma.csv",
                     "profile_+0.0000.csv", "summary.json"]
    stamp = f"# config {cfg.digest}"
    for csv in ("fields.csv", "gamma.csv", "profile_+0.0000.csv"):
        lines = (out / csv).read_text().splitlines()
        assert lines[0] == stamp
    assert (out / "fields.csv").read_text().splitlines()[1] == "x,y,u,v"
    head = (out / "profile_+0.0000.csv").read_text().splitlines()[1]
    assert head == "r,H,D,D0,B,N,N0,phi,W,M"

    summary = json.loads((out / "summary.json").read_text())
    assert summary["config_hash"] == cfg.digest
    assert set(summary) == {"config", "config_hash", "points", "profiles",
                            "solve", "stationarity"}
    assert summary["solve"]["node_count"] > 0
    point, = summary["points"]
    assert point["x"] == pytest.approx(0.0, abs=1e-9)
    assert point["classification"] in ("REGULAR", "SINGULAR")
    assert point["mu_int"] == 1


def test_run_is_byte_deterministic(tmp_path):
    out_a = run(parse_config(BASE + f"output = {tmp_path / 'a'}\n"))
    out_b = run(parse_config(BASE + f"output = {tmp_path / 'b'}\n"))
    for name in sorted(os.listdir(out_a)):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_output_root_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("BILAPLAB_OUTPUT_ROOT", str(tmp_path))
    assert output_root() == tmp_path
    cfg = parse_config(BASE)
    out = run(cfg)
    assert out == tmp_path / "runs" / cfg.digest
    assert (out / "summary.json").exists()


def test_cli_stage_selection(tmp_path, monkeypatch):
    monkeypatch.setenv("BILAPLAB_OUTPUT_ROOT", str(tmp_path))
    cfgfile = tmp_path / "case.cfg"
    cfgfile.write_text(BASE)

    assert main(["solve", str(cfgfile)]) == 0
    solve_dirs = sorted((tmp_path / "runs").iterdir())
    assert len(solve_dirs) == 1
    solve_names = set(os.listdir(solve_dirs[0]))
    assert "fields.csv" in solve_names
    assert "gamma.csv" not in solve_names
    assert not any(n.startswith("profile_") for n in solve_names)

    assert main(["diagnose", str(cfgfile)]) == 0
    assert main(["blowup", str(cfgfile)]) == 0
    all_names = set()
    for d in (tmp_path / "runs").iterdir():
        all_names |= set(os.listdir(d))
    assert "profile_+0.0000.csv" in all_names
    assert "gamma.csv" in all_names


def test_cli_missing_config_file(capsys):
    assert main(["solve", "/nonexistent/case.cfg"]) == 2
    assert "not found" in capsys.readouterr().err


def test_cli_invalid_config_value(tmp_path, capsys):
    cfgfile = tmp_path / "bad.cfg"
    cfgfile.write_text("p = 0.5\n")
    assert main(["solve", str(cfgfile)]) == 2
    assert "'p'" in capsys.readouterr().err


def test_cli_extension_check(capsys):
    assert main(["extension-check", "--modes", "1,2,3", "--height", "12"]) == 0
    out = capsys.readouterr().out
    assert "spread" in out
    assert main(["extension-check", "--modes", "1,x"]) == 2
    assert main(["extension-check", "--modes", "0"]) == 2


def test_cli_rejects_unknown_verify_level():
    with pytest.raises(SystemExit):
        main(["verify", "--level", "later"])


def _passing_stub(level="quick"):
    return verify.CheckResult("stub pass", "-", "-", True)


def _failing_stub(level="quick"):
    return verify.CheckResult("stub fail", "-", "-", False)


def test_cli_verify_exit_codes(monkeypatch):
    monkeypatch.setattr(verify, "ALL_CHECKS", [_passing_stub])
    assert main(["verify", "--level", "quick"]) == 0
    monkeypatch.setattr(verify, "ALL_CHECKS", [_passing_stub, _failing_stub])
    assert main(["verify", "--level", "quick"]) == 1


def _clear_corpus_caches():
    for fn in (verify.corpus_spec, verify.corpus_solve,
               verify.corpus_oracle, verify.corpus_points):
        fn.cache_clear()


def test_sign_flip_mutation_is_caught(monkeypatch):
    """Flipping the thin reaction makes the monotonicity and residual
    checks fail, so the suite exits 1: the trap the suite must spring."""
    true_reaction = bilaplab.problem.thin_reaction

    def flipped(t, spec):
        return -true_reaction(t, spec)

    _clear_corpus_caches()
    try:
        for mod in (bilaplab.problem, bilaplab.solver, bilaplab.diagnostics):
            monkeypatch.setattr(mod, "thin_reaction", flipped)
        monkeypatch.setattr(verify, "ALL_CHECKS", [
            verify.check_almgren_monotonicity,
            verify.check_weak_residual_refinement,
        ])
        buf = io.StringIO()
        assert verify.run_suite("quick", stream=buf) == 1
        text = buf.getvalue()
        assert text.count("[FAIL]") == 2
        assert "0/2 checks passed" in text
    finally:
        monkeypatch.undo()
        _clear_corpus_caches()
