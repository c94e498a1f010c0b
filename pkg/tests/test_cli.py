"""Command-line interface: commands, output modes, exit codes, config."""

import json
from importlib import resources

import pytest

from spinzx.cli import main

FIXTURES = resources.files("spinzx") / "fixtures"


def fixture_path(name):
    return str(FIXTURES / name)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "spinzx" in capsys.readouterr().out


def test_eval_identity_fixture(capsys):
    code, out, err = run(capsys, "eval", fixture_path("identity2.zxd"))
    assert code == 0 and err == ""
    assert "2x2" in out and "(0, 0): 1+0j" in out


def test_eval_scalar_fixture_matches_manifest(capsys):
    manifest = json.loads((FIXTURES / "manifest.json").read_text())
    entry = next(e for e in manifest if e["name"] == "pqc_demo")
    code, out, _ = run(capsys, "eval", fixture_path(entry["file"]))
    assert code == 0
    got = complex(out.strip().replace("+0j", "+0j"))
    expect = complex(entry["expected"][0], entry["expected"][1])
    assert abs(got - expect) <= entry["tolerance"]


def test_eval_missing_file_exit_1(capsys):
    code, _, err = run(capsys, "eval", "/no/such/file.zxd")
    assert code == 1 and err


def test_eval_malformed_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.zxd"
    bad.write_text('{"nodes": [,]}')
    code, _, err = run(capsys, "eval", str(bad))
    assert code == 1
    assert "line" in err and "column" in err


def test_oracle_3jm_value(capsys):
    code, out, _ = run(capsys, "oracle", "3jm", "1/2", "1/2", "0",
                       "1/2", "-1/2", "0")
    assert code == 0
    assert out.strip().startswith("0.70710678")


def test_oracle_3jm_inadmissible_note(capsys):
    code, out, _ = run(capsys, "oracle", "3jm", "1/2", "1/2", "1/2",
                       "1/2", "-1/2", "0")
    assert code == 0
    assert out.splitlines()[0].strip() == "0"
    assert "Clebsch-Gordan conditions violated" in out


def test_oracle_invalid_spin_exit_4(capsys):
    code, _, err = run(capsys, "oracle", "3jm", "1/3", "1/2", "0",
                       "1/2", "-1/2", "0")
    assert code == 4 and err


def test_oracle_wignerd_identity(capsys):
    code, out, _ = run(capsys, "oracle", "wignerd", "1", "--identity")
    assert code == 0
    lines = [l for l in out.splitlines() if l.strip()]
    assert len(lines) >= 3


def test_oracle_symmetriser(capsys):
    code, out, _ = run(capsys, "oracle", "symmetriser", "2")
    assert code == 0 and "0.5" in out


def test_oracle_cg_json_mode(capsys):
    code, out, _ = run(capsys, "oracle", "cg", "1/2", "1/2", "1/2", "-1/2",
                       "0", "0", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == 1
    assert doc["value"] == pytest.approx(0.7071067811865476)


def test_simplify_fused_chain(capsys, tmp_path):
    out_file = tmp_path / "out.zxd"
    code, out, _ = run(capsys, "simplify", fixture_path("fused_chain.zxd"),
                       "--strategy", "fuse", "-o", str(out_file))
    assert code == 0
    assert "5 -> 1" in out and "verified" in out
    assert out_file.exists()


def test_simplify_pqc_demo_full_trace(capsys):
    code, out, _ = run(capsys, "simplify", fixture_path("pqc_demo.zxd"),
                       "--strategy", "full", "--trace")
    assert code == 0
    assert "step 1:" in out


def test_verify_binor(capsys):
    code, out, _ = run(capsys, "verify", "binor")
    assert code == 0
    assert "[PASS]" in out and "checks passed" in out


def test_demo_pqc(capsys):
    code, out, _ = run(capsys, "demo", "pqc")
    assert code == 0
    assert "0.8660254" in out


def test_demo_lqg(capsys):
    code, out, _ = run(capsys, "demo", "lqg")
    assert code == 0


def test_export_dot(capsys, tmp_path):
    target = tmp_path / "d.dot"
    code, _, _ = run(capsys, "export-dot", fixture_path("identity2.zxd"),
                     "-o", str(target))
    assert code == 0
    assert "graph" in target.read_text()


def test_config_file_sets_tolerance(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "spinzx.toml").write_text("tolerance = 1e-6\nseed = 7\n")
    code, out, _ = run(capsys, "verify", "binor")
    assert code == 0


def test_unknown_subcommand_nonzero(capsys):
    with pytest.raises(SystemExit):
        main(["frobnicate"])
