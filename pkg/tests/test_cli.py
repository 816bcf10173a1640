"""CLI behavior: exit codes, reports, determinism of emitted datasets."""

import json

import pytest

from solgeo import cli


def test_runconfig_validation(tmp_path):
    cli.RunConfig(out_dir=str(tmp_path))
    with pytest.raises(ValueError):
        cli.RunConfig(ode_abs=0.0)
    with pytest.raises(ValueError):
        cli.RunConfig(check_slack=0.9)
    with pytest.raises(ValueError):
        cli.RunConfig(format="xml")


def test_verify_elliptic_suite(tmp_path):
    code = cli.main(["verify", "--suite", "elliptic", "--out", str(tmp_path)])
    assert code == 0
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert all(row["pass"] for row in report["checks"])
    names = [(r["suite"], r["check"]) for r in report["checks"]]
    assert names == sorted(names)


def test_verify_flow_suite(tmp_path):
    assert cli.main(["verify", "--suite", "flow", "--out", str(tmp_path)]) == 0


def test_loose_tolerance_fails_symflow(tmp_path):
    """An integrator at 1e-2 cannot satisfy 1e-8 identity residuals."""
    code = cli.main(
        ["verify", "--suite", "symflow", "--tol-ode", "1e-2", "--out", str(tmp_path)]
    )
    assert code == 1
    report = json.loads((tmp_path / "verify_report.json").read_text())
    assert any(not row["pass"] for row in report["checks"])


def test_unknown_suite_exits_2(tmp_path):
    assert cli.main(["verify", "--suite", "foo", "--out", str(tmp_path)]) == 2


def test_emit_lambda_deterministic(tmp_path):
    d1 = tmp_path / "a"
    d2 = tmp_path / "b"
    assert cli.main(["emit", "lambda", "--L", "10", "--out", str(d1)]) == 0
    assert cli.main(["emit", "lambda", "--L", "10", "--out", str(d2)]) == 0
    f1 = (d1 / "lambda_L10.csv").read_bytes()
    f2 = (d2 / "lambda_L10.csv").read_bytes()
    assert f1 == f2
    man = json.loads((d1 / "lambda_manifest.json").read_text())
    assert "lambda_L10.csv" in man["files"]


def test_emit_aux_ranges(tmp_path):
    assert cli.main(["emit", "aux", "--L", "8", "--out", str(tmp_path)]) == 0
    man = json.loads((tmp_path / "aux_manifest.json").read_text())
    ranges = man["ranges"]
    # The auxiliary trajectories at L = 8 stay within [-1, 1] while the
    # time axis spans [0, 8].
    for key in ("X", "Y", "Z", "B"):
        lo, hi = ranges[key]
        assert -1.0 - 0.1 <= lo <= hi <= 1.0 + 0.1


def test_emit_invalid_params(tmp_path):
    assert cli.main(["emit", "cusp", "--r", "2", "--out", str(tmp_path)]) == 2


def test_emit_isochron(tmp_path):
    config = cli.RunConfig(out_dir=str(tmp_path), grid_points=12)
    files = cli.emit_dataset("isochron", {"r": 8.0}, config)
    assert files
    lines = (tmp_path / "isochron_r8.csv").read_text().strip().splitlines()
    assert lines[0] == "L,a,b,da,db,slope"
    assert len(lines) == 13
