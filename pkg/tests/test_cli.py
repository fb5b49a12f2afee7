import json
import math

import numpy as np
import pytest

from npdisks.cli import ConfigError, main, parse_lambda0, read_config_file, resolve_config


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def _csv_body(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return lines[0].split(","), np.array([[float(v) for v in l.split(",")] for l in lines[1:]])


def test_parse_lambda0():
    assert parse_lambda0("b/2", 0.25) == 0.125
    assert parse_lambda0("-b", 0.25) == -0.25
    assert parse_lambda0("0.5*b", 0.2) == pytest.approx(0.1)
    assert parse_lambda0("0", 0.25) == 0.0
    with pytest.raises(ConfigError):
        parse_lambda0("sqrt(b)", 0.25)


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# geometry\ntheta0 = 0.5\nmesh_sizes = 16  # small\neta_points=3\n")
    raw = read_config_file(cfg)
    assert raw == {"theta0": "0.5", "mesh_sizes": "16", "eta_points": "3"}
    code, out, _ = _run(capsys, "spectrum", "--config", str(cfg), "--theta0", str(math.pi / 3), "--out", str(tmp_path / "o"))
    assert code == 0
    summary = json.loads((tmp_path / "o" / "spectrum_summary.json").read_text())
    assert summary["theta0"] == math.pi / 3
    assert summary["config"]["theta0"] == "1.0471975511965976"


@pytest.mark.parametrize("theta0,b", [(math.pi / 4, 0.25), (math.pi / 3, 1 / 6)])
def test_spectrum_reports_bound(tmp_path, capsys, theta0, b):
    code, _, _ = _run(
        capsys, "spectrum", "--theta0", repr(theta0), "--set", "mesh_sizes=16", "--out", str(tmp_path), "--format", "json"
    )
    assert code == 0
    data = json.loads((tmp_path / "spectrum.json").read_text())
    assert data["b"] == pytest.approx(b, abs=1e-16)
    eig = np.array(data["eigenvalues"]["16"])
    assert np.all(np.abs(eig) < b)
    assert data["eta"]["eta"][0] == pytest.approx(b, abs=1e-16)


def test_spectrum_csv_headers(tmp_path, capsys):
    code, _, _ = _run(capsys, "spectrum", "--set", "mesh_sizes=16", "--out", str(tmp_path))
    assert code == 0
    text = (tmp_path / "spectrum_eta.csv").read_text()
    assert "# theta0=0.78539816339744828" in text and "# b=0.25" in text
    header, body = _csv_body(tmp_path / "spectrum_eigenvalues.csv")
    assert header == ["M", "index", "eigenvalue"] and body.shape[1] == 3


@pytest.mark.parametrize(
    "argv,needle",
    [
        (["spectrum", "--set", "bogus=1"], "unknown config key"),
        (["validate", "--set", "N=4095"], "N must be an even integer"),
        (["validate", "--theta0", "0.01"], "touching"),
        (["spectrum", "--format", "xml"], "invalid choice"),
        (["resonance", "--set", "deltas=1e-2,1e-3"], "at least 6"),
        (["resonance", "--set", "lambda0=b**2"], "lambda0"),
        (["frobnicate"], "invalid choice"),
    ],
)
def test_usage_errors(tmp_path, capsys, argv, needle):
    code, _, err = _run(capsys, *argv, "--out", str(tmp_path / "o"))
    assert code == 2
    rec = json.loads(err.strip().splitlines()[-1])
    assert rec["exit_code"] == 2 and needle in rec["message"]


def test_malformed_config_file(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("theta0 = 0.7\nno equals sign here\n")
    code, _, err = _run(capsys, "spectrum", "--config", str(cfg))
    assert code == 2 and json.loads(err)["error"] == "ConfigError"


def test_resonance_interior(tmp_path, capsys):
    code, out, _ = _run(capsys, "resonance", "--out", str(tmp_path))
    assert code == 0 and json.loads(out)["passed"]
    header, body = _csv_body(tmp_path / "resonance_sweep.csv")
    assert header == ["delta", "phi_norm_sq", "delta_phi_norm_sq", "local_slope"]
    assert body.shape == (12, 4)
    summary = json.loads((tmp_path / "resonance_summary.json").read_text())
    assert abs(summary["slope"] + 1.0) < 0.05
    assert summary["checks"]["limit"]["rel_error"] < 0.02


def test_resonance_zero_reports_log_slope(tmp_path, capsys):
    code, _, _ = _run(capsys, "resonance", "--set", "lambda0=0", "--set", "kappa=0.3", "--out", str(tmp_path))
    summary = json.loads((tmp_path / "resonance_summary.json").read_text())
    assert summary["checks"]["slope"]["kind"] == "log_corrected_slope"
    assert summary["checks"]["slope"]["expected"] == pytest.approx(-1.3)
    assert abs(summary["log_corrected_slope"] + 1.3) < 0.05
    assert code == (0 if summary["passed"] else 1)


def test_resolve_rejects_unknown():
    with pytest.raises(ConfigError):
        resolve_config("field", {"mesh_sizes": "16"})


def test_field_empty_grid(tmp_path, capsys):
    code, out, _ = _run(capsys, "field", "--set", "x1_count=0", "--out", str(tmp_path / "f"))
    assert code == 0 and json.loads(out)["files"] == []
    assert not (tmp_path / "f").exists()


def _field(capsys, tmp_path, name, *sets):
    argv = ["field", "--out", str(tmp_path / name)]
    for s in sets:
        argv += ["--set", s]
    code, out, _ = _run(capsys, *argv)
    assert code == 0
    header, body = _csv_body(tmp_path / name / "field.csv")
    summary = json.loads((tmp_path / name / "field_summary.json").read_text())
    return header, body, summary


def test_field_guard_band_and_columns(tmp_path, capsys):
    header, body, summary = _field(capsys, tmp_path, "a", "x1_count=11", "x2_count=11", "guard=0.1")
    assert header == ["x1", "x2", "re", "im", "grad_abs"]
    assert summary["skipped"] > 0 and summary["written"] + summary["skipped"] == 121
    assert body.shape == (summary["written"], 5) and np.all(np.isfinite(body))


def test_field_positive_permittivity_bounded(tmp_path, capsys):
    runs = [_field(capsys, tmp_path, f"e{d}", "eps_c=2", f"delta={d}", "x1_count=9", "x2_count=9")[2] for d in ("1e-2", "1e-6")]
    assert runs[1]["max_abs_u"] == pytest.approx(runs[0]["max_abs_u"], rel=1e-2)


def test_field_grows_near_corner(tmp_path, capsys):
    box = ["x1_min=0.55", "x1_max=0.85", "x2_min=-0.15", "x2_max=0.15", "x1_count=7", "x2_count=7"]
    weak = _field(capsys, tmp_path, "w", "delta=1e-2", *box)[2]
    strong = _field(capsys, tmp_path, "s", "delta=1e-4", *box)[2]
    assert strong["max_abs_u"] > weak["max_abs_u"]


def test_deterministic_output(tmp_path, capsys):
    paths = []
    for _ in range(2):
        _run(capsys, "field", "--set", "x1_count=5", "--set", "x2_count=5", "--out", str(tmp_path / "d"))
        paths.append((tmp_path / "d" / "field.csv").read_bytes())
    assert paths[0] == paths[1]


def test_validate_default_config(tmp_path, capsys):
    code, out, _ = _run(capsys, "validate", "--out", str(tmp_path))
    assert code == 0 and json.loads(out)["failed"] == []
    text = (tmp_path / "validate.csv").read_text()
    for name in ("round_trip", "unitarity", "calderon", "multiplier_vs_oracle", "jump", "eigenrelation", "resolution_of_identity"):
        assert f"\n{name}," in text
