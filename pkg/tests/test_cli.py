import json
import math

import pytest

from gkdv_modstab.cli import main, parse_grid
from gkdv_modstab.scan import analyze_point, ScanConfig, write_csv

KDV = ["--nl", "kdv", "--a", "0.1", "--E", "-0.1", "--c", "1"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_stability_json(capsys):
    code, out, _ = run(capsys, "stability", *KDV, "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["outcome"] == "Stable" and d["disc"] > 0


def test_stability_pretty_shows_cubic(capsys):
    code, out, _ = run(capsys, "stability", *KDV)
    assert code == 0
    assert "-y^3" in out and "coperiodic" in out


def test_exit_no_orbit(capsys):
    code, _, err = run(capsys, "stability", "--nl", "kdv", "--a", "0.1", "--E", "1", "--c", "1")
    assert code == 2 and "no periodic orbit" in err
    code, _, _ = run(capsys, "wave", "--nl", "kdv", "--a", "0.1", "--E", "1", "--c", "1")
    assert code == 2


def test_exit_degenerate(capsys):
    a, c = 0.1, 1.0
    umax = (c - math.sqrt(c * c + 4 * a)) / 2
    E = umax**3 / 3 - a * umax - c * umax**2 / 2 - 1e-15
    code, _, _ = run(capsys, "wave", "--nl", "kdv", "--a", str(a), "--E", repr(E), "--c", str(c))
    assert code == 3


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["stability", "--format", "xml"])
    assert exc.value.code == 1
    code, _, err = run(capsys, "stability", "--nl", "kdv", "--a", "0.1")
    assert code == 1 and "missing" in err
    code, _, _ = run(capsys, "wave", "--nl", "cubic!", "--a", "0", "--E", "0", "--c", "1")
    assert code == 1


def test_config_and_override(capsys, tmp_path):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({"nl": "kdv", "a": 0.1, "E": 5.0, "c": 1, "format": "json"}))
    code, _, _ = run(capsys, "stability", "--config", str(cfgfile))
    assert code == 2
    code, out, _ = run(capsys, "stability", "--config", str(cfgfile), "--E", "-0.1")
    assert code == 0 and json.loads(out)["E"] == -0.1
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nl": "kdv", "speed": 1}))
    code, _, err = run(capsys, "stability", "--config", str(bad))
    assert code == 1 and "speed" in err


def test_out_file(capsys, tmp_path):
    dest = tmp_path / "w.json"
    code, out, _ = run(capsys, "wave", *KDV, "--format", "json", "--out", str(dest))
    assert code == 0 and out == ""
    d = json.loads(dest.read_text())
    assert d["uminus"] < d["uplus"] and d["energy_residual"] < 1e-10


def test_whitham_and_evans_commands(capsys):
    code, out, _ = run(capsys, "whitham", *KDV, "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["hyperbolic"] and d["verdict"] == "Stable" and d["eig_root_mismatch"] < 1e-5
    code, out, _ = run(capsys, "evans", *KDV, "--format", "json")
    assert code == 0
    d = json.loads(out)
    assert d["D_Lambda"] < 0
    assert abs(d["c30"]["re"] - d["pred_c30"]) < 1e-5 * abs(d["pred_c30"])
    assert len(d["roots"]) == 3 and set(d["roots"][0]) == {"re", "im"}


def test_verify_passes_and_reports_symmetric_mass(capsys):
    code, out, _ = run(capsys, "verify", "--nl", "mkdv-", "--a", "0", "--E", "0.1", "--c", "-1")
    assert code == 0
    assert "FAIL" not in out
    assert "M = 0" in out


def test_verify_tamper_fails(capsys):
    code, out, _ = run(capsys, "verify", *KDV, "--tamper", "M_a")
    assert code == 4
    failing = [line for line in out.splitlines() if line.startswith("FAIL")]
    assert any("identity" in line and "M_a" in line for line in failing)


def test_parse_grid():
    g = parse_grid("a=0:1:3,E=-1:0:2")
    assert g == {"a": (0.0, 1.0, 3), "E": (-1.0, 0.0, 2)}
    with pytest.raises(Exception):
        parse_grid("a=0:1")


def test_scan_single_point_equals_stability(capsys):
    code, scan_out, _ = run(capsys, "scan", "--nl", "kdv", "--grid", "a=0.1:0.1:1,E=-0.1:-0.1:1,c=1",
                            "--format", "csv", "--no-timing")
    assert code == 0
    cfg = ScanConfig("kdv", fixed={"a": 0.1, "E": -0.1, "c": 1.0}, record_timing=False)
    assert scan_out == write_csv([analyze_point("kdv", 0.1, -0.1, 1.0, cfg)])
    code, stab_out, _ = run(capsys, "stability", *KDV, "--format", "csv")
    # same columns and values apart from the timing cell
    h1, r1 = scan_out.splitlines()
    h2, r2 = stab_out.splitlines()
    assert h1 == h2
    assert r1.split(",")[:-1] == r2.split(",")[:-1]
