import json
import subprocess
import sys

import pytest
import yaml

from hybridion import __version__
from hybridion.cli import EXIT_FAILURE, EXIT_OK, EXIT_VALIDATION, load_config, main
from hybridion.experiments import CSV_COLUMNS

SMALL_SCAN = {"interaction": "OneModeSqueeze", "parameter": 0.5, "K": [1, 3, 6], "cutoffs": [30]}


def write_cfg(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(p)


def test_list_interactions(capsys):
    assert main(["list-interactions"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    rows = lines[1:]
    assert len(rows) == 8
    assert [r.split()[3] for r in rows] == ["yes"] * 4 + ["no"] * 4
    assert "cos(phi)" in rows[2]


def test_version_flag(capsys):
    with pytest.raises(SystemExit):
        main(["--version"])
    assert __version__ in capsys.readouterr().out


def test_unknown_key_names_the_key(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"interaction": "BeamSplitter", "laserfree": {"detla": 1}})
    assert main(["scan", "--config", cfg]) == EXIT_VALIDATION
    assert "laserfree.detla" in capsys.readouterr().err


@pytest.mark.parametrize("data", [
    {"K": [], "parameter": 0.5},
    {"K": [3, 2], "parameter": 0.5},
    {"parameter": 0.5, "action": 0.2},
    {"interaction": "Teleport", "parameter": 0.5},
    {"parameter": -1.0},
    {"parameter": 0.5, "cutoffs": [20, 20]},
    {"parameter": 0.5, "units": {"mode": "hertz"}},
    {"parameter": "big"},
])
def test_validation_errors_exit_2(tmp_path, data):
    assert main(["scan", "--config", write_cfg(tmp_path, data), "--out", str(tmp_path / "x.csv")]) == EXIT_VALIDATION
    assert not (tmp_path / "x.csv").exists()


def test_malformed_yaml(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("interaction: [unclosed", encoding="utf-8")
    assert main(["scan", "--config", str(p)]) == EXIT_VALIDATION
    assert main(["scan", "--config", str(tmp_path / "missing.yaml")]) == EXIT_VALIDATION


def test_leakage_exit_3_names_k(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {**SMALL_SCAN, "parameter": 1.5, "cutoffs": [12]})
    assert main(["scan", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == EXIT_FAILURE
    assert "K=1" in capsys.readouterr().err


def test_scan_csv_and_report(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["scan", "--config", write_cfg(tmp_path, SMALL_SCAN), "--out", str(out)]) == EXIT_OK
    raw = out.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert [int(l.split(",")[0]) for l in lines[1:]] == [1, 3, 6]
    report = json.loads((tmp_path / "s.csv.report.json").read_text(encoding="utf-8"))
    assert report["version"] == __version__
    assert report["config"]["parameter"] == 0.5 and report["config"]["resolved_action"] == 0.25
    for row in report["rows"]:
        for conv in row["t_f_wall"].values():
            assert conv["seconds"] > 0
        tf = row["tf_omega_over_2pi"]
        assert row["t_f_wall"]["10 kHz"]["seconds"] == pytest.approx(tf / 1e4, rel=1e-15)
    assert report["reference_point"]["t_f_wall"]["10 kHz"]["text"] == "120 µs"


def test_config_echo_reruns_identically(tmp_path):
    out = tmp_path / "a.csv"
    main(["scan", "--config", write_cfg(tmp_path, SMALL_SCAN), "--out", str(out)])
    echo = json.loads((tmp_path / "a.csv.report.json").read_text())["config"]
    replay = {k: v for k, v in echo.items() if not k.startswith("resolved_")}
    out2 = tmp_path / "b.csv"
    assert main(["scan", "--config", write_cfg(tmp_path, replay, "replay.yaml"), "--out", str(out2)]) == EXIT_OK
    assert out.read_bytes() == out2.read_bytes()


def test_threads_do_not_change_output(tmp_path):
    cfg = write_cfg(tmp_path, SMALL_SCAN)
    main(["scan", "--config", cfg, "--out", str(tmp_path / "one.csv")])
    main(["scan", "--config", cfg, "--out", str(tmp_path / "two.csv"), "--threads", "2", "--seed", "5"])
    assert (tmp_path / "one.csv").read_bytes() == (tmp_path / "two.csv").read_bytes()
    assert main(["scan", "--config", cfg, "--threads", "0"]) == EXIT_VALIDATION


def test_hertz_units_add_rate(tmp_path):
    data = {**SMALL_SCAN, "units": {"mode": "hertz", "rabi_hz": 5000}}
    out = tmp_path / "h.csv"
    assert main(["scan", "--config", write_cfg(tmp_path, data), "--out", str(out)]) == EXIT_OK
    row = json.loads((tmp_path / "h.csv.report.json").read_text())["rows"][0]
    assert set(row["t_f_wall"]) == {"10 kHz", "1 kHz", "5 kHz"}


def test_evolve_reports_support(tmp_path):
    data = {"interaction": "TwoModeSqueeze", "parameter": 0.25, "cutoffs": [10, 10], "evolve": {"K": 4}}
    out = tmp_path / "e.csv"
    assert main(["evolve", "--config", write_cfg(tmp_path, data), "--out", str(out)]) == EXIT_OK
    rep = json.loads((tmp_path / "e.csv.report.json").read_text())
    assert 0 <= rep["offdiagonal_population"] < 1
    assert len(rep["phonon_populations"]) == 10


def test_evolve_needs_a_duration(tmp_path):
    data = {"interaction": "TwoModeSqueeze", "parameter": 0.25}
    assert main(["evolve", "--config", write_cfg(tmp_path, data)]) == EXIT_VALIDATION


def test_magnus_check(tmp_path, capsys):
    data = {"interaction": "OneModeSqueeze", "action": 0.25, "magnus": {"K": 2, "cutoff": 10}}
    assert main(["magnus-check", "--config", write_cfg(tmp_path, data), "--out", str(tmp_path / "m.json")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "[PASS]" in out and "[FAIL]" not in out
    assert json.loads((tmp_path / "m.json.report.json").read_text())["command"] == "magnus-check"


def test_cvqc_demo(tmp_path, capsys):
    assert main(["cvqc-demo", "--config", write_cfg(tmp_path, {"cvqc": {"cutoff": 24}})]) == EXIT_OK
    assert "[FAIL]" not in capsys.readouterr().out


def test_cvqc_demo_failure_exit(tmp_path):
    # an impossible slope tolerance must surface as a property failure
    data = {"cvqc": {"slope_tol": 1e-9}}
    assert main(["cvqc-demo", "--config", write_cfg(tmp_path, data)]) == EXIT_FAILURE


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "hybridion", "list-interactions"], capture_output=True, text=True)
    assert r.returncode == 0 and "BeamSplitter" in r.stdout


def test_default_config_loads():
    cfg = load_config(None)
    assert cfg.kind.label == "OneModeSqueeze"
