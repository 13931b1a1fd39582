import json
import subprocess
import sys

import pytest

from esglab.cli import main

from conftest import synthetic_history


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def small_config(tmp_path, **extra):
    cfg = {
        "assets": ["cash", "bonds", "stocks"],
        "model": {"mu": [0.021, 0.055, 0.08], "sigma": [0.008, 0.036, 0.19],
                  "corr": [[1, 0.25, 0], [0.25, 1, -0.25], [0, -0.25, 1]]},
        "sizes": [50, 500], "replications": 4, "reference_size": 5000, "master_seed": 11,
    }
    cfg.update(extra)
    p = tmp_path / "config.json"
    p.write_text(json.dumps(cfg), encoding="utf-8")
    return p


def test_tree_count_only(capsys):
    code, out, _ = run(capsys, "tree", "--branching", "5,3,3,2", "--count-only")
    assert code == 0 and out.strip() == "156"


def test_tree_build_writes_files(capsys, tmp_path):
    code, out, _ = run(capsys, "tree", "--branching", "2,2", "--out", str(tmp_path / "t.csv"),
                       "--paths-out", str(tmp_path / "p.csv"), "--manifest", str(tmp_path / "m.json"))
    assert code == 0
    assert json.loads(out) == {"branching": [2, 2], "nodes": 7, "arcs": 6, "leaves": 4, "height": 2}
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 8
    assert len((tmp_path / "p.csv").read_text().splitlines()) == 9
    assert json.loads((tmp_path / "m.json").read_text())["command"] == "tree"


def test_calibrate_prints_model(capsys, tmp_path):
    data = synthetic_history(tmp_path)
    code, out, _ = run(capsys, "calibrate", "--data", str(data))
    assert code == 0
    model = json.loads(out)
    assert model["assets"] == ["mm", "bonds", "equities"]
    assert len(model["model"]["corr"]) == 3


def test_calibrate_bad_data_exit_1(capsys, tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("date,a\n2020-02-01,1\n2020-01-01,2\n", encoding="utf-8")
    code, _, err = run(capsys, "calibrate", "--data", str(p))
    assert code == 1 and "non-increasing dates at row 2" in err


def test_calibrated_model_round_trips_into_generate_and_stability(capsys, tmp_path):
    data = synthetic_history(tmp_path)
    model_file = tmp_path / "model.json"
    assert run(capsys, "calibrate", "--data", str(data), "--out", str(model_file))[0] == 0
    code, out, _ = run(capsys, "generate", "--config", str(model_file), "--paths", "5", "--seed", "1")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "path,period,mm,bonds,equities" and len(lines) == 6
    code, _, err = run(capsys, "stability", "--config", str(model_file), "--out", str(tmp_path / "rep"))
    assert code == 0, err


def test_stability_writes_report(capsys, tmp_path):
    cfg = small_config(tmp_path)
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "stability", "--config", str(cfg), "--out", str(out_dir), "--threads", "2")
    assert code == 0
    for name in ("objectives.csv", "weights.csv", "internal_stats.csv", "external_stats.csv", "bias.csv",
                 "manifest.json"):
        assert (out_dir / name).exists(), name
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["master_seed"] == 11 and manifest["config"]["sizes"] == [50, 500]
    assert (out_dir / "objectives.csv").read_text().splitlines()[0] == "size,replication,objective,expected,feasible"
    assert len((out_dir / "weights.csv").read_text().splitlines()) == 1 + 2 * 4 * 3


def test_optimize_variants(capsys, tmp_path):
    cfg = small_config(tmp_path)
    code, out, _ = run(capsys, "optimize", "--config", str(cfg), "--exact")
    assert code == 0 and json.loads(out)["weights"] == {"cash": 0.45, "bonds": 0.5, "stocks": 0.05}
    scen = tmp_path / "s.csv"
    assert run(capsys, "generate", "--config", str(cfg), "--paths", "400", "--out", str(scen))[0] == 0
    code, out, _ = run(capsys, "optimize", "--config", str(cfg), "--scenarios", str(scen), "--moment-match")
    assert code == 0 and json.loads(out)["paths"] == 400
    code, _, err = run(capsys, "optimize", "--config", str(cfg), "--paths", "200", "--m0", "0.5")
    assert code == 1 and "infeasible" in err


def test_quadratic_demo(capsys, tmp_path):
    code, out, _ = run(capsys, "quadratic-demo", "--sizes", "10,100", "--replications", "5",
                       "--out", str(tmp_path / "q"))
    assert code == 0 and "mean_matched" in out
    assert (tmp_path / "q" / "quadratic.csv").exists() and (tmp_path / "q" / "manifest.json").exists()


def test_config_error_exit_1(capsys, tmp_path):
    cfg = small_config(tmp_path, colour="red")
    code, _, err = run(capsys, "stability", "--config", str(cfg), "--out", str(tmp_path / "x"))
    assert code == 1 and "colour" in err


@pytest.mark.parametrize("argv", [["frobnicate"], [], ["tree"], ["tree", "--branching", "2", "--bogus"]])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and "usage" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "esglab", "nope"], capture_output=True, text=True)
    assert proc.returncode == 2 and "usage" in proc.stderr
    proc = subprocess.run([sys.executable, "-m", "esglab", "tree", "--branching", "5,3,3,2", "--count-only"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "156"
