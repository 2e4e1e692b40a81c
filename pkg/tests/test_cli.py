"""End-to-end command-line coverage on the tiny corpus."""

import json

import pytest

from ssoa.cli import main
from ssoa.exact import brute_force
from ssoa.instance import GeneratorConfig, SourcingMode, generate_instance, load_instance

from .helpers import build_instance


TINY_CONFIG = {
    "n_parts_blue": 2, "n_parts_llv": 1, "n_forgings_blue": 1, "n_forgings_llv": 1,
    "tier1_count": 2, "tier2_count": 2, "must_make_per_kind": 1,
    "penalty_threshold": 0.0, "seed": 5,
}


@pytest.fixture()
def inst_file(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(TINY_CONFIG))
    out = tmp_path / "inst.json"
    assert main(["gen", "--config", str(config_path), "--out", str(out)]) == 0
    return out


def test_gen_then_validate(inst_file):
    assert main(["validate", "--in", str(inst_file)]) == 0


def test_gen_deterministic_with_seed(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(TINY_CONFIG))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["gen", "--config", str(config_path), "--seed", "7", "--out", str(a)])
    main(["gen", "--config", str(config_path), "--seed", "7", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_validate_reports_violations(tmp_path, inst_file, capsys):
    doc = json.loads(inst_file.read_text())
    doc["penalty"]["factor"] = [0.5, 0.5]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", "--in", str(bad)]) == 1
    assert "penalty_factor" in capsys.readouterr().out


def test_build_exports_lp_and_mps(tmp_path, inst_file):
    lp_out = tmp_path / "model.lp"
    mps_out = tmp_path / "model.mps"
    assert main(["build", "--in", str(inst_file), "--model", "machinist",
                 "--export", "lp", "--out", str(lp_out)]) == 0
    assert main(["build", "--in", str(inst_file), "--model", "machinist",
                 "--export", "mps", "--out", str(mps_out)]) == 0
    assert lp_out.read_text().startswith("\\ kind=machinist")
    assert mps_out.read_text().startswith("NAME machinist")


def test_build_forger_solves_phase_one(tmp_path, inst_file):
    out = tmp_path / "forger.lp"
    assert main(["build", "--in", str(inst_file), "--model", "forger",
                 "--out", str(out)]) == 0
    assert "y_" in out.read_text()


def test_build_mode_override(tmp_path, inst_file):
    out = tmp_path / "single.lp"
    assert main(["build", "--in", str(inst_file), "--model", "machinist",
                 "--mode", "single", "--out", str(out)]) == 0
    text = out.read_text()
    assert "_s2" not in text  # one proportion only


def test_solve_matches_brute_force(tmp_path, inst_file):
    report_path = tmp_path / "report.json"
    trace_path = tmp_path / "trace.csv"
    assert main(["solve", "--in", str(inst_file), "--model", "machinist",
                 "--out", str(report_path), "--trace", str(trace_path)]) == 0
    report = json.loads(report_path.read_text())
    inst = load_instance(inst_file.read_text())
    oracle = brute_force(inst, "machinist")
    assert report["status"] == "Optimal"
    assert report["objective"] == pytest.approx(oracle.objective, rel=1e-6)
    assert trace_path.read_text().startswith("time,incumbent")


def test_heur_runs_and_writes_trace(tmp_path, inst_file):
    report_path = tmp_path / "ga.json"
    trace_path = tmp_path / "ga.csv"
    params = tmp_path / "params.json"
    params.write_text(json.dumps({"population": 10, "generations": 5}))
    assert main(["heur", "--in", str(inst_file), "--algo", "ga",
                 "--params", str(params), "--seed", "3", "--model", "machinist",
                 "--out", str(report_path), "--trace", str(trace_path)]) == 0
    assert trace_path.read_text().startswith("iter,best,relative")
    report = json.loads(report_path.read_text())
    assert report["status"] == "Feasible"


def test_sweep_sourcing(tmp_path, inst_file):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--in", str(inst_file), "--type", "sourcing",
                 "--values", "50:50,70:30,100:0", "--model", "machinist",
                 "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("first_proportion_percent")
    assert len(lines) == 4


def test_sweep_penalty(tmp_path, inst_file):
    out = tmp_path / "pen.csv"
    assert main(["sweep", "--in", str(inst_file), "--type", "penalty-factor",
                 "--values", "1,2,5", "--model", "forger", "--supplier", "0",
                 "--out", str(out)]) == 0
    assert len(out.read_text().strip().splitlines()) == 4


def test_compare(tmp_path, inst_file):
    out = tmp_path / "compare.csv"
    params = tmp_path / "hp.json"
    params.write_text(json.dumps({
        "ga": {"population": 8, "generations": 5},
        "pso": {"swarm": 6, "iterations": 5},
        "aco": {"ants": 6, "iterations": 5},
    }))
    assert main(["compare", "--in", str(inst_file), "--solvers", "exact,ga,pso,aco",
                 "--model", "machinist", "--seeds", "0,1", "--params", str(params),
                 "--out", str(out)]) == 0
    text = out.read_text()
    assert "exact" in text and "aco" in text


def test_unknown_flag_exits_2(inst_file):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--in", str(inst_file), "--warp-speed"])
    assert exc.value.code == 2


def test_missing_input_gives_error_doc(tmp_path, capsys):
    assert main(["validate", "--in", str(tmp_path / "nope.json")]) == 1
    err = capsys.readouterr().err
    doc = json.loads(err)
    assert doc["error"]["type"] == "FileNotFound"
