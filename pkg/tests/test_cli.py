import json

import pytest

from occupancy import cli, zoo
from occupancy.model import save_model


@pytest.fixture()
def model_dir(tmp_path):
    save_model(zoo.constant_pair(1, 0.3, 0.8), tmp_path / "single.json")
    save_model(zoo.interacting_pair(), tmp_path / "pair.json")
    save_model(zoo.non_monotone_pair(), tmp_path / "broken.json")
    save_model(zoo.contact_ring(3, 0.35, 1.0), tmp_path / "ring.json")
    save_model(zoo.random_certified_model(25, seed=0), tmp_path / "big.json")
    return tmp_path


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


def test_check_passes_certified_model(model_dir, capsys):
    code = run_cli("check", "--model", model_dir / "pair.json")
    out = capsys.readouterr().out
    assert code == cli.EXIT_PASS
    assert "overall: pass" in out
    assert "colonisation-increasing" in out


def test_check_fails_non_monotone_model(model_dir, capsys):
    code = run_cli("check", "--model", model_dir / "broken.json")
    out = capsys.readouterr().out
    assert code == cli.EXIT_FAIL
    assert "overall: fail" in out


def test_check_writes_json_report(model_dir, capsys):
    out_path = model_dir / "report.json"
    code = run_cli("check", "--model", model_dir / "ring.json",
                   "--out", out_path)
    capsys.readouterr()
    assert code == cli.EXIT_PASS
    doc = json.loads(out_path.read_text())
    names = {f["hypothesis"] for f in doc["findings"]}
    assert "birth-increasing" in names and "death-convex" in names


def test_malformed_json_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 1,\n  "colonisation": [}')
    code = run_cli("check", "--model", bad)
    err = capsys.readouterr().err
    assert code == cli.EXIT_USAGE
    assert "line 2" in err


def test_unknown_field_is_usage_error(tmp_path, capsys):
    doc = {"n": 1, "colonisation": [{"family": "constant", "params": {"c": 0.3}}],
           "survival": [{"family": "constant", "params": {"c": 0.8}}],
           "bogus": 1}
    path = tmp_path / "extra.json"
    path.write_text(json.dumps(doc))
    code = run_cli("check", "--model", path)
    err = capsys.readouterr().err
    assert code == cli.EXIT_USAGE
    assert "bogus" in err


def test_missing_file_is_usage_error(tmp_path, capsys):
    code = run_cli("check", "--model", tmp_path / "absent.json")
    capsys.readouterr()
    assert code == cli.EXIT_USAGE


def test_run_exact_two_steps(model_dir, capsys):
    code = run_cli("run", "--model", model_dir / "single.json",
                   "--mode", "exact", "--t", "2")
    out = capsys.readouterr().out
    assert code == cli.EXIT_PASS
    lines = out.strip().splitlines()
    assert lines[0] == "step,site_0"
    assert lines[1].startswith("0,")
    step, value = lines[-1].split(",")
    assert step == "2"
    assert float(value) == pytest.approx(0.45, abs=1e-15)


def test_run_meanfield_equals_indep_output(model_dir, capsys):
    run_cli("run", "--model", model_dir / "pair.json",
            "--mode", "meanfield", "--t", "6", "--x0", "0b01")
    field = capsys.readouterr().out
    run_cli("run", "--model", model_dir / "pair.json",
            "--mode", "indep", "--t", "6", "--x0", "1")
    sur = capsys.readouterr().out
    assert field == sur  # surrogate marginals are the deterministic rows


def test_run_mc_is_reproducible(model_dir, capsys):
    args = ("run", "--model", model_dir / "pair.json", "--mode", "mc",
            "--t", "3", "--reps", "2000", "--seed", "7")
    run_cli(*args)
    first = capsys.readouterr().out
    run_cli(*args)
    second = capsys.readouterr().out
    run_cli(*args, "--workers", "8")
    eight = capsys.readouterr().out
    assert first == second == eight
    assert first.splitlines()[0] == "step,site,mean,se"


def test_run_writes_file(model_dir, capsys):
    out_path = model_dir / "traj.csv"
    code = run_cli("run", "--model", model_dir / "single.json",
                   "--mode", "exact", "--t", "1", "--out", out_path)
    capsys.readouterr()
    assert code == cli.EXIT_PASS
    assert out_path.read_text().startswith("step,site_0\n")


def test_run_spin_model_needs_meanfield_mode(model_dir, capsys):
    code = run_cli("run", "--model", model_dir / "ring.json",
                   "--mode", "exact", "--t", "1")
    capsys.readouterr()
    assert code == cli.EXIT_USAGE
    code = run_cli("run", "--model", model_dir / "ring.json",
                   "--mode", "meanfield", "--t", "0.5", "--h", "0.1")
    out = capsys.readouterr().out
    assert code == cli.EXIT_PASS
    assert out.splitlines()[0] == "step,site_0,site_1,site_2"


def test_bad_state_word_is_usage_error(model_dir, capsys):
    code = run_cli("run", "--model", model_dir / "single.json",
                   "--mode", "exact", "--t", "1", "--x0", "9")
    err = capsys.readouterr().err
    assert code == cli.EXIT_USAGE
    assert "out of range" in err


def test_verify_marginal_suite(model_dir, capsys):
    out_path = model_dir / "thm1.json"
    code = run_cli("verify", "--model", model_dir / "pair.json",
                   "--theorem", "thm1", "--t", "8", "--out", out_path)
    out = capsys.readouterr().out
    assert code == cli.EXIT_PASS
    assert "marginal-bound" in out and "positive-correlations" in out
    doc = json.loads(out_path.read_text())
    assert doc["theorem"] == "thm1"
    assert {r["check"] for r in doc["reports"]} == {
        "marginal-bound", "positive-correlations"}
    assert all(r["verdict"] == "pass" for r in doc["reports"])
    assert doc["hypotheses"]["verdict"] == "pass"


def test_verify_path_suite(model_dir, capsys):
    code = run_cli("verify", "--model", model_dir / "pair.json",
                   "--theorem", "thm3", "--t", "4", "--m", "3")
    out = capsys.readouterr().out
    assert code == cli.EXIT_PASS
    assert "path-orthant" in out and "single-time-orthant" in out


def test_verify_spin_suite(model_dir, capsys):
    code = run_cli("verify", "--model", model_dir / "ring.json",
                   "--theorem", "thm2", "--t", "1.0", "--grid-points", "5",
                   "--x0", "1")
    out = capsys.readouterr().out
    assert code == cli.EXIT_PASS
    assert "spin-marginal-bound" in out


def test_verify_convergence_suite(model_dir, capsys):
    out_path = model_dir / "thm4.json"
    code = run_cli("verify", "--model", model_dir / "ring.json",
                   "--theorem", "thm4", "--t", "1.0", "--x0", "1",
                   "--delta-grid", "0.0625,0.03125", "--out", out_path)
    capsys.readouterr()
    assert code == cli.EXIT_PASS
    doc = json.loads(out_path.read_text())
    assert doc["written"] == [str(out_path) + ".csv"]
    csv_text = (model_dir / "thm4.json.csv").read_text()
    assert csv_text.startswith("delta,metric,value\n")
    assert doc["reports"][0]["check"] == "discretisation-convergence"
    assert doc["reports"][0]["verdict"] == "pass"


def test_verify_uncertified_model_is_inconclusive(model_dir, capsys):
    code = run_cli("verify", "--model", model_dir / "broken.json",
                   "--theorem", "thm3", "--t", "3", "--m", "2")
    out = capsys.readouterr().out
    assert code == cli.EXIT_INCONCLUSIVE
    assert "informative" in out


def test_verify_theorem_model_kind_mismatch(model_dir, capsys):
    code = run_cli("verify", "--model", model_dir / "ring.json",
                   "--theorem", "thm1")
    capsys.readouterr()
    assert code == cli.EXIT_USAGE
    code = run_cli("verify", "--model", model_dir / "pair.json",
                   "--theorem", "thm2")
    capsys.readouterr()
    assert code == cli.EXIT_USAGE


def test_capacity_exit_code(model_dir, capsys):
    code = run_cli("run", "--model", model_dir / "big.json",
                   "--mode", "exact", "--t", "1")
    err = capsys.readouterr().err
    assert code == cli.EXIT_CAPACITY
    assert "25" in err


def test_bridge_writes_table(model_dir, capsys):
    out_path = model_dir / "table.csv"
    code = run_cli("bridge", "--model", model_dir / "ring.json",
                   "--t", "0.5", "--x0", "1",
                   "--delta-grid", "0.0625,0.03125", "--out", out_path)
    capsys.readouterr()
    assert code == cli.EXIT_PASS
    lines = out_path.read_text().strip().splitlines()
    assert lines[0] == "delta,metric,value"
    assert len(lines) == 9


def test_bridge_rejects_occupancy_model(model_dir, capsys):
    code = run_cli("bridge", "--model", model_dir / "pair.json")
    capsys.readouterr()
    assert code == cli.EXIT_USAGE


def test_bad_delta_grid(model_dir, capsys):
    code = run_cli("bridge", "--model", model_dir / "ring.json",
                   "--delta-grid", "0.1,-0.2")
    capsys.readouterr()
    assert code == cli.EXIT_USAGE
