import csv
import io
import json
import math

import pytest

from hvlab.cli import EXIT_FAILS, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_STARVED, EXIT_USAGE, _angle, main
from hvlab.distribution import OutcomeDistribution


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_angle_parsing():
    assert _angle("0.5") == 0.5
    assert _angle("pi/8") == pytest.approx(math.pi / 8)
    assert _angle("3*pi/4") == pytest.approx(3 * math.pi / 4)
    assert _angle("-pi") == pytest.approx(-math.pi)


def test_simulate_epr_report(tmp_path, capsys):
    out = tmp_path / "r.json"
    dist = tmp_path / "d.json"
    code, _, _ = run(capsys, "simulate", "--circuit", "epr", "--theta1", "0", "--theta2", "0.3927", "--variant", "t_nl",
                     "--deltas", "1e-3", "--accepted", "100000", "--seed", "7", "--max-trials", str(10**15),
                     "--out", str(out), "--dist-out", str(dist))
    assert code == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["accepted"] == 100000 and rep["status"] == "ok"
    assert 0 < rep["acceptance_rate"] < 1e-6
    assert rep["config"]["theta2"] == 0.3927 and rep["schema_version"] == 1
    d = OutcomeDistribution.load(dist)
    assert d.marginal_same() == pytest.approx(math.cos(0.3927) ** 2, abs=0.02)


def test_simulate_is_byte_identical(tmp_path, capsys):
    args = ["simulate", "--circuit", "malus", "--theta2", "pi/3", "--accepted", "20000", "--seed", "3", "--workers", "2"]
    run(capsys, *args, "--out", str(tmp_path / "a.json"))
    run(capsys, *args, "--out", str(tmp_path / "b.json"))
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_simulate_default_budget_can_run_short(capsys):
    code, out, err = run(capsys, "simulate", "--circuit", "epr", "--theta2", "pi/8", "--accepted", "200", "--seed", "1")
    rep = json.loads(out)
    assert code == EXIT_OK
    assert rep["rejected"] + rep["accepted"] <= 200 * 10**7
    if rep["accepted"] < 200:
        assert rep["status"] == "short" and "budget" in err


def test_simulate_causal_never_rejects(capsys):
    code, out, _ = run(capsys, "simulate", "--variant", "t_c", "--circuit", "malus", "--theta2", "0", "--accepted", "1000")
    assert code == EXIT_OK
    assert json.loads(out)["acceptance_rate"] == 1.0


def test_simulate_limit_variant(capsys):
    code, out, _ = run(capsys, "simulate", "--variant", "t_es_limit", "--circuit", "malus", "--theta2", "pi/3")
    assert json.loads(out)["distribution"]["probs"] == pytest.approx({"0": 0.25, "1": 0.75})


def test_starvation_exit_code(capsys):
    code, out, _ = run(capsys, "simulate", "--circuit", "malus", "--theta2", "pi/3", "--accepted", "10", "--max-trials", "100")
    assert code == EXIT_STARVED
    assert json.loads(out)["status"] == "starved"


def test_usage_errors(capsys):
    code, _, err = run(capsys, "simulate", "--deltas", "0.1", "0.2")
    assert code == EXIT_USAGE and "deltas" in err
    code, _, err = run(capsys, "simulate", "--deltas", "0.1", "0", "0.1")
    assert code == EXIT_USAGE and "deltas" in err
    code, _, err = run(capsys, "simulate", "--accepted", "0")
    assert code == EXIT_USAGE and "accepted" in err
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--circuit", "nope"])
    assert info.value.code == EXIT_USAGE


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"circuit": "malus", "theta2": 0.5, "accepted": 500, "seed": 4}))
    code, out, _ = run(capsys, "simulate", "--config", str(cfg), "--seed", "9")
    rep = json.loads(out)
    assert code == EXIT_OK and rep["config"]["seed"] == 9 and rep["config"]["theta2"] == 0.5 and rep["accepted"] == 500
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(capsys, "simulate", "--config", str(cfg))
    assert code == EXIT_USAGE and "bogus" in err


def test_compare_verdicts(capsys):
    code, out, _ = run(capsys, "compare", "--variant", "t_nl", "--circuit", "malus", "--theta2", "pi/3",
                       "--deltas", "1e-3", "--epsilon", "0.05")
    assert code == EXIT_OK and json.loads(out)["verdict"] == "holds"
    code, out, _ = run(capsys, "compare", "--variant", "t_c", "--circuit", "epr", "--theta2", "pi/8", "--epsilon", "0.05")
    assert code == EXIT_FAILS and json.loads(out)["verdict"] == "fails"


def test_compare_injected_files(tmp_path, capsys):
    d = OutcomeDistribution(2, {"00": 0.5, "11": 0.5})
    d.save(tmp_path / "d.json")
    code, out, _ = run(capsys, "compare", "--dist-c", str(tmp_path / "d.json"), "--dist-d", str(tmp_path / "d.json"))
    errors = json.loads(out)["errors"]
    assert code == EXIT_OK and errors["additive"] == 0 and errors["multiplicative"] == 0


def test_compare_inconclusive(tmp_path, capsys):
    OutcomeDistribution.from_counts({"0": 27, "1": 73}).save(tmp_path / "c.json")
    OutcomeDistribution(1, {"0": 0.25, "1": 0.75}).save(tmp_path / "d.json")
    code, out, _ = run(capsys, "compare", "--dist-c", str(tmp_path / "c.json"), "--dist-d", str(tmp_path / "d.json"),
                       "--epsilon", "0.05")
    assert code == EXIT_INCONCLUSIVE and json.loads(out)["verdict"] == "inconclusive"


def test_sweep_csv(capsys):
    code, out, err = run(capsys, "sweep", "--circuit", "malus", "--theta2", "pi/3", "--schedule", "1e-1,3e-2,1e-2,3e-3,1e-3",
                         "--accepted", "20000", "--seed", "2")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 5 and all(r["status"] == "ok" for r in rows)
    assert [float(r["delta_phi_M"]) for r in rows] == [0.1, 0.03, 0.01, 0.003, 0.001]
    assert "slope" in err


def test_sweep_schedule_errors(tmp_path, capsys):
    code, _, err = run(capsys, "sweep", "--schedule", "")
    assert code == EXIT_USAGE and "schedule" in err
    code, _, err = run(capsys, "sweep", "--schedule", "1e-2,1e-1")
    assert code == EXIT_USAGE
    f = tmp_path / "s.json"
    f.write_text(json.dumps([[0.1, 0.1, 0.1], [0.01, 0.02, 0.05]]))
    code, out, _ = run(capsys, "sweep", "--schedule-file", str(f), "--accepted", "500")
    assert code == EXIT_OK and len(out.splitlines()) == 3


def test_check_lemma(tmp_path, capsys):
    d = OutcomeDistribution(2, {"00": 0.1, "01": 0.2, "10": 0.3, "11": 0.4})
    d.save(tmp_path / "d.json")
    code, out, _ = run(capsys, "check-lemma", str(tmp_path / "d.json"), str(tmp_path / "d.json"), "--epsilon", "0.1")
    res = json.loads(out)
    assert code == EXIT_OK and res["verdict"] == "holds"
    assert res["margin"] == pytest.approx(0.2222222222, abs=1e-9)
    OutcomeDistribution(2, {"00": 0.2, "01": 0.1, "10": 0.3, "11": 0.4}).save(tmp_path / "c.json")
    code, out, _ = run(capsys, "check-lemma", str(tmp_path / "d.json"), str(tmp_path / "c.json"), "--epsilon", "0.1")
    assert code == EXIT_INCONCLUSIVE and json.loads(out)["verdict"] == "premise_failed"


def test_check_lemma_condition_flag(tmp_path, capsys):
    OutcomeDistribution(2, {"00": 0.46, "10": 0.46, "01": 0.02, "11": 0.06}).save(tmp_path / "a.json")
    code, out, _ = run(capsys, "check-lemma", str(tmp_path / "a.json"), "--condition", "0", "1", "1")
    assert code == EXIT_OK
    assert abs(json.loads(out)["conditioned_probability"] - 0.75) < 1e-12


def test_check_lemma_errors(tmp_path, capsys):
    (tmp_path / "bad.json").write_text("{not json")
    code, _, err = run(capsys, "check-lemma", str(tmp_path / "bad.json"), str(tmp_path / "bad.json"), "--epsilon", "0.1")
    assert code == EXIT_USAGE
    big = OutcomeDistribution(13, {"0" * 13: 1.0})
    big.save(tmp_path / "big.json")
    code, _, err = run(capsys, "check-lemma", str(tmp_path / "big.json"), str(tmp_path / "big.json"), "--epsilon", "0.1")
    assert code == EXIT_USAGE and "12" in err


def test_scan_emits_csv(tmp_path, capsys):
    grid = tmp_path / "g.json"
    grid.write_text(json.dumps([[0, 0, 0, 0], [0, 0.3, 0, 0]]))
    code, out, _ = run(capsys, "scan", "--grid", str(grid), "--deltas", "0.01", "--accepted", "2000")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == EXIT_OK and len(rows) == 2
    assert float(rows[0]["additive_error"]) < 0.1


def test_counts_accept_scientific_notation(capsys):
    code, out, _ = run(capsys, "simulate", "--circuit", "malus", "--theta2", "0.4", "--accepted", "2e3", "--max-trials", "1e12")
    assert code == EXIT_OK and json.loads(out)["accepted"] == 2000
    with pytest.raises(SystemExit):
        main(["simulate", "--accepted", "2.5"])
