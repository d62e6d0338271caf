import json
from pathlib import Path

import pytest
from ftagg.cli import EXIT_INVALID, EXIT_IO, EXIT_OK, main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_report(capsys, *argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == EXIT_OK, err
    return json.loads(out)


def test_run_golden_ring4(capsys):
    report = run_report(capsys, "run", str(SCENARIOS / "ring4.json"))
    assert report["aggregate"] == 30
    assert report["active"] == [1, 3]
    assert report["quorum_met"] is True
    assert report["steps"] == 9
    assert report["elapsed_ticks"] == 15
    assert report["proof_cases"] == {"C1": 1, "C2": 1, "C3_1": 0, "C3_2": 0}
    assert report["messages"]["total"] == 9
    assert report["messages"]["failed"] == {"initial_data": 2}
    assert report["backend"] == {"type": "masking", "k_bits": 64}
    assert len(report["scenario_digest"]) == 64


def test_run_below_quorum_still_exits_zero(capsys):
    report = run_report(capsys, "run", str(SCENARIOS / "low_turnout2.json"))
    assert report["aggregate"] is None
    assert report["quorum_met"] is False


def test_backend_override(capsys):
    base = run_report(capsys, "run", str(SCENARIOS / "ring4.json"))
    swapped = run_report(
        capsys, "run", str(SCENARIOS / "ring4.json"), "--backend", "paillier"
    )
    assert swapped["backend"]["type"] == "paillier"
    assert swapped["aggregate"] == base["aggregate"]
    assert swapped["active"] == base["active"]
    assert swapped["scenario_digest"] != base["scenario_digest"]


def test_seed_override_changes_digest_not_sum(capsys):
    base = run_report(capsys, "run", str(SCENARIOS / "ring4.json"))
    reseeded = run_report(
        capsys, "run", str(SCENARIOS / "ring4.json"), "--seed", "777"
    )
    assert reseeded["scenario_digest"] != base["scenario_digest"]
    assert reseeded["aggregate"] == base["aggregate"]


def test_trace_out_writes_jsonl(capsys, tmp_path):
    out_path = tmp_path / "trace.jsonl"
    report = run_report(
        capsys, "run", str(SCENARIOS / "ring5.json"), "--trace-out", str(out_path)
    )
    lines = out_path.read_text().splitlines()
    assert len(lines) == report["messages"]["total"]
    first = json.loads(lines[0])
    assert set(first) == {"tick", "from", "to", "kind", "delivered"}
    assert first["tick"] == 1


def test_trace_out_into_missing_directory_is_io_error(capsys, tmp_path):
    code, out, err = run_cli(
        capsys,
        "run",
        str(SCENARIOS / "ring4.json"),
        "--trace-out",
        str(tmp_path / "nope" / "trace.jsonl"),
    )
    assert code == EXIT_IO
    assert "error" in err


def test_pretty_flag_indents(capsys):
    code, out, _ = run_cli(capsys, "run", str(SCENARIOS / "ring4.json"), "--pretty")
    assert code == EXIT_OK
    assert out.startswith("{\n")


def test_run_is_deterministic(capsys):
    a = run_cli(capsys, "run", str(SCENARIOS / "fullmesh6.json"))
    b = run_cli(capsys, "run", str(SCENARIOS / "fullmesh6.json"))
    assert a == b


def test_baseline_agrees_on_clean_mesh(capsys):
    report = run_report(capsys, "baseline", str(SCENARIOS / "fullmesh6.json"))
    assert report["baseline"]["status"] == "completed"
    assert report["aggregates_equal"] is True
    assert report["protocol"]["aggregate"] == report["baseline"]["aggregate"]


def test_baseline_detects_reporting_gap(capsys):
    report = run_report(capsys, "baseline", str(SCENARIOS / "dc_gap3.json"))
    assert report["baseline"]["status"] == "detected_inconsistency"
    assert report["baseline"]["aggregate"] is None
    assert report["baseline"]["share_check"] is False
    assert report["protocol"]["aggregate"] == 18
    assert report["aggregates_equal"] is False


def test_baseline_trace_out(capsys, tmp_path):
    out_path = tmp_path / "bl.jsonl"
    run_report(
        capsys, "baseline", str(SCENARIOS / "ring4.json"), "--trace-out", str(out_path)
    )
    kinds = {json.loads(line)["kind"] for line in out_path.read_text().splitlines()}
    assert "share_handoff" in kinds


def test_game_subcommand(capsys, tmp_path):
    config = tmp_path / "game.json"
    config.write_text(
        json.dumps(
            {
                "family": "masking-colluding-meters",
                "strategy": "coin-flip",
                "trials": 60,
                "seed": 4,
                "n_sm": 4,
            }
        )
    )
    report = run_report(capsys, "game", str(config))
    assert report["trials"] == 60
    assert report["wins"] + report["aborts"] <= 60
    assert 0.0 <= report["ci_low"] <= report["rate"] <= report["ci_high"] <= 1.0
    assert report["strategy"] == "coin-flip"


def test_game_breach_config_wins_every_trial(capsys):
    report = run_report(capsys, "game", str(SCENARIOS / "game_breach.json"))
    assert report["rate"] == 1.0
    assert report["aborts"] == 0


@pytest.mark.parametrize(
    "config",
    [
        {"family": "no-such-family", "trials": 5, "seed": 1},
        {"family": "masking-breach", "strategy": "psychic", "trials": 5, "seed": 1},
        {"family": "masking-breach", "seed": 1},
        {"family": "masking-breach", "trials": "many", "seed": 1},
        {"trials": 5, "seed": 1},
        ["not", "an", "object"],
    ],
)
def test_bad_game_configs_exit_two(capsys, tmp_path, config):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(config))
    code, _, err = run_cli(capsys, "game", str(path))
    assert code == EXIT_INVALID
    assert "error" in err


def test_unparseable_json_exits_two(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code, _, err = run_cli(capsys, "run", str(path))
    assert code == EXIT_INVALID
    assert "invalid JSON" in err


def test_invalid_scenario_exits_two(capsys, tmp_path):
    scenario = json.loads((SCENARIOS / "ring4.json").read_text())
    scenario["n_min"] = 0
    path = tmp_path / "bad_scenario.json"
    path.write_text(json.dumps(scenario))
    code, _, err = run_cli(capsys, "run", str(path))
    assert code == EXIT_INVALID


def test_missing_file_exits_three(capsys, tmp_path):
    code, _, err = run_cli(capsys, "run", str(tmp_path / "absent.json"))
    assert code == EXIT_IO
