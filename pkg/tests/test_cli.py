import json

import pytest

from secest.cli import (
    default_experiment1_scenario,
    default_experiment2_scenario,
    load_scenario,
    main,
    parse_scenario,
    run_experiment1,
    run_experiment2,
    run_scenario,
)
from secest.errors import ScenarioError

SCALAR_SCENARIO = {
    "schema_version": 1,
    "model": {
        "explicit": {
            "A": [[1.0]],
            "C": [[1.0], [1.0], [1.0]],
            "sigma_w2": 1.0,
            "sigma_v2": 1.0,
        }
    },
    "attack": {"attacked": [], "strategy": {"type": "none"}},
    "detector": {"epsilon": 3.0, "eta": "auto", "N": 4000, "t1": 100},
    "k": 1,
    "search": "exhaustive",
    "repetitions": 1,
    "seed": 7,
}


def write_scenario(tmp_path, doc, name="scenario.json") -> str:
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def test_minimal_scalar_scenario_end_to_end(tmp_path):
    bundle = run_scenario(parse_scenario(SCALAR_SCENARIO))
    outcome = bundle["methods"]["exhaustive"]["outcome"]
    assert outcome["found"] is True
    assert len(outcome["subset"]) == 2
    assert bundle["methods"]["exhaustive"]["report"]["passed"] is True


def test_malformed_json_diagnostics(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"model": [,]}')
    with pytest.raises(ScenarioError) as err:
        load_scenario(str(path))
    assert "line" in str(err.value)


def test_scenario_validation_errors():
    with pytest.raises(ScenarioError):
        parse_scenario({"schema_version": 99, "model": {"random": {"n": 2, "p": 2}}})
    with pytest.raises(ScenarioError):
        parse_scenario({"model": {}})
    with pytest.raises(ScenarioError):
        parse_scenario(
            {
                "model": {"random": {"n": 2, "p": 2}},
                "attack": {"strategy": {"type": "martian"}},
            }
        )
    with pytest.raises(ScenarioError):
        parse_scenario({"model": {"random": {"n": 2, "p": 2}}, "search": "bogus"})


def test_cli_exit_codes(tmp_path):
    scenario = write_scenario(tmp_path, SCALAR_SCENARIO)
    out = tmp_path / "out"
    out.mkdir()
    assert main(["search", "--scenario", scenario, "--out", str(out), "--format", "json"]) == 0
    assert (out / "search.json").exists()

    broken = tmp_path / "broken.json"
    broken.write_text("{nope")
    assert main(["search", "--scenario", str(broken), "--out", str(out)]) == 2

    # analysis error: detector subset is unobservable (zero C row)
    bad = dict(SCALAR_SCENARIO)
    bad["model"] = {
        "explicit": {"A": [[1.0]], "C": [[0.0], [1.0], [1.0]], "sigma_w2": 1, "sigma_v2": 1}
    }
    bad["subset"] = [1]
    assert main(["detect", "--scenario", write_scenario(tmp_path, bad, "bad.json"), "--out", str(out)]) == 3

    # missing output directory is an I/O failure
    assert main(["search", "--scenario", scenario, "--out", str(tmp_path / "nope")]) == 4


def test_detect_and_obsv_subcommands(tmp_path):
    scenario = write_scenario(tmp_path, SCALAR_SCENARIO)
    assert main(["detect", "--scenario", scenario, "--out", str(tmp_path)]) == 0
    text = (tmp_path / "detect.csv").read_text()
    assert text.startswith("# secest detect schema_version=1\n")
    assert "flag" in text.splitlines()[1]

    assert main(["obsv", "--scenario", scenario, "--out", str(tmp_path), "--format", "json"]) == 0
    report = json.loads((tmp_path / "obsv.json").read_text())
    assert report["sparse_observability_index"] == 2


def test_decode_noiseless_subcommand(tmp_path):
    doc = dict(SCALAR_SCENARIO)
    doc["model"] = {
        "explicit": {
            "A": [[0.9, 0.0], [0.0, 0.5]],
            "C": [[1.0, 0.0], [1.0, 1.0], [1.0, -1.0], [2.0, 1.0]],
            "sigma_w2": 0.0,
            "sigma_v2": 0.0,
        }
    }
    doc["noiseless"] = {
        "x0": [1.0, -2.0],
        "k": 1,
        "corrupt": {"sensors": [2], "state": [3.0, 4.0]},
    }
    scenario = write_scenario(tmp_path, doc, "noiseless.json")
    assert main(
        ["decode-noiseless", "--scenario", scenario, "--out", str(tmp_path), "--format", "json"]
    ) == 0
    result = json.loads((tmp_path / "decode.json").read_text())
    assert result["corruption_detected"] is True
    assert result["state_error"] <= 1e-9
    assert result["declared_corrupted"] == [2]


def test_simulate_determinism(tmp_path):
    doc = dict(SCALAR_SCENARIO)
    doc["horizon"] = 50
    scenario = write_scenario(tmp_path, doc)
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    for out in (a, b):
        assert main(["simulate", "--scenario", scenario, "--out", str(out), "--seed", "3"]) == 0
    assert (a / "simulate.csv").read_bytes() == (b / "simulate.csv").read_bytes()


def test_search_no_timing_determinism(tmp_path):
    scenario = write_scenario(tmp_path, SCALAR_SCENARIO)
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    for out in (a, b):
        assert (
            main(
                [
                    "search",
                    "--scenario",
                    scenario,
                    "--out",
                    str(out),
                    "--format",
                    "json",
                    "--no-timing",
                ]
            )
            == 0
        )
    assert (a / "search.json").read_bytes() == (b / "search.json").read_bytes()


def test_experiment1_tiny_run():
    scenario = default_experiment1_scenario()
    scenario.repetitions = 2
    rows = run_experiment1(scenario)
    assert len(rows) == 2 * 10
    for rep_seed in {r["rep_seed"] for r in rows}:
        rep_rows = [r for r in rows if r["rep_seed"] == rep_seed]
        assert sum(r["passed"] for r in rep_rows) == 1
        passing = [r for r in rep_rows if r["passed"]][0]
        assert passing["is_clean_complement"] == 1


def test_experiment1_zero_threshold_fails_everything():
    scenario = default_experiment1_scenario()
    scenario.repetitions = 1
    scenario.detector = type(scenario.detector)(
        epsilon=scenario.detector.epsilon,
        N=scenario.detector.N,
        t1=scenario.detector.t1,
        mode=scenario.detector.mode,
        eta=1e-12,  # effectively zero: sample deviation is a.s. positive
        k=scenario.k,
    )
    rows = run_experiment1(scenario)
    assert all(r["passed"] == 0 for r in rows)


def test_experiment1_no_attack_all_pass():
    scenario = default_experiment1_scenario()
    scenario.repetitions = 2
    from secest import NoAttack

    scenario.attack_attacked = ()
    scenario.attack_strategy = NoAttack()
    rows = run_experiment1(scenario)
    assert all(r["passed"] == 1 for r in rows)


def test_experiment2_tiny_sweep_contract():
    scenario = default_experiment2_scenario()
    scenario.repetitions = 2
    scenario.raw["experiment2"]["p_values"] = [3, 4]
    rows = run_experiment2(scenario)
    assert [r["p"] for r in rows] == [3, 4]
    for row in rows:
        assert row["mean_checks_smt"] <= row["mean_checks_exhaustive"]
        assert row["found_rate_exhaustive"] == 1.0
        assert row["found_rate_smt"] == 1.0


def test_exp1_cli_determinism(tmp_path):
    doc = {
        "schema_version": 1,
        "model": {
            "random": {
                "n": 4,
                "p": 4,
                "spectral_radius": 0.85,
                "seed": 5,
                "sigma_w2": 0.01,
                "sigma_v2": 0.01,
            }
        },
        "attack": {"attacked": "random", "strategy": {"type": "seeded_random", "amplitude": 2.0}},
        "detector": {"epsilon": 1.0, "eta": 0.7, "N": 2000, "t1": 60},
        "k": 1,
        "repetitions": 2,
        "seed": 11,
    }
    scenario = write_scenario(tmp_path, doc)
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    for out in (a, b):
        assert main(["exp1", "--scenario", scenario, "--out", str(out)]) == 0
    assert (a / "exp1.csv").read_bytes() == (b / "exp1.csv").read_bytes()
