import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from pbdplan.domains.isrs import IsrsDomain, IsrsSpec
from pbdplan.domains.target_monitor import TargetMonitorDomain
from pbdplan.errors import ConfigError
from pbdplan.harness.cli import main
from pbdplan.harness.config import ExperimentConfig, experiment_from_mapping, load_experiment, load_scenario
from pbdplan.harness.experiment import (
    emit_plot_data,
    episodes_csv,
    read_plot_data,
    read_summary_json,
    run_experiment,
    summary_csv,
)
from pbdplan.harness.runner import run_episode
from pbdplan.harness.stats import SummaryRow, mean_and_se, separated
from pbdplan.planner.search import PlannerConfig

ROOT = Path(__file__).resolve().parents[1]
SCEN = ROOT / "scenarios"


def tiny_isrs(**kw):
    return IsrsDomain(IsrsSpec(3, ((0, 1),), ((2, 2),), **kw))


def small_experiment(planners, **kw):
    data = {
        "schema_version": 1,
        "scenario": {"schema_version": 1, "domain": "isrs", "params": {"n": 4, "rocks": [[1, 1], [2, 3]], "beacons": [[0, 0], [3, 3]]}},
        "scenarios": 2,
        "repetitions": 2,
        "seed": 5,
        "max_steps": 12,
        "planners": planners,
    }
    data.update(kw)
    return experiment_from_mapping(data)


# -- config ------------------------------------------------------------------------------


def test_shipped_scenarios_load():
    isrs = load_scenario(SCEN / "isrs_8_5.yaml")
    assert isinstance(isrs, IsrsDomain) and isrs.spec.k == 5 and isrs.spec.n == 8
    tm = load_scenario(SCEN / "tm_two_targets.yaml")
    assert isinstance(tm, TargetMonitorDomain) and tm.spec.n_targets == 2 and tm.max_steps == 200


@pytest.mark.parametrize("name", ["isrs_depth.yaml", "isrs_timing.yaml", "tm_compare.yaml", "smoke.yaml"])
def test_shipped_experiments_load(name):
    cfg = load_experiment(SCEN / name)
    assert cfg.planners and cfg.episodes >= 1


@pytest.mark.parametrize(
    "patch",
    [
        {"schema_version": 2},
        {"surprise": 1},
        {"planners": [{"kind": "NOPE"}]},
        {"planners": [{"kind": "PBD", "depth": 0}]},
        {"planners": []},
        {"repetitions": 0},
        {"scenario": {"schema_version": 1, "domain": "isrs", "params": {"n": 4, "rocks": [[9, 9]], "beacons": [[0, 0]]}}},
        {"scenario": {"schema_version": 1, "domain": "chess", "params": {}}},
        {"scenario": {"schema_version": 1, "domain": "isrs", "params": {"n": 4, "rocks": [[1, 1]], "beacons": [[0, 0]], "colour": 3}}},
        {"scenario": 42},
    ],
)
def test_bad_experiments_rejected(patch):
    patch = dict(patch)
    planners = patch.pop("planners", [{"kind": "PBD"}])
    with pytest.raises(ConfigError):
        small_experiment(planners, **patch)


def test_mad_rejected_on_target_monitor(tmp_path):
    p = tmp_path / "exp.yaml"
    p.write_text(yaml.safe_dump({"schema_version": 1, "scenario": str(SCEN / "tm_two_targets.yaml"), "planners": [{"kind": "MAD"}]}))
    with pytest.raises(ConfigError):
        load_experiment(p)


def test_unreadable_files(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("a: [1, 2\n")
    with pytest.raises(ConfigError):
        load_scenario(bad)
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_scenario(bad)


# -- statistics --------------------------------------------------------------------------------


def test_mean_and_standard_error():
    m, se = mean_and_se([1.0, 2.0, 3.0])
    assert m == 2.0 and se == pytest.approx(1 / math.sqrt(3))
    assert mean_and_se([4.5]) == (4.5, 0.0)
    with pytest.raises(ValueError):
        mean_and_se([])


def test_separation_rule():
    assert separated((10.0, 1.0), (5.0, 1.0))
    assert not separated((10.0, 2.0), (5.0, 2.0))


# -- episodes ------------------------------------------------------------------------------------


def test_episode_is_deterministic():
    dom = load_scenario(SCEN / "isrs_8_5.yaml")
    cfg = PlannerConfig("PBD", gamma=dom.gamma, depth=2, samples=5)
    a = run_episode(dom, cfg, 123, scenario=4, max_steps=25)
    b = run_episode(dom, cfg, 123, scenario=4, max_steps=25)
    assert a.discounted_return == b.discounted_return
    assert [(s.action, s.reward) for s in a.steps] == [(s.action, s.reward) for s in b.steps]


def test_zero_step_cap():
    dom = tiny_isrs()
    res = run_episode(dom, PlannerConfig("PBD"), 0, max_steps=0)
    assert res.steps == [] and res.discounted_return == 0.0


def test_greedy_hand_trace_on_three_by_three():
    # agent starts on the rock; with prior 0.9 sampling is the only positive one-step value,
    # afterwards every action is worth 0 and the first candidate (N) is taken
    dom = tiny_isrs(prior_mean=0.9, prior_var=0.05)
    for scenario in range(4):
        good = dom.initial_state(scenario).values[0] == 1
        res = run_episode(dom, PlannerConfig("GREEDY", gamma=0.99), 0, scenario=scenario, max_steps=6)
        assert [s.action for s in res.steps] == ["SAMPLE", "N", "N", "N", "N", "N"]
        assert res.discounted_return == (10.0 if good else -10.0)


def test_episode_return_matches_log_for_each_planner():
    dom = load_scenario(SCEN / "tm_two_targets.yaml")
    for kind in ("PBD", "NBO", "GREEDY", "WT_SINGLE", "WT_MACRO"):
        res = run_episode(dom, PlannerConfig(kind, gamma=dom.gamma, depth=2, samples=3), 9, max_steps=8)
        res.check()
        assert len(res.steps) == 8


def test_step_log_reaches_callback():
    seen = []
    run_episode(tiny_isrs(), PlannerConfig("PBD", depth=1), 0, max_steps=3, log=lambda t, *rest: seen.append(t))
    assert seen == [0, 1, 2]


# -- experiments and files -----------------------------------------------------------------------


def test_single_episode_summary():
    cfg = small_experiment([{"kind": "PBD", "depth": 1, "samples": 3}], scenarios=1, repetitions=1)
    rows, results = run_experiment(cfg)
    assert rows[0].mean_return == results[0].discounted_return and rows[0].std_error == 0.0


def test_identical_planners_give_identical_rows():
    cfg = small_experiment([{"kind": "PBD", "depth": 2, "samples": 3}, {"kind": "PBD", "depth": 2, "samples": 3}])
    rows, _ = run_experiment(cfg)
    assert rows[0].mean_return == rows[1].mean_return and rows[0].std_error == rows[1].std_error


def test_outputs_are_byte_identical_across_runs(tmp_path):
    planners = [{"kind": "PBD", "depth": 2, "samples": 3}, {"kind": "MAD", "depth": 1, "samples": 3}, {"kind": "GREEDY"}]
    for d in ("a", "b"):
        run_experiment(small_experiment(planners), tmp_path / d)
    for name in ("episodes.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rows = read_summary_json(tmp_path / "a" / "summary.json")
    assert [r.planner for r in rows] == ["PBD-d2s3", "MAD-d1s3", "GREEDY"]


def test_summary_and_episode_csv_shapes():
    cfg = small_experiment([{"kind": "PBD", "depth": 1, "samples": 2}])
    rows, results = run_experiment(cfg)
    assert episodes_csv(results).count("\n") == 1 + 4
    assert summary_csv(rows).splitlines()[0] == "planner,depth,samples,episodes,mean_return,std_error"


def test_plot_data_empty_is_header_only(tmp_path):
    p = emit_plot_data([], tmp_path / "plot.csv")
    assert p.read_text() == "planner,depth,samples,episodes,mean_return,std_error,mean_decision_time\n"
    assert read_plot_data(p) == []


def test_plot_data_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    rows = [
        SummaryRow(f"PBD-d{d}s10", d, 10, 200, float(rng.normal()) * 1e3, float(rng.random()), float(rng.random()) / 7)
        for d in range(1, 5)
    ]
    rows.append(SummaryRow("NBO-d1s1", 1, 1, 3, 1 / 3, 0.1 + 0.2, 1e-300))
    p = emit_plot_data(rows, tmp_path / "plot.csv")
    assert p.read_text().count("\n") == 6
    assert read_plot_data(p) == rows


# -- command line -------------------------------------------------------------------------------------


def test_cli_bound_prints_worked_example(capsys):
    assert main(["bound"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(108.73116368128879886, abs=1e-9)


def test_cli_bound_rejects_bad_delta(capsys):
    assert main(["bound", "--delta", "1.5"]) == 2
    assert "delta" in capsys.readouterr().err


def test_cli_run_and_plotdata(tmp_path, capsys):
    exp = tmp_path / "exp.yaml"
    exp.write_text(
        yaml.safe_dump(
            {
                "schema_version": 1,
                "scenario": str(SCEN / "isrs_8_5.yaml"),
                "scenarios": 1,
                "repetitions": 2,
                "max_steps": 6,
                "planners": [{"kind": "PBD", "depth": 1, "samples": 2}],
            }
        )
    )
    out = tmp_path / "out"
    assert main(["run", str(exp), "--out", str(out), "--seed", "3", "--depth", "2"]) == 0
    text = capsys.readouterr().out
    assert "PBD-d2s2" in text
    assert (out / "summary.csv").exists() and (out / "episodes.csv").exists()
    assert main(["plotdata", str(out)]) == 0
    assert read_plot_data(out / "plot.csv")[0].planner == "PBD-d2s2"
    assert main(["run", str(exp), "--out", str(out), "--planner", "GREEDY"]) == 0


def test_cli_episode(capsys):
    assert main(["episode", str(SCEN / "isrs_8_5.yaml"), "--planner", "MAD", "--depth", "1", "--samples", "2", "--max-steps", "4"]) == 0
    out = capsys.readouterr().out
    assert out.count("t=") == 4 and "discounted return" in out


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "/nonexistent/exp.yaml"],
        ["episode", "/nonexistent/scenario.yaml"],
        ["episode", str(SCEN / "tm_two_targets.yaml"), "--planner", "MAD"],
        ["episode", str(SCEN / "isrs_8_5.yaml"), "--depth", "0"],
        ["plotdata", "/nonexistent/summary.json"],
    ],
)
def test_cli_reports_config_errors(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("error:")


def test_experiment_config_validation():
    dom = tiny_isrs()
    with pytest.raises(ConfigError):
        ExperimentConfig(dom, [PlannerConfig("PBD")], scenarios=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(load_scenario(SCEN / "isrs_8_5.yaml"), [PlannerConfig("WT_SINGLE")])
