import json

import numpy as np
import pytest

from ds_consensus.cli import cli
from ds_consensus.dst import Frame
from ds_consensus.dynamics import Strategy
from ds_consensus.errors import EngineMismatch, InvalidScenario, ScenarioParseError
from ds_consensus.output import write_sweep_csv, write_sweep_json, write_sweep_svg
from ds_consensus.runner import run_simulation, run_sweep, sweep_grid
from ds_consensus.scenario import (SamplingSpec, list_assets, load_scenario,
                                   sample_boe, scenario_from_dict)


def test_assets_present():
    names = list_assets()
    for expected in ("fig3a-pmf", "fig4a-pmf", "fig5a-pmf", "fig6a-pmf",
                     "fig3a-dirichlet", "dirichlet-7", "table1-general",
                     "er100-noleader", "ds7-noleader"):
        assert expected in names


def test_fig3a_asset_contents():
    s = load_scenario("fig3a-pmf")
    assert s.graph.n == 7 and s.resolved_engine() == "pmf"
    pi1 = [a.boe.masses[1] for a in s.agents]
    assert pi1 == pytest.approx([0.80, 0.78, 0.76, 0.40, 0.80, 0.10, 0.20])
    for a in s.agents:
        assert a.boe.masses[2] == pytest.approx(a.boe.masses[4])
        assert a.alpha == 0.5 and a.strategy is Strategy.RECEPTIVE


def test_dirichlet_asset_contents():
    s = load_scenario("dirichlet-7")  # alias of fig3a-dirichlet
    theta = [a.boe.masses[7] for a in s.agents]
    assert theta == pytest.approx([0.1] * 7)
    pi1 = [a.boe.masses[1] for a in s.agents]
    assert pi1 == pytest.approx([0.70, 0.68, 0.66, 0.30, 0.70, 0.00, 0.10])
    pmf_twin = load_scenario("fig3a-pmf")
    for a, b in zip(s.agents, pmf_twin.agents):
        assert a.boe.masses[2] == pytest.approx(b.boe.masses[2])
        assert a.boe.masses[4] == pytest.approx(b.boe.masses[4])


def test_leader_assets():
    assert load_scenario("fig4a-pmf").leaders == (1,)
    assert load_scenario("fig5a-pmf").leaders == (1, 7)
    assert load_scenario("fig6a-pmf").leaders == (1, 7)
    assert load_scenario("fig3a-pmf").leaders == ()


def test_agent_count_mismatch_rejected(tmp_path):
    bad = {"frame_size": 3,
           "graph": {"n": 3, "edges": [[1, 2], [2, 3]]},
           "engine": "pmf",
           "agents": [{"boe": {"masses": {"1": 1.0}}}] * 2}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    with pytest.raises(InvalidScenario):
        load_scenario(str(path))


def test_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ScenarioParseError):
        load_scenario(str(path))
    with pytest.raises(ScenarioParseError):
        load_scenario("no-such-asset-name")


def test_engine_auto_selection(tmp_path):
    base = {"frame_size": 2, "graph": {"n": 2, "edges": [[1, 2]]}, "engine": "auto"}
    bayes = dict(base, agents=[{"boe": {"masses": {"1": 1.0}}},
                               {"boe": {"masses": {"2": 1.0}}}])
    s = scenario_from_dict(bayes, "t", tmp_path)
    assert s.resolved_engine() == "pmf"
    dirichlet = dict(base, agents=[{"boe": {"masses": {"1": 0.5, "*": 0.5}}},
                                   {"boe": {"masses": {"2": 1.0}}}])
    assert scenario_from_dict(dirichlet, "t", tmp_path).resolved_engine() == "dirichlet"
    general = {"frame_size": 3, "graph": {"n": 2, "edges": [[1, 2]]}, "engine": "auto",
               "agents": [{"boe": {"masses": {"1": 1.0}}},
                          {"boe": {"masses": {"2,3": 1.0}}}]}
    assert scenario_from_dict(general, "t", tmp_path).resolved_engine() == "general"


def test_engine_mismatch_raises():
    s = load_scenario("table1-general")
    s = type(s)(**{**s.__dict__, "engine": "pmf"})
    with pytest.raises(EngineMismatch):
        run_simulation(s, 0.3)


def test_sampling_deterministic():
    a = load_scenario("ds7-noleader")
    b = load_scenario("ds7-noleader")
    for x, y in zip(a.agents, b.agents):
        assert np.array_equal(x.boe.masses, y.boe.masses)
    c = load_scenario("ds7-noleader", seed=123)
    assert not np.array_equal(a.agents[0].boe.masses, c.agents[0].boe.masses)


def test_sample_boe_dirichlet_mean(rng):
    frame = Frame(3)
    spec = SamplingSpec((1.0, 1.0, 1.0), ("1", "2", "3"))
    draws = np.vstack([sample_boe(spec, frame, rng).masses for _ in range(10_000)])
    means = draws[:, [1, 2, 4]].mean(axis=0)
    assert means == pytest.approx([1 / 3] * 3, abs=0.01)


def test_sample_boe_general_targets(rng):
    frame = Frame(3)
    spec = SamplingSpec((4, 4, 4, 2, 2, 2, 1),
                        ("1", "2", "3", "1,2", "1,3", "2,3", "*"))
    b = sample_boe(spec, frame, rng)
    assert b.masses.sum() == pytest.approx(1.0)
    assert all(b.masses[m] > 0 for m in (1, 2, 4, 3, 5, 6, 7))


def test_sample_boe_single_target(rng):
    frame = Frame(2)
    b = sample_boe(SamplingSpec((2.0,), ("1,2",)), frame, rng)
    assert b.masses[frame.full_set] == pytest.approx(1.0)


def test_er_asset_materialization():
    s = load_scenario("er100-oneleader", seed=3)
    assert s.graph.n == 100
    assert len(s.leaders) == 1
    assert s.agents[s.leaders[0] - 1].strategy is Strategy.CAUTIOUS
    t = load_scenario("er100-oneleader", seed=3)
    assert s.graph.edges == t.graph.edges and s.leaders == t.leaders


def test_sweep_grid():
    assert sweep_grid(0.0, 1.0, 0.25) == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert sweep_grid(0.4, 0.5, 0.3) == (0.4,)
    with pytest.raises(ValueError):
        sweep_grid(0.6, 0.5, 0.1)
    with pytest.raises(ValueError):
        sweep_grid(0.0, 1.0, 0.0)


def test_run_simulation_fig3a_consensus_at_half():
    r = run_simulation(load_scenario("fig3a-pmf"), 0.5)
    assert r.report.consensus and r.converged


def test_run_simulation_fig4a_leader_value():
    r = run_simulation(load_scenario("fig4a-pmf"), 0.5)
    assert r.report.consensus
    assert np.max(np.abs(r.final_masses[:, 1] - 0.80)) < 1e-6


def test_run_simulation_fig5a_two_components():
    r = run_simulation(load_scenario("fig5a-pmf"), 0.35)
    assert r.report.clusters == ((1, 2, 3, 4, 5), (6, 7))


def test_sweep_outputs(tmp_path):
    s = load_scenario("fig3a-pmf")
    result = run_sweep(s, 0.4, 0.6, 0.05)
    csv = tmp_path / "sweep.csv"
    write_sweep_csv(result, csv)
    lines = csv.read_text().splitlines()
    assert lines[0] == ("epsilon,agent_id,proposition,limit_mass,"
                        "cluster_id,cluster_count,consensus,iterations")
    assert len(lines) == 1 + len(result.grid) * 7
    for line in lines[1:]:
        eps_text, _, _, mass_text = line.split(",")[:4]
        assert 0.0 <= float(mass_text) <= 1.0  # plain parseable floats
        assert "(" not in line
    consensus_rows = [l for l in lines[1:] if l.split(",")[6] == "true"]
    for row in consensus_rows:
        assert row.split(",")[5] == "1"
    svg = tmp_path / "sweep.svg"
    write_sweep_svg(result, svg)
    assert svg.read_text().startswith("<svg")
    write_sweep_json(result, tmp_path / "sweep.json")
    data = json.loads((tmp_path / "sweep.json").read_text())
    assert data["smallest_consensus_epsilon"] == 0.5


def test_sweep_deterministic_and_parallel_equal(tmp_path):
    s = load_scenario("fig5a-pmf")
    serial = run_sweep(s, 0.30, 0.40, 0.05, workers=1)
    parallel = run_sweep(s, 0.30, 0.40, 0.05, workers=2)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_sweep_csv(serial, a)
    write_sweep_csv(parallel, b)
    assert a.read_bytes() == b.read_bytes()


def test_empty_grid_csv(tmp_path):
    s = load_scenario("fig3a-pmf")
    result = run_sweep(s, 0.5, 0.5, 1.0)
    assert result.grid == (0.5,)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_run(capsys):
    code = cli(["run", "--scenario", "fig3a-pmf", "--epsilon", "0.5"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0 and out["consensus"] is True


def test_cli_run_trace(tmp_path, capsys):
    code = cli(["run", "--scenario", "fig3a-pmf", "--epsilon", "0.5",
                "--out", str(tmp_path), "--trace"])
    capsys.readouterr()
    assert code == 0
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "trajectory.csv").exists()
    edges = json.loads((tmp_path / "pruned_edges.json").read_text())
    # first iteration: exactly the two distant pairs are pruned
    first = {tuple(e) for e in edges[0]}
    base = {tuple(e) for e in edges[1]}
    assert base - first == {(3, 6), (6, 3), (5, 7), (7, 5)}


def test_cli_sweep_and_exit_codes(tmp_path, capsys):
    code = cli(["sweep", "--scenario", "fig3a-pmf", "--eps-min", "0.45",
                "--eps-max", "0.55", "--eps-step", "0.05", "--out", str(tmp_path)])
    capsys.readouterr()
    assert code == 0
    assert (tmp_path / "sweep.csv").exists()
    assert (tmp_path / "sweep.svg").exists()
    code = cli(["sweep", "--scenario", "fig3a-pmf", "--eps-min", "0.9",
                "--eps-max", "0.1", "--eps-step", "0.05", "--out", str(tmp_path)])
    capsys.readouterr()
    assert code == 1
    code = cli(["run", "--scenario", "definitely-missing", "--epsilon", "0.5"])
    capsys.readouterr()
    assert code == 1


def test_cli_usage_error_exits_one(capsys):
    code = cli(["sweep", "--scenario", "fig3a-pmf"])  # missing required args
    capsys.readouterr()
    assert code == 1


def test_cli_verify_fig4a(capsys):
    code = cli(["verify", "--scenario", "fig4a-pmf", "--epsilon", "0.5"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert out["theorem"]["hypotheses"]["satisfied"] is True
    assert out["theorem"]["match"] is True


def test_cli_verify_requires_leaders(capsys):
    code = cli(["verify", "--scenario", "fig3a-pmf", "--epsilon", "0.5"])
    capsys.readouterr()
    assert code == 1


def test_cli_gen_graph(tmp_path, capsys):
    target = tmp_path / "g.json"
    code = cli(["gen-graph", "--er", "30", "0.2", "7", "--out", str(target)])
    capsys.readouterr()
    assert code == 0
    data = json.loads(target.read_text())
    assert data["n"] == 30 and len(data["edges"]) > 0


def test_cli_assets_list(capsys):
    assert cli(["assets", "list"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert "fig3a-pmf" in out


def test_sweep_endpoint_sanity():
    # at eps 0 every distinct opinion is its own cluster; at eps 1 a connected
    # all-receptive network reaches consensus
    s = load_scenario("fig3a-pmf")
    low = run_simulation(s, 0.0)
    distinct = len({tuple(np.round(a.boe.masses, 12)) for a in s.agents})
    assert low.report.cluster_count == distinct
    high = run_simulation(s, 1.0)
    assert high.report.consensus


def test_assets_dir_override(tmp_path, monkeypatch):
    (tmp_path / "tiny.json").write_text(json.dumps({
        "frame_size": 2, "graph": {"n": 2, "edges": [[1, 2]]}, "engine": "pmf",
        "agents": [{"boe": {"masses": {"1": 1.0}}},
                   {"boe": {"masses": {"2": 1.0}}}]}))
    monkeypatch.setenv("DS_CONSENSUS_ASSETS", str(tmp_path))
    assert list_assets() == ["tiny"]
    s = load_scenario("tiny")
    assert s.graph.n == 2
