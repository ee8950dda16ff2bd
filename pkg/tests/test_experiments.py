import json

import numpy as np
import pytest
from _instances import all_joint_states, random_instance

from cltl_synth.cli import main
from cltl_synth.experiments import (
    ABSTRACTION_FLAG, SWEEP_FIELDS, ConfigError, RunConfig, rows_to_csv, run_synthesis, sweep_agents,
)

SMALL = {"n_states": 20, "n_actions": 5}


def small(**kw):
    base = dict(case="mu1", agents=3, horizon=4, abstraction=SMALL,
                initial_states=[[-3.0, 3.0, 0.0], [0.0, 0.5, 1.0]])
    base.update(kw)
    return RunConfig(**base)


class TestConfig:
    def test_case_presets(self):
        cfg = RunConfig(case="mu3", agents=3)
        assert cfg.formula.count("X") == 15
        assert cfg.labels == {"p1": [-5.0, 5.0]}

    @pytest.mark.parametrize(
        "kw",
        [dict(agents=0), dict(horizon=0), dict(prune_product=1.5), dict(case="mu9"),
         dict(abstraction={"cells": 3}), dict(case=None, formula="[p1,1]")],
    )
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            small(**kw)

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"case": "mu1", "agnets": 3})

    def test_yaml_with_overrides(self, tmp_path):
        p = tmp_path / "c.yaml"
        p.write_text("case: mu2\nagents: 3\nhorizon: 7\n")
        cfg = RunConfig.load(p, horizon=2, seed=None)
        assert (cfg.agents, cfg.horizon, cfg.seed) == (3, 2, 0)

    def test_x0_outside_domain(self):
        with pytest.raises(ConfigError):
            run_synthesis(small(initial_states=[[0.0, 0.0, 50.0]]))


def test_unsatisfiable_threshold_gives_zero():
    rep = run_synthesis(small(formula="F [p1, 4]"))
    assert [r["bound"] for r in rep["results"]] == [0.0, 0.0]


def test_floor_rounding_logged():
    rep = run_synthesis(small())
    assert "[p1,1]" in rep["notes"][0] and "floor" in rep["notes"][0]


def test_deterministic_and_rerunnable(tmp_path):
    cfg = small(runs=2000, monolithic=True, out=str(tmp_path / "r"))
    a = run_synthesis(cfg)
    b = run_synthesis(RunConfig.from_dict(json.loads((tmp_path / "r.json").read_text())["config"]))
    assert json.dumps(a["results"]) == json.dumps(b["results"])
    assert a["strategy"] == b["strategy"]
    assert (tmp_path / "r.txt").read_text().startswith("formula")


def test_report_contents():
    rep = run_synthesis(small(monolithic=True, compare_initial=True, reference_bounds=[0.0, 0.0]))
    for r in rep["results"]:
        assert r["bound"] == pytest.approx(r["monolithic"], abs=1e-6)
        assert r["bound"] >= r["initial_strategy_bound"] - 1e-12
    assert rep["tree"]["certify"] and rep["tree"]["search"]
    assert rep["tool"]["version"]
    assert sum(c["cubes"] for c in rep["cubes"]) > 0
    if any(not r["within_reference_tolerance"] for r in rep["results"]):
        assert rep["flags"] == [ABSTRACTION_FLAG]


def test_keep_better_falls_back(tmp_path):
    # instance on which the greedy update lowers the certified bound
    inst = random_instance(np.random.default_rng(20))
    inst.mdp.save(tmp_path / "m.json")
    xs = all_joint_states(inst.mdp.n_states, 2)
    cfg = RunConfig(formula=inst.formula, agents=2, horizon=5, mdp_file=str(tmp_path / "m.json"),
                    initial_state_indices=xs, prune_product=0, prune_single=0, compare_initial=True)
    rep = run_synthesis(cfg)
    assert any("reporting the initial strategy" in n for n in rep["notes"])
    assert all(r["bound"] == r["initial_strategy_bound"] for r in rep["results"])
    raw = run_synthesis(cfg.replace(keep_better=False))
    assert sum(r["bound"] for r in raw["results"]) < sum(r["bound"] for r in rep["results"])


class TestSweep:
    def test_single_point(self):
        rows = sweep_agents(small(), [3], ["dual"])
        assert len(rows) == 1 and rows[0]["status"] == "ok"

    def test_counts_nondecreasing(self):
        rows = sweep_agents(small(case="mu2"), [2, 3, 4], ["dual", "flat"])
        dual = [r for r in rows if r["method"] == "dual"]
        assert [r["cubes"] for r in dual] == sorted(r["cubes"] for r in dual)
        assert [r["vertices"] for r in dual] == sorted(r["vertices"] for r in dual)
        for d, f in zip(dual, (r for r in rows if r["method"] == "flat")):
            assert d["bound"] == pytest.approx(f["bound"], abs=1e-12)
            assert f["peak_vectors"] >= d["peak_vectors"]

    def test_flat_over_budget_marked(self):
        rows = sweep_agents(small(max_vectors=40), [3, 4], ["dual", "flat"])
        assert any(r["status"] == "failed" for r in rows if r["method"] == "flat")
        text = rows_to_csv(rows)
        assert text.splitlines()[0] == ",".join(SWEEP_FIELDS)
        assert len(text.splitlines()) == 5

    def test_rejects_decreasing(self):
        with pytest.raises(ConfigError):
            sweep_agents(small(), [4, 3])


class TestCli:
    def write(self, tmp_path, text):
        p = tmp_path / "c.yaml"
        p.write_text("case: mu1\nabstraction: {n_states: 20, n_actions: 5}\n" + text)
        return str(p)

    def test_success(self, tmp_path, capsys):
        cfg = self.write(tmp_path, "initial_states: [[0.0, 0.0, 0.0]]\n")
        assert main(["--config", cfg, "--agents", "3", "--horizon", "3", "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o.json").exists()
        assert "bound=" in capsys.readouterr().out

    def test_sweep_csv(self, tmp_path):
        cfg = self.write(tmp_path, "horizon: 3\n")
        assert main(["--config", cfg, "--sweep", "3,4", "--method", "dual", "--out", str(tmp_path / "s")]) == 0
        assert (tmp_path / "s.csv").read_text().count("\n") == 3

    def test_config_error(self, tmp_path):
        assert main(["--config", self.write(tmp_path, "agnets: 2\n")]) == 2
        assert main(["--config", self.write(tmp_path, ""), "--formula", "[p1 1]"]) == 2
        assert main(["--config", str(tmp_path / "missing.yaml")]) == 2

    def test_solver_error(self, tmp_path):
        # 40 agents x 2 propositions exceeds the BDD variable cap
        assert main(["--config", self.write(tmp_path, ""), "--agents", "40"]) == 3

    def test_budget_exceeded(self, tmp_path):
        cfg = self.write(tmp_path, "max_vectors: 3\ninitial_states: [[0.0, 0.0, 0.0]]\n")
        assert main(["--config", cfg, "--agents", "3", "--horizon", "4"]) == 4
