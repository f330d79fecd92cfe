import csv
import io
import json

import numpy as np
import pytest

from specsim.cli import main as cli_main
from specsim.config import ExperimentConfig, FixedK, DynamicK, LearnerConfig
from specsim.environment import EnvConfig, Shift, Stationary
from specsim.runner import (
    CSV_HEADER,
    default_eta,
    records_to_csv,
    run_experiment,
    run_sweep,
    simulate_run,
    version_string,
)


def _cfg(tmp_path, learner=None, T=50, k_policy=None, seeds=(0,), regime=None, seed=9):
    return ExperimentConfig(
        env=EnvConfig(regime or Stationary(), T=T, V=8, d=4, D=3.0, seed=seed),
        k_policy=k_policy or FixedK(3),
        learner=learner or LearnerConfig(kind="ogd"),
        alpha=0.05,
        seeds=tuple(seeds),
        output_dir=str(tmp_path / "out"),
    )


class TestSimulateRun:
    def test_record_invariants(self, tmp_path):
        records, summary = simulate_run(_cfg(tmp_path), 0)
        assert len(records) == 50
        for r in records:
            assert r.emitted == r.n_accepted + 1
            assert 0 <= r.n_accepted <= r.k_used
            assert abs(r.acc_true - (1.0 - r.tv)) <= 1e-12
            assert r.loss >= r.comparator_loss - 1e-9  # realizable stream
        assert summary.emitted_total == summary.accepted_total + 50

    def test_regret_equals_kl_sum(self, tmp_path):
        records, summary = simulate_run(_cfg(tmp_path), 0)
        assert abs(summary.regret - sum(r.kl for r in records)) <= 1e-6

    def test_gamma_cap(self, tmp_path):
        _, summary = simulate_run(_cfg(tmp_path), 0)
        assert summary.gamma_accepted <= 3 / (0.05 * 3 + 1.0) + 1e-9

    def test_deterministic(self, tmp_path):
        r1, s1 = simulate_run(_cfg(tmp_path), 0)
        r2, s2 = simulate_run(_cfg(tmp_path), 0)
        assert s1 == s2
        assert r1 == r2

    def test_seeds_differ(self, tmp_path):
        _, s0 = simulate_run(_cfg(tmp_path), 0)
        _, s1 = simulate_run(_cfg(tmp_path), 1)
        assert s0 != s1

    def test_all_learner_kinds_run(self, tmp_path):
        for learner in (
            LearnerConfig(kind="frozen"),
            LearnerConfig(kind="frozen", init="comparator"),
            LearnerConfig(kind="ogd"),
            LearnerConfig(kind="optimistic"),
            LearnerConfig(kind="ensemble"),
            LearnerConfig(kind="dpo", beta=0.5),
        ):
            _, summary = simulate_run(_cfg(tmp_path, learner=learner, T=20), 0)
            assert summary.sim_wallclock > 0

    def test_frozen_comparator_init_zero_regret(self, tmp_path):
        cfg = _cfg(tmp_path, learner=LearnerConfig(kind="frozen", init="comparator"))
        _, summary = simulate_run(cfg, 0)
        assert abs(summary.regret) <= 1e-9

    def test_dynamic_k_stays_in_bounds(self, tmp_path):
        cfg = _cfg(tmp_path, k_policy=DynamicK(window=10, k_max=8), T=100)
        records, _ = simulate_run(cfg, 0)
        assert records[0].k_used == 1  # no history yet
        assert all(1 <= r.k_used <= 8 for r in records)

    def test_default_eta_formula(self):
        assert abs(default_eta(5.0, 2000) - 5.0 / (np.sqrt(2.0) * np.sqrt(2000))) <= 1e-12


class TestCsv:
    def test_header_exact(self):
        assert CSV_HEADER == (
            "t,learner,regime,seed,k_used,n_accepted,emitted,acc_true,tv,kl,loss,"
            "comparator_loss,regret_cum,gamma_accepted_cum,gamma_emitted_cum,sim_wallclock_cum"
        )

    def test_schema_and_cumulatives(self, tmp_path):
        records, summary = simulate_run(_cfg(tmp_path), 0)
        text = records_to_csv(records, "ogd", "stationary", 0, 0.05)
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == len(records)
        last = rows[-1]
        assert last["learner"] == "ogd"
        assert last["regime"] == "stationary"
        assert abs(float(last["regret_cum"]) - summary.regret) <= 1e-9
        assert abs(float(last["sim_wallclock_cum"]) - summary.sim_wallclock) <= 1e-9
        assert abs(float(last["gamma_accepted_cum"]) - summary.gamma_accepted) <= 1e-9
        # regret_cum is a proper running sum
        partial = sum(r.loss - r.comparator_loss for r in records[:10])
        assert abs(float(rows[9]["regret_cum"]) - partial) <= 1e-9

    def test_byte_identical_across_runs(self, tmp_path):
        cfg = _cfg(tmp_path)
        texts = []
        for _ in range(2):
            records, _ = simulate_run(cfg, 0)
            texts.append(records_to_csv(records, "ogd", "stationary", 0, 0.05))
        assert texts[0] == texts[1]


class TestOutputs:
    def test_run_experiment_writes_outputs(self, tmp_path):
        cfg = _cfg(tmp_path, seeds=(0, 1))
        summaries = run_experiment(cfg)
        assert set(summaries) == {0, 1}
        for seed in (0, 1):
            run_dir = tmp_path / "out" / f"seed_{seed}"
            assert (run_dir / "rounds.csv").exists()
            payload = json.loads((run_dir / "summary.json").read_text())
            assert payload["seed"] == seed
            assert payload["learner"] == "ogd"
            assert payload["regime"] == "stationary"
            assert payload["config"]["env"]["T"] == 50
            assert payload["version"].startswith("specsim-")
            assert abs(payload["regret"] - summaries[seed].regret) <= 1e-12

    def test_no_stale_staging_dirs(self, tmp_path):
        run_experiment(_cfg(tmp_path))
        leftovers = [p for p in (tmp_path / "out").iterdir() if p.name.startswith(".tmp-")]
        assert leftovers == []

    def test_version_string(self):
        assert version_string().startswith("specsim-")


class TestSweep:
    def test_single_config_matches_run(self, tmp_path):
        cfg = _cfg(tmp_path, seeds=(0, 1, 2))
        table = run_sweep([cfg])
        entry = table["runs"][0]
        summaries = run_experiment(cfg)
        regrets = np.array([summaries[s].regret for s in (0, 1, 2)])
        assert entry["completed"] == 3
        assert entry["failed"] == []
        assert abs(entry["regret_mean"] - regrets.mean()) <= 1e-12
        assert abs(entry["regret_std"] - regrets.std()) <= 1e-12

    def test_parallel_matches_serial(self, tmp_path):
        cfg = _cfg(tmp_path, seeds=(0, 1, 2, 3))
        serial = run_sweep([cfg])
        parallel = run_sweep([cfg], jobs=2)
        assert serial["runs"][0]["regret_mean"] == parallel["runs"][0]["regret_mean"]

    def test_failure_recorded_without_aborting(self, tmp_path, monkeypatch):
        good = _cfg(tmp_path, seeds=(0,))
        bad = ExperimentConfig(
            env=good.env,
            k_policy=good.k_policy,
            learner=LearnerConfig(kind="nonsense"),
            alpha=0.05,
            seeds=(0,),
            output_dir=str(tmp_path / "bad"),
        )
        table = run_sweep([bad, good])
        assert len(table["runs"][0]["failed"]) == 1
        assert table["runs"][1]["completed"] == 1


class TestCli:
    def _write_cfg(self, tmp_path, **overrides):
        obj = {
            "env": {
                "regime": {"kind": "stationary"},
                "T": 30,
                "V": 8,
                "d": 4,
                "D": 3.0,
                "seed": 9,
            },
            "spec": {"k_policy": {"kind": "fixed", "k": 3}},
            "learner": {"kind": "ogd"},
            "alpha": 0.05,
            "seeds": [0],
            "output_dir": str(tmp_path / "out"),
        }
        obj.update(overrides)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(obj))
        return path

    def test_run_exit_zero(self, tmp_path, capsys):
        assert cli_main(["run", str(self._write_cfg(tmp_path))]) == 0
        assert "seed=0" in capsys.readouterr().out

    def test_config_error_exit_one(self, tmp_path, capsys):
        path = self._write_cfg(tmp_path, alpha=-1)
        assert cli_main(["run", str(path)]) == 1
        assert "config error" in capsys.readouterr().err

    def test_missing_file_exit_one(self, tmp_path):
        assert cli_main(["run", str(tmp_path / "absent.json")]) == 1

    def test_sweep_writes_summary_table(self, tmp_path, capsys):
        cfg_path = tmp_path / "sweep.json"
        cfg_path.write_text(
            json.dumps([json.loads(self._write_cfg(tmp_path).read_text())])
        )
        assert cli_main(["sweep", str(cfg_path)]) == 0
        out_table = tmp_path / "sweep_summary.json"
        assert out_table.exists()
        assert json.loads(out_table.read_text())["runs"][0]["completed"] == 1

    def test_report(self, tmp_path, capsys):
        cli_main(["run", str(self._write_cfg(tmp_path))])
        capsys.readouterr()
        assert cli_main(["report", str(tmp_path / "out")]) == 0
        out = capsys.readouterr().out
        assert "ogd" in out and "stationary" in out

    def test_report_empty_dir_exit_one(self, tmp_path):
        (tmp_path / "empty").mkdir()
        assert cli_main(["report", str(tmp_path / "empty")]) == 1

    def test_validate_quick_exit_zero(self, capsys):
        assert cli_main(["validate", "--quick"]) == 0
        out = capsys.readouterr().out
        assert "[PASS]" in out and "[FAIL]" not in out
