import json

import pytest

from specsim.config import (
    ConfigError,
    DynamicK,
    FixedK,
    load_experiment,
    load_sweep,
    parse_experiment,
)
from specsim.environment import Drift, Shift, Stationary


def _base(**overrides):
    obj = {
        "env": {
            "regime": {"kind": "stationary"},
            "T": 100,
            "V": 8,
            "d": 4,
            "D": 5.0,
            "seed": 42,
        },
        "spec": {"k_policy": {"kind": "fixed", "k": 4}},
        "learner": {"kind": "ogd", "eta": 0.1},
        "alpha": 0.05,
        "seeds": [0, 1],
        "output_dir": "out",
    }
    obj.update(overrides)
    return obj


class TestParsing:
    def test_valid_roundtrip(self):
        cfg = parse_experiment(_base())
        assert cfg.env.T == 100
        assert cfg.k_policy == FixedK(4)
        assert cfg.learner.eta == 0.1
        assert cfg.seeds == (0, 1)

    def test_regimes(self):
        cfg = parse_experiment(_base(env=_base()["env"] | {"regime": {"kind": "drift", "rate": 0.2}}))
        assert cfg.env.regime == Drift(0.2)
        cfg = parse_experiment(
            _base(env=_base()["env"] | {"regime": {"kind": "shift", "period": 5, "magnitude": 2.0}})
        )
        assert cfg.env.regime == Shift(5, 2.0)
        cfg = parse_experiment(_base())
        assert cfg.env.regime == Stationary()

    def test_dynamic_k(self):
        obj = _base(spec={"k_policy": {"kind": "dynamic", "window": 50, "k_max": 16}})
        assert parse_experiment(obj).k_policy == DynamicK(50, 16)

    def test_auto_eta(self):
        obj = _base(learner={"kind": "ogd", "eta": "auto"})
        assert parse_experiment(obj).learner.eta is None

    def test_learner_kinds(self):
        for learner in (
            {"kind": "frozen"},
            {"kind": "frozen", "init": "comparator"},
            {"kind": "optimistic", "eta": 0.2},
            {"kind": "ensemble", "epsilon": 2.0},
            {"kind": "ensemble"},
            {"kind": "dpo", "eta": 0.1, "beta": 0.5},
        ):
            parse_experiment(_base(learner=learner))


class TestErrors:
    def _path_of(self, obj):
        with pytest.raises(ConfigError) as exc:
            parse_experiment(obj)
        return exc.value.path

    def test_unknown_top_level_key(self):
        assert self._path_of(_base(extra=1)) == "config.extra"

    def test_unknown_env_key(self):
        assert self._path_of(_base(env=_base()["env"] | {"bogus": 1})) == "config.env.bogus"

    def test_missing_field_named(self):
        obj = _base()
        del obj["env"]["T"]
        assert self._path_of(obj) == "config.env.T"

    def test_unknown_regime(self):
        obj = _base(env=_base()["env"] | {"regime": {"kind": "chaos"}})
        assert self._path_of(obj) == "config.env.regime.kind"

    def test_unknown_learner(self):
        assert self._path_of(_base(learner={"kind": "adam"})) == "config.learner.kind"

    def test_k_out_of_range(self):
        obj = _base(spec={"k_policy": {"kind": "fixed", "k": 65}})
        assert self._path_of(obj) == "config.spec.k_policy.k"

    def test_negative_eta(self):
        assert self._path_of(_base(learner={"kind": "ogd", "eta": -1.0})) == "config.learner.eta"

    def test_empty_seeds(self):
        assert self._path_of(_base(seeds=[])) == "config.seeds"

    def test_non_integer_seed(self):
        assert self._path_of(_base(seeds=[0, 1.5])) == "config.seeds[1]"

    def test_boolean_is_not_integer(self):
        obj = _base()
        obj["env"]["T"] = True
        assert self._path_of(obj) == "config.env.T"

    def test_bad_alpha(self):
        assert self._path_of(_base(alpha=0.0)) == "config.alpha"

    def test_frozen_bad_init(self):
        assert self._path_of(_base(learner={"kind": "frozen", "init": "random"})) == (
            "config.learner.init"
        )


class TestLoading:
    def test_load_experiment(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(_base()))
        assert load_experiment(path).env.V == 8

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_experiment(path)

    def test_load_sweep(self, tmp_path):
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps([_base(), _base()]))
        assert len(load_sweep(path)) == 2

    def test_sweep_entry_error_has_index(self, tmp_path):
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps([_base(), _base(alpha=-1)]))
        with pytest.raises(ConfigError) as exc:
            load_sweep(path)
        assert exc.value.path.startswith("sweep[1]")

    def test_empty_sweep_rejected(self, tmp_path):
        path = tmp_path / "sweep.json"
        path.write_text("[]")
        with pytest.raises(ConfigError):
            load_sweep(path)
