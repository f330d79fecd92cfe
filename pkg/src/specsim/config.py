"""Experiment configuration: a single JSON document, strictly validated.

Unknown keys are rejected and every error names the offending field path, so
a bad sweep fails loudly instead of silently running defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from .environment import Drift, EnvConfig, Shift, Stationary

__all__ = [
    "ConfigError",
    "FixedK",
    "DynamicK",
    "LearnerConfig",
    "ExperimentConfig",
    "parse_experiment",
    "load_experiment",
    "load_sweep",
]

LEARNER_KINDS = ("frozen", "ogd", "optimistic", "ensemble", "dpo")


class ConfigError(ValueError):
    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class FixedK:
    k: int


@dataclass(frozen=True)
class DynamicK:
    window: int
    k_max: int


@dataclass(frozen=True)
class LearnerConfig:
    kind: str
    eta: float | None = None  # None means the D/(G sqrt(T)) default
    epsilon: float | None = None  # None means sqrt(8 ln N / T)
    beta: float = 1.0
    init: str = "zero"  # frozen only: "zero" or "comparator"


@dataclass(frozen=True)
class ExperimentConfig:
    env: EnvConfig
    k_policy: Union[FixedK, DynamicK]
    learner: LearnerConfig
    alpha: float
    seeds: tuple
    output_dir: str


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return obj[key]


def _reject_unknown(obj: dict, allowed, path: str) -> None:
    extra = set(obj) - set(allowed)
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key")


def _number(value, path: str, *, positive=False, nonnegative=False) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(path, "expected a number")
    v = float(value)
    if positive and v <= 0.0:
        raise ConfigError(path, "must be positive")
    if nonnegative and v < 0.0:
        raise ConfigError(path, "must be nonnegative")
    return v


def _integer(value, path: str, *, minimum=None) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(path, "expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(path, f"must be at least {minimum}")
    return value


def _parse_regime(obj, path: str):
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    kind = _require(obj, "kind", path)
    if kind == "stationary":
        _reject_unknown(obj, {"kind"}, path)
        return Stationary()
    if kind == "drift":
        _reject_unknown(obj, {"kind", "rate"}, path)
        return Drift(_number(_require(obj, "rate", path), f"{path}.rate", nonnegative=True))
    if kind == "shift":
        _reject_unknown(obj, {"kind", "period", "magnitude"}, path)
        return Shift(
            _integer(_require(obj, "period", path), f"{path}.period", minimum=1),
            _number(_require(obj, "magnitude", path), f"{path}.magnitude", positive=True),
        )
    raise ConfigError(f"{path}.kind", f"unknown regime {kind!r}")


def _parse_env(obj, path: str) -> EnvConfig:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    _reject_unknown(obj, {"regime", "T", "V", "d", "D", "seed"}, path)
    return EnvConfig(
        regime=_parse_regime(_require(obj, "regime", path), f"{path}.regime"),
        T=_integer(_require(obj, "T", path), f"{path}.T", minimum=1),
        V=_integer(_require(obj, "V", path), f"{path}.V", minimum=2),
        d=_integer(_require(obj, "d", path), f"{path}.d", minimum=1),
        D=_number(_require(obj, "D", path), f"{path}.D", positive=True),
        seed=_integer(_require(obj, "seed", path), f"{path}.seed"),
    )


def _parse_k_policy(obj, path: str):
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    kind = _require(obj, "kind", path)
    if kind == "fixed":
        _reject_unknown(obj, {"kind", "k"}, path)
        k = _integer(_require(obj, "k", path), f"{path}.k", minimum=1)
        if k > 64:
            raise ConfigError(f"{path}.k", "must be at most 64")
        return FixedK(k)
    if kind == "dynamic":
        _reject_unknown(obj, {"kind", "window", "k_max"}, path)
        k_max = _integer(_require(obj, "k_max", path), f"{path}.k_max", minimum=1)
        if k_max > 64:
            raise ConfigError(f"{path}.k_max", "must be at most 64")
        return DynamicK(
            _integer(_require(obj, "window", path), f"{path}.window", minimum=1), k_max
        )
    raise ConfigError(f"{path}.kind", f"unknown k policy {kind!r}")


def _parse_learner(obj, path: str) -> LearnerConfig:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    kind = _require(obj, "kind", path)
    if kind not in LEARNER_KINDS:
        raise ConfigError(f"{path}.kind", f"unknown learner {kind!r}")

    def opt_number(key, **kw):
        if key not in obj or obj[key] == "auto":
            return None
        return _number(obj[key], f"{path}.{key}", **kw)

    if kind == "frozen":
        _reject_unknown(obj, {"kind", "init"}, path)
        init = obj.get("init", "zero")
        if init not in ("zero", "comparator"):
            raise ConfigError(f"{path}.init", "must be 'zero' or 'comparator'")
        return LearnerConfig(kind="frozen", init=init)
    if kind in ("ogd", "optimistic"):
        _reject_unknown(obj, {"kind", "eta"}, path)
        return LearnerConfig(kind=kind, eta=opt_number("eta", positive=True))
    if kind == "ensemble":
        _reject_unknown(obj, {"kind", "epsilon"}, path)
        return LearnerConfig(kind="ensemble", epsilon=opt_number("epsilon", positive=True))
    # dpo
    _reject_unknown(obj, {"kind", "eta", "beta"}, path)
    beta = _number(obj.get("beta", 1.0), f"{path}.beta", positive=True)
    return LearnerConfig(kind="dpo", eta=opt_number("eta", positive=True), beta=beta)


def parse_experiment(obj, path: str = "config") -> ExperimentConfig:
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected an object")
    _reject_unknown(obj, {"env", "spec", "learner", "alpha", "seeds", "output_dir"}, path)
    spec = _require(obj, "spec", path)
    if not isinstance(spec, dict):
        raise ConfigError(f"{path}.spec", "expected an object")
    _reject_unknown(spec, {"k_policy"}, f"{path}.spec")
    seeds = _require(obj, "seeds", path)
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError(f"{path}.seeds", "expected a nonempty list")
    seeds = tuple(
        _integer(s, f"{path}.seeds[{i}]") for i, s in enumerate(seeds)
    )
    output_dir = _require(obj, "output_dir", path)
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigError(f"{path}.output_dir", "expected a nonempty string")
    return ExperimentConfig(
        env=_parse_env(_require(obj, "env", path), f"{path}.env"),
        k_policy=_parse_k_policy(_require(spec, "k_policy", f"{path}.spec"), f"{path}.spec.k_policy"),
        learner=_parse_learner(_require(obj, "learner", path), f"{path}.learner"),
        alpha=_number(_require(obj, "alpha", path), f"{path}.alpha", positive=True),
        seeds=seeds,
        output_dir=output_dir,
    )


def load_experiment(path: str | Path) -> ExperimentConfig:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    return parse_experiment(obj)


def load_sweep(path: str | Path) -> list:
    """A sweep file is a JSON list of experiment configs."""
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    if not isinstance(obj, list) or not obj:
        raise ConfigError("sweep", "expected a nonempty JSON list of configs")
    return [parse_experiment(entry, f"sweep[{i}]") for i, entry in enumerate(obj)]
