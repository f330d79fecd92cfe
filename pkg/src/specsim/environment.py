"""Synthetic non-stationary target streams with known realizable comparators.

Ground truth is a hidden parameter matrix inside the feasible ball; the
comparator at each round is that matrix itself, so the per-round comparator
loss is exactly the target entropy and any learner's regret collapses to a
sum of KL divergences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .dist import Categorical, entropy
from .draft import DraftParams, predict, project_matrix

__all__ = [
    "Stationary",
    "Drift",
    "Shift",
    "EnvConfig",
    "EnvStep",
    "generate_stream",
    "path_length",
]

# Hidden ground-truth parameters start at this fraction of the ball radius,
# leaving headroom for drift before projection clips the comparator path.
_INIT_NORM_FRACTION = 0.6


@dataclass(frozen=True)
class Stationary:
    pass


@dataclass(frozen=True)
class Drift:
    rate: float

    def __post_init__(self):
        if self.rate < 0.0:
            raise ValueError("drift rate must be nonnegative")


@dataclass(frozen=True)
class Shift:
    period: int
    magnitude: float

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("shift period must be at least 1")
        if self.magnitude <= 0.0:
            raise ValueError("shift magnitude must be positive")


Regime = Union[Stationary, Drift, Shift]


@dataclass(frozen=True)
class EnvConfig:
    regime: Regime
    T: int
    V: int
    d: int
    D: float
    seed: int

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.V < 2:
            raise ValueError("vocabulary size must be at least 2")
        if self.d < 1:
            raise ValueError("feature dimension must be at least 1")
        if self.D <= 0.0:
            raise ValueError("ball radius must be positive")


@dataclass(frozen=True)
class EnvStep:
    """One round's context feature, target distribution, and realizable comparator."""

    phi: np.ndarray
    target: Categorical
    comparator: DraftParams
    comparator_loss: float


def regime_name(regime: Regime) -> str:
    if isinstance(regime, Stationary):
        return "stationary"
    if isinstance(regime, Drift):
        return "drift"
    return "shift"


def _unit_vector(rng: np.random.Generator, d: int) -> np.ndarray:
    while True:
        v = rng.standard_normal(d)
        norm = np.linalg.norm(v)
        if norm > 0.0:
            return v / norm


def generate_stream(cfg: EnvConfig, rng: np.random.Generator | None = None) -> list:
    """Build T rounds of (phi, target, comparator).

    The comparator is the generating matrix itself, so
    ``predict(comparator, phi) == target`` by construction.
    """
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))

    hidden = rng.standard_normal((cfg.V, cfg.d))
    hidden *= _INIT_NORM_FRACTION * cfg.D / np.linalg.norm(hidden)

    steps = []
    for t in range(cfg.T):
        if t > 0:
            if isinstance(cfg.regime, Drift) and cfg.regime.rate > 0.0:
                noise = rng.standard_normal((cfg.V, cfg.d))
                hidden = project_matrix(
                    hidden + noise * (cfg.regime.rate / np.sqrt(cfg.V * cfg.d)), cfg.D
                )
            elif isinstance(cfg.regime, Shift) and t % cfg.regime.period == 0:
                jump = rng.standard_normal((cfg.V, cfg.d))
                jump *= cfg.regime.magnitude / np.linalg.norm(jump)
                hidden = project_matrix(hidden + jump, cfg.D)
        comparator = DraftParams(hidden, cfg.D)
        phi = _unit_vector(rng, cfg.d)
        target = predict(comparator, phi)
        steps.append(EnvStep(phi, target, comparator, entropy(target)))
    return steps


def path_length(stream) -> float:
    """Total comparator movement sum ||V_{t+1} - V_t||_F."""
    if len(stream) < 2:
        raise ValueError("stream must have at least 2 steps")
    total = 0.0
    for prev, cur in zip(stream, stream[1:]):
        total += float(np.linalg.norm(cur.comparator.matrix - prev.comparator.matrix))
    return total
