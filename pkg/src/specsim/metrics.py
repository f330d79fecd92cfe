"""Closed-form theory as executable metrics: dynamic regret, acceleration
rate, expected emitted length, and the optimal candidate-length rules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "RoundRecord",
    "RunSummary",
    "dynamic_regret",
    "acceleration_rate",
    "expected_emitted",
    "optimal_k_closed_form",
    "optimal_k_exact",
    "lemma1_bound_check",
    "summarize",
]


@dataclass(frozen=True)
class RoundRecord:
    """Per-round bookkeeping: losses, accept counts, and the true divergences."""

    t: int
    loss: float
    comparator_loss: float
    n_accepted: int
    emitted: int
    acc_true: float
    tv: float
    kl: float
    k_used: int


@dataclass(frozen=True)
class RunSummary:
    regret: float
    path_length: float
    accepted_total: int
    emitted_total: int
    gamma_accepted: float
    gamma_emitted: float
    alpha: float
    sim_wallclock: float


def dynamic_regret(records) -> float:
    """Cumulative loss gap against the comparator sequence."""
    if len(records) == 0:
        raise ValueError("records must be nonempty")
    return float(sum(r.loss - r.comparator_loss for r in records))


def acceleration_rate(tokens_total: int, T: int, k: int, alpha: float) -> float:
    """Speedup over plain autoregressive decoding: tokens / (T * (alpha*k + 1))."""
    if T < 1 or k < 1:
        raise ValueError("T and k must be at least 1")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    return tokens_total / (T * (alpha * k + 1.0))


def expected_emitted(acc: float, k: int) -> float:
    """Closed-form mean emitted tokens per round: (1 - acc^(k+1)) / (1 - acc).

    Continuous extension at acc == 1 returns k + 1 (the geometric sum of
    k + 1 ones).
    """
    if not 0.0 <= acc <= 1.0:
        raise ValueError("acc must lie in [0, 1]")
    if k < 1:
        raise ValueError("k must be at least 1")
    if acc == 1.0:
        return float(k + 1)
    return (1.0 - acc ** (k + 1)) / (1.0 - acc)


def optimal_k_closed_form(acc: float, alpha: float, k_max: int = 64) -> float:
    """Taylor-based candidate-length estimate C / (alpha * (1 - acc)).

    This is a Theta-approximation of the exact integer argmax; at acc == 1 the
    expression degenerates and the configured k_max is returned.
    """
    if not 0.0 <= acc <= 1.0:
        raise ValueError("acc must lie in [0, 1]")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    if acc == 1.0:
        return float(k_max)
    c = -1.0 + acc + math.sqrt(
        1.0 - 2.0 * acc + acc**2 + 3.0 * alpha - 4.0 * acc * alpha + acc**2 * alpha
    )
    return c / (alpha * (1.0 - acc))


def optimal_k_exact(acc: float, alpha: float, k_max: int) -> int:
    """Integer argmax of gamma(k) = (1 - acc^k) / ((1 - acc)(alpha*k + 1)) on
    [1, k_max], ties broken toward smaller k."""
    if not 0.0 <= acc <= 1.0:
        raise ValueError("acc must lie in [0, 1]")
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if acc == 1.0:
        return k_max
    ks = np.arange(1, k_max + 1, dtype=np.float64)
    gamma = (1.0 - acc**ks) / ((1.0 - acc) * (alpha * ks + 1.0))
    return int(np.argmax(gamma)) + 1


def lemma1_bound_check(records, k: int) -> dict:
    """Hard per-round cap plus a direction-only lower-bound diagnostic.

    The cap ``accepted_total <= k * T`` is a boolean; the ratio against
    T^(3/2)/sqrt(regret) carries hidden constants and is only meaningful as a
    monotone diagnostic across a sweep.
    """
    T = len(records)
    accepted_total = sum(r.n_accepted for r in records)
    regret = dynamic_regret(records)
    denom = T**1.5 / math.sqrt(max(regret, 1e-12))
    return {
        "accepted_total": accepted_total,
        "cap_ok": accepted_total <= k * T,
        "regret": regret,
        "lower_bound_ratio": accepted_total / denom,
    }


def summarize(records, path_length: float, alpha: float) -> RunSummary:
    """Aggregate a run; the simulated wall clock is sum_t (alpha * k_t + 1)."""
    if len(records) == 0:
        raise ValueError("records must be nonempty")
    accepted_total = sum(r.n_accepted for r in records)
    emitted_total = sum(r.emitted for r in records)
    wallclock = float(sum(alpha * r.k_used + 1.0 for r in records))
    return RunSummary(
        regret=dynamic_regret(records),
        path_length=path_length,
        accepted_total=accepted_total,
        emitted_total=emitted_total,
        gamma_accepted=accepted_total / wallclock,
        gamma_emitted=emitted_total / wallclock,
        alpha=alpha,
        sim_wallclock=wallclock,
    )
