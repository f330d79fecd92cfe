"""Exact finite categorical distributions and the divergences used by draft verification."""

from __future__ import annotations

import numpy as np

__all__ = [
    "Categorical",
    "DegenerateResidualError",
    "sample",
    "total_variation",
    "kl_divergence",
    "acceptance_rate",
    "residual",
    "entropy",
]

SUM_TOL = 1e-9


class DegenerateResidualError(ValueError):
    """Raised when the residual of two identical distributions is requested."""


class Categorical:
    """A probability vector over a small token vocabulary.

    Construction renormalizes when the sum deviates from one by at most
    ``SUM_TOL`` and rejects otherwise, so Monte-Carlo drift cannot compound.
    The stored array is read-only; values are freely shareable across threads.
    """

    __slots__ = ("probs",)

    def __init__(self, probs) -> None:
        p = np.array(probs, dtype=np.float64)
        if p.ndim != 1:
            raise ValueError("probs must be a 1-D vector")
        if p.shape[0] < 2:
            raise ValueError("vocabulary size must be at least 2")
        if np.any(p < 0.0):
            raise ValueError("probabilities must be nonnegative")
        s = float(p.sum())
        if abs(s - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {s!r}, expected 1 within {SUM_TOL}")
        if s != 1.0:
            p = p / s
        p.setflags(write=False)
        self.probs = p

    @property
    def size(self) -> int:
        return self.probs.shape[0]

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, idx: int) -> float:
        return float(self.probs[idx])

    def __eq__(self, other) -> bool:
        return isinstance(other, Categorical) and np.array_equal(self.probs, other.probs)

    def __repr__(self) -> str:
        return f"Categorical({self.probs.tolist()!r})"


def _check_same_size(p: Categorical, q: Categorical) -> None:
    if p.size != q.size:
        raise ValueError(f"dimension mismatch: {p.size} vs {q.size}")


def sample(p: Categorical, rng) -> int:
    """Draw one token index by inverse CDF, consuming exactly one uniform.

    The cumulative scan is fixed left-to-right, so trajectories are
    reproducible given the rng stream. ``rng`` needs only a ``uniform()``
    method returning a float in [0, 1).
    """
    u = rng.uniform()
    cum = np.cumsum(p.probs)
    idx = int(np.searchsorted(cum, u, side="right"))
    return min(idx, p.size - 1)


def total_variation(p: Categorical, q: Categorical) -> float:
    """Total variation distance, half the L1 gap."""
    _check_same_size(p, q)
    return float(0.5 * np.abs(p.probs - q.probs).sum())


def kl_divergence(p: Categorical, q: Categorical) -> float:
    """KL(p || q) in nats, with 0 * ln(0/q) = 0 and +inf when support escapes q."""
    _check_same_size(p, q)
    mask = p.probs > 0.0
    if np.any(q.probs[mask] == 0.0):
        return float("inf")
    pm = p.probs[mask]
    return float(np.sum(pm * np.log(pm / q.probs[mask])))


def acceptance_rate(p: Categorical, q: Categorical) -> float:
    """Expected probability of accepting a drafted token: sum of min(p, q).

    Computed as 1 - TV via the same summation, so the identity
    ``acceptance_rate == 1 - total_variation`` holds exactly.
    """
    _check_same_size(p, q)
    return 1.0 - total_variation(p, q)


def residual(p: Categorical, q: Categorical) -> Categorical:
    """Normalized max(0, p - q); the correction distribution after a rejection.

    The normalizer equals the total variation distance. Raises
    ``DegenerateResidualError`` when p == q elementwise.
    """
    _check_same_size(p, q)
    r = np.maximum(0.0, p.probs - q.probs)
    norm = float(r.sum())
    if norm == 0.0:
        raise DegenerateResidualError("residual undefined: p equals q elementwise")
    return Categorical(r / norm)


def entropy(p: Categorical) -> float:
    """Shannon entropy in nats with the 0 ln 0 = 0 convention."""
    mask = p.probs > 0.0
    pm = p.probs[mask]
    return float(-np.sum(pm * np.log(pm)))
