"""Draft-verify-correct inner loop: draft k tokens, accept by likelihood-ratio
rejection, emit the accepted prefix plus one corrected (or bonus) token."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import Categorical, residual, sample
from .draft import DraftParams, predict

__all__ = [
    "MalformedDraftError",
    "RandomStream",
    "SpecConfig",
    "StepOutcome",
    "draft_tokens",
    "verify_step",
    "run_round",
    "simulate_rounds",
]


class MalformedDraftError(ValueError):
    """A drafted token has zero draft probability; it cannot have come from q."""


class RandomStream:
    """Counted uniform stream over a numpy Generator.

    Each round consumes exactly ``k_drawn + accepts_evaluated + 1`` uniforms,
    so rng offsets stay auditable.
    """

    __slots__ = ("generator", "count")

    def __init__(self, seed_or_generator) -> None:
        if isinstance(seed_or_generator, np.random.Generator):
            self.generator = seed_or_generator
        else:
            self.generator = np.random.Generator(np.random.PCG64(seed_or_generator))
        self.count = 0

    def uniform(self) -> float:
        self.count += 1
        return float(self.generator.random())


@dataclass(frozen=True)
class SpecConfig:
    """Per-round speculation settings: candidate length and master seed."""

    k: int
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.k <= 64:
            raise ValueError("candidate length k must be in [1, 64]")


@dataclass(frozen=True)
class StepOutcome:
    """Result of one speculative round.

    ``emitted`` always has length ``n_accepted + 1``: the accepted prefix plus
    either the residual correction token (after a rejection) or the bonus token
    sampled from the target (when all k drafts pass).
    """

    n_accepted: int
    emitted: tuple
    accept_flags: tuple
    bonus: bool

    def __post_init__(self):
        flags = tuple(bool(b) for b in self.accept_flags)
        n = sum(flags)
        if n != self.n_accepted or any(flags[self.n_accepted :]):
            raise ValueError("accept_flags must be a true-prefix matching n_accepted")
        if len(self.emitted) != self.n_accepted + 1:
            raise ValueError("emitted length must be n_accepted + 1")
        object.__setattr__(self, "accept_flags", flags)
        object.__setattr__(self, "emitted", tuple(int(t) for t in self.emitted))


def draft_tokens(q: Categorical, k: int, rng) -> list:
    """k independent draws from q, consuming exactly k uniforms."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return [sample(q, rng) for _ in range(k)]


def verify_step(p: Categorical, q: Categorical, tokens, rng) -> StepOutcome:
    """Accept drafted tokens while r_j <= p(x_j)/q(x_j); repair on rejection.

    On the first rejection the correction token is drawn from the residual
    distribution; if all k drafts pass, a bonus token is drawn from p. Ties
    r_j == p/q accept (measure zero, fixed for determinism).
    """
    k = len(tokens)
    accepted = []
    flags = [False] * k
    for j, tok in enumerate(tokens):
        qt = q[tok]
        if qt == 0.0:
            raise MalformedDraftError(f"token {tok} has zero draft probability")
        ratio = p[tok] / qt
        if rng.uniform() <= ratio:
            flags[j] = True
            accepted.append(tok)
        else:
            correction = sample(residual(p, q), rng)
            return StepOutcome(len(accepted), tuple(accepted + [correction]), tuple(flags), False)
    bonus_tok = sample(p, rng)
    return StepOutcome(k, tuple(accepted + [bonus_tok]), tuple(flags), True)


def run_round(
    params: DraftParams, phi: np.ndarray, p: Categorical, cfg: SpecConfig, rng
) -> StepOutcome:
    """One full speculative round: predict, draft k tokens, verify."""
    q = predict(params, phi)
    tokens = draft_tokens(q, cfg.k, rng)
    return verify_step(p, q, tokens, rng)


def simulate_rounds(
    p: Categorical, q: Categorical, k: int, rounds: int, rng: np.random.Generator
) -> dict:
    """Vectorized Monte-Carlo over many independent rounds of verify_step.

    Semantically identical to repeated ``verify_step`` on fresh drafts, but the
    uniform stream is consumed in column-major blocks rather than interleaved
    per round, so individual trajectories differ from the scalar path. Used for
    the large-sample theory checks.

    Returns accepted counts per round plus the pooled emitted-token histogram.
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    V = p.size
    cum_q = np.cumsum(q.probs)
    u_draft = rng.random((rounds, k))
    tokens = np.searchsorted(cum_q, u_draft, side="right").clip(max=V - 1)

    ratio = np.zeros(V)
    pos_q = q.probs > 0.0
    ratio[pos_q] = p.probs[pos_q] / q.probs[pos_q]
    r = rng.random((rounds, k))
    accept = r <= ratio[tokens]

    any_reject = ~accept.all(axis=1)
    first_reject = np.where(any_reject, np.argmin(accept, axis=1), k)
    n_accepted = first_reject

    # final token: residual after a rejection, bonus from p otherwise
    u_final = rng.random(rounds)
    res = np.maximum(0.0, p.probs - q.probs)
    res_sum = res.sum()
    final = np.empty(rounds, dtype=np.int64)
    if np.any(any_reject):
        if res_sum == 0.0:
            raise MalformedDraftError("rejection observed but residual is degenerate")
        cum_res = np.cumsum(res / res_sum)
        final[any_reject] = np.searchsorted(
            cum_res, u_final[any_reject], side="right"
        ).clip(max=V - 1)
    all_ok = ~any_reject
    if np.any(all_ok):
        cum_p = np.cumsum(p.probs)
        final[all_ok] = np.searchsorted(cum_p, u_final[all_ok], side="right").clip(max=V - 1)

    position = np.arange(k)[None, :]
    accepted_mask = position < n_accepted[:, None]
    counts = np.bincount(tokens[accepted_mask], minlength=V).astype(np.int64)
    counts += np.bincount(final, minlength=V)

    first_pos_accepts = int(accept[:, 0].sum())
    return {
        "n_accepted": n_accepted,
        "emitted_counts": counts,
        "emitted_total": int(n_accepted.sum()) + rounds,
        "accepted_total": int(n_accepted.sum()),
        "first_pos_accepts": first_pos_accepts,
    }
