"""Self-contained validation suite: exact enumeration, algebraic identities,
Monte-Carlo formula checks, gradient checks, and regret/bound diagnostics.

Every check returns (name, measured value, threshold description, pass flag);
the CLI prints one line per check and exits nonzero on any failure. The quick
subset covers the exact-arithmetic and identity checks only.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .config import ExperimentConfig, FixedK, LearnerConfig
from .dist import (
    Categorical,
    acceptance_rate,
    entropy,
    kl_divergence,
    residual,
    total_variation,
)
from .draft import (
    GRAD_BOUND,
    DraftParams,
    PreferenceTuple,
    ce_grad,
    ce_loss,
    dpo_loss_grad,
    predict,
)
from .engine import simulate_rounds
from .environment import EnvConfig, Stationary
from .learners import LOSS_CLIP, state_from_json, state_to_json
from .metrics import expected_emitted, optimal_k_closed_form, optimal_k_exact
from .oracles import losslessness_holds, simplex_grid
from .runner import records_to_csv, simulate_run

__all__ = ["run_checks", "Check"]


class Check:
    __slots__ = ("name", "value", "threshold", "ok")

    def __init__(self, name: str, value, threshold: str, ok: bool) -> None:
        self.name = name
        self.value = value
        self.threshold = threshold
        self.ok = bool(ok)

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"[{status}] {self.name}: measured={self.value} threshold={self.threshold}"


def _random_pair(rng, V: int) -> tuple:
    return Categorical(rng.dirichlet(np.ones(V))), Categorical(rng.dirichlet(np.ones(V)))


def _check_lossless_enumeration() -> Check:
    worst = True
    for V in (2, 3):
        grid = simplex_grid(V, 3)
        for p in grid:
            for q in grid:
                if all(x == 0 for x in q):
                    continue
                for k in (1, 2, 3):
                    if not losslessness_holds(p, q, k):
                        worst = False
    return Check("lossless-exact-enumeration", "exact", "zero tolerance", worst)


def _check_acceptance_identity(rng) -> Check:
    worst = 0.0
    for _ in range(10_000):
        p, q = _random_pair(rng, int(rng.integers(2, 17)))
        direct = float(np.minimum(p.probs, q.probs).sum())
        worst = max(worst, abs(acceptance_rate(p, q) - (1.0 - total_variation(p, q))))
        worst = max(worst, abs(acceptance_rate(p, q) - direct))
    return Check("acceptance-equals-one-minus-tv", worst, "<= 1e-12", worst <= 1e-12)


def _check_residual_identity(rng) -> Check:
    worst = 0.0
    for _ in range(2_000):
        p, q = _random_pair(rng, int(rng.integers(2, 17)))
        tv = total_variation(p, q)
        if tv == 0.0:
            continue
        recon = np.minimum(p.probs, q.probs) + tv * residual(p, q).probs
        worst = max(worst, float(np.abs(recon - p.probs).max()))
    return Check("residual-repairs-target", worst, "<= 1e-12", worst <= 1e-12)


def _check_pinsker(rng) -> Check:
    worst = -1.0
    for _ in range(10_000):
        p, q = _random_pair(rng, int(rng.integers(2, 17)))
        gap = total_variation(p, q) - math.sqrt(kl_divergence(p, q) / 2.0)
        worst = max(worst, gap)
    return Check("pinsker-inequality", worst, "<= 1e-12", worst <= 1e-12)


def _fd_grad(loss_fn, matrix: np.ndarray, h: float = 1e-5) -> np.ndarray:
    grad = np.zeros_like(matrix)
    for idx in np.ndindex(matrix.shape):
        up = matrix.copy()
        up[idx] += h
        down = matrix.copy()
        down[idx] -= h
        grad[idx] = (loss_fn(up) - loss_fn(down)) / (2.0 * h)
    return grad


def _rel_err(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(b)), 1e-8)
    return float(np.linalg.norm(a - b)) / scale


def _check_ce_grad(rng, instances: int = 20) -> Check:
    worst = 0.0
    for _ in range(instances):
        V, d = int(rng.integers(3, 8)), int(rng.integers(2, 6))
        params = DraftParams(rng.standard_normal((V, d)) * 0.5, 5.0)
        phi = rng.standard_normal(d)
        phi /= max(np.linalg.norm(phi), 1.0)
        target = Categorical(rng.dirichlet(np.ones(V)))
        analytic = ce_grad(params, phi, target)
        fd = _fd_grad(lambda m: ce_loss(DraftParams(m, 5.0), phi, target), params.matrix)
        worst = max(worst, _rel_err(analytic, fd))
    return Check("ce-grad-finite-differences", worst, "<= 1e-5", worst <= 1e-5)


def _random_preference_batch(rng, V: int, d: int, size: int = 2):
    batch = []
    for _ in range(size):
        L = int(rng.integers(1, 3))
        feats = rng.standard_normal((L, d))
        feats /= np.maximum(np.linalg.norm(feats, axis=1, keepdims=True), 1.0)
        batch.append(
            PreferenceTuple(
                feats,
                tuple(int(t) for t in rng.integers(0, V, size=L)),
                tuple(int(t) for t in rng.integers(0, V, size=L)),
            )
        )
    return batch


def _check_dpo_grad(rng, instances: int = 10) -> Check:
    worst = 0.0
    for _ in range(instances):
        V, d = int(rng.integers(3, 7)), int(rng.integers(2, 5))
        params = DraftParams(rng.standard_normal((V, d)) * 0.5, 5.0)
        ref = DraftParams(rng.standard_normal((V, d)) * 0.5, 5.0)
        batch = _random_preference_batch(rng, V, d)
        beta = float(rng.uniform(0.5, 2.0))
        _, analytic = dpo_loss_grad(params, ref, batch, beta)
        fd = _fd_grad(
            lambda m: dpo_loss_grad(DraftParams(m, 5.0), ref, batch, beta)[0], params.matrix
        )
        worst = max(worst, _rel_err(analytic, fd))
    return Check("dpo-grad-finite-differences", worst, "<= 1e-5", worst <= 1e-5)


def _base_config(T: int, learner: LearnerConfig, k: int = 4, seed: int = 7, regime=None):
    return ExperimentConfig(
        env=EnvConfig(regime or Stationary(), T=T, V=16, d=8, D=5.0, seed=seed),
        k_policy=FixedK(k),
        learner=learner,
        alpha=0.05,
        seeds=(0,),
        output_dir="unused",
    )


def _check_checkpoint_roundtrip() -> Check:
    from .learners import EnsembleState, OgdState, OptimisticState

    zero = DraftParams(np.linspace(-1, 1, 12).reshape(4, 3), 5.0)
    states = [
        OgdState(zero, 0.1),
        OptimisticState.fresh(zero, 0.2),
        EnsembleState.fresh(zero, [0.1, 0.2, 0.4], 1.0),
    ]
    ok = True
    for state in states:
        restored = state_to_json(state_from_json(state_to_json(state)))
        ok = ok and restored == state_to_json(state)
    return Check("learner-state-json-roundtrip", "bit-exact" if ok else "mismatch", "equal", ok)


def _check_lossless_mc(rng) -> Check:
    V, k, rounds = 16, 4, 1_000_000
    p = Categorical(rng.dirichlet(np.ones(V)))
    q = Categorical(rng.dirichlet(np.ones(V)))
    out = simulate_rounds(p, q, k, rounds, rng)
    emp = out["emitted_counts"] / out["emitted_counts"].sum()
    tv = 0.5 * float(np.abs(emp - p.probs).sum())
    return Check("lossless-monte-carlo", tv, "<= 0.01", tv <= 0.01)


def _check_accept_freq(rng) -> Check:
    rounds = 100_000
    worst_sigma = 0.0
    for _ in range(4):
        p, q = _random_pair(rng, 16)
        acc = acceptance_rate(p, q)
        out = simulate_rounds(p, q, 2, rounds, rng)
        emp = out["first_pos_accepts"] / rounds
        se = math.sqrt(max(acc * (1 - acc), 1e-12) / rounds)
        worst_sigma = max(worst_sigma, abs(emp - acc) / se)
    return Check("accept-frequency-vs-formula", worst_sigma, "<= 3 sigma", worst_sigma <= 3.0)


def _check_expected_emitted(rng) -> Check:
    rounds = 100_000
    worst_sigma = 0.0
    settings = [(16, 1), (16, 4), (8, 8), (4, 2), (32, 4), (16, 16)]
    for V, k in settings:
        p, q = _random_pair(rng, V)
        out = simulate_rounds(p, q, k, rounds, rng)
        emitted = out["n_accepted"] + 1
        mean = float(emitted.mean())
        se = float(emitted.std(ddof=1)) / math.sqrt(rounds)
        expect = expected_emitted(acceptance_rate(p, q), k)
        worst_sigma = max(worst_sigma, abs(mean - expect) / max(se, 1e-12))
    return Check("expected-emitted-formula", worst_sigma, "<= 3 s.e.", worst_sigma <= 3.0)


def _loglog_slope(regret_cum: np.ndarray, lo: int, hi: int) -> float:
    ts = np.arange(1, len(regret_cum) + 1)
    mask = (ts >= lo) & (ts <= hi) & (regret_cum > 0)
    x = np.log(ts[mask])
    y = np.log(regret_cum[mask])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def _check_regret_slopes() -> Check:
    T = 10_000
    ogd_cfg = _base_config(T, LearnerConfig(kind="ogd"))
    frozen_cfg = _base_config(T, LearnerConfig(kind="frozen"))
    ogd_records, _ = simulate_run(ogd_cfg, 0)
    frozen_records, _ = simulate_run(frozen_cfg, 0)

    def cum(records):
        return np.cumsum([r.loss - r.comparator_loss for r in records])

    ogd_slope = _loglog_slope(cum(ogd_records), 100, T)
    frozen_slope = _loglog_slope(cum(frozen_records), 100, T)
    ok = ogd_slope <= 0.65 and frozen_slope >= 0.95
    return Check(
        "regret-loglog-slopes",
        f"ogd={ogd_slope:.3f},frozen={frozen_slope:.3f}",
        "ogd <= 0.65, frozen >= 0.95",
        ok,
    )


def _check_gamma_cap() -> Check:
    worst = -1.0
    for learner in ("frozen", "ogd"):
        cfg = _base_config(2_000, LearnerConfig(kind=learner), k=4)
        _, summary = simulate_run(cfg, 0)
        cap = 4 / (cfg.alpha * 4 + 1.0)
        worst = max(worst, summary.gamma_accepted - cap)
    return Check("gamma-upper-bound", worst, "<= 0", worst <= 1e-12)


def _check_optimal_k() -> Check:
    accs = [0.7, 0.8, 0.9, 0.95]
    alphas = [0.02, 0.05, 0.1]
    ratio_ok = True
    for acc in accs:
        for alpha in alphas:
            exact = optimal_k_exact(acc, alpha, 512)
            closed = optimal_k_closed_form(acc, alpha)
            if not 0.5 <= exact / closed <= 3.0:
                ratio_ok = False
    mono_ok = all(
        optimal_k_exact(a, 0.05, 64) <= optimal_k_exact(b, 0.05, 64)
        for a, b in ((0.5, 0.7), (0.7, 0.9))
    )
    known_ok = optimal_k_exact(0.8, 0.05, 64) == 9 and optimal_k_exact(0.0, 0.05, 64) == 1
    ok = ratio_ok and mono_ok and known_ok
    return Check(
        "optimal-k-grid-oracle",
        f"ratio_ok={ratio_ok},mono_ok={mono_ok},known_ok={known_ok}",
        "ratio in [0.5,3], nondecreasing in acc, known argmax values",
        ok,
    )


def _check_hedge_meta_regret() -> Check:
    from .learners import EnsembleState, default_epsilon, make_step_sizes
    from .learners import ensemble_round
    from .environment import generate_stream

    env = EnvConfig(Stationary(), T=1_000, V=16, d=8, D=5.0, seed=11)
    stream = generate_stream(env)
    etas = make_step_sizes(env.D, GRAD_BOUND, env.T)
    eps = default_epsilon(len(etas), env.T)
    state = EnsembleState.fresh(DraftParams.zeros(env.V, env.d, env.D), etas, eps)
    combined_loss = 0.0
    max_loss = 0.0
    for step in stream:
        combined, state = ensemble_round(
            state,
            lambda prm, s=step: ce_loss(prm, s.phi, s.target),
            lambda prm, s=step: ce_grad(prm, s.phi, s.target),
        )
        loss = min(ce_loss(combined, step.phi, step.target), LOSS_CLIP)
        combined_loss += loss
        max_loss = max(max_loss, loss)
    best_base = float(state.cum_losses.min())
    bound = best_base + math.log(len(etas)) / eps + eps * env.T * max_loss**2 / 8.0
    gap = combined_loss - bound
    return Check("hedge-meta-regret-bound", gap, "<= 0", gap <= 1e-9)


def _check_determinism() -> Check:
    cfg = _base_config(300, LearnerConfig(kind="ogd"))
    records_a, _ = simulate_run(cfg, 3)
    records_b, _ = simulate_run(cfg, 3)
    csv_a = records_to_csv(records_a, "ogd", "stationary", 3, cfg.alpha)
    csv_b = records_to_csv(records_b, "ogd", "stationary", 3, cfg.alpha)
    ok = csv_a == csv_b
    return Check("run-determinism", "byte-identical" if ok else "differs", "equal", ok)


def run_checks(quick: bool = False) -> list:
    """Run the validation battery; quick mode keeps to the exact subset."""
    rng = np.random.Generator(np.random.PCG64(20240817))
    checks = [
        _check_lossless_enumeration(),
        _check_acceptance_identity(rng),
        _check_residual_identity(rng),
        _check_pinsker(rng),
        _check_ce_grad(rng),
        _check_dpo_grad(rng),
        _check_checkpoint_roundtrip(),
    ]
    if not quick:
        checks += [
            _check_lossless_mc(rng),
            _check_accept_freq(rng),
            _check_expected_emitted(rng),
            _check_regret_slopes(),
            _check_gamma_cap(),
            _check_optimal_k(),
            _check_hedge_meta_regret(),
            _check_determinism(),
        ]
    return checks
