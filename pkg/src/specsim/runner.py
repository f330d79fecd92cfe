"""Experiment orchestration: wire environment, engine, learner, and metrics
into reproducible runs and sweeps with machine-readable outputs."""

from __future__ import annotations

import json
import math
import os
import shutil
import subprocess
import tempfile
from collections import deque
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .config import DynamicK, ExperimentConfig, FixedK, LearnerConfig
from .dist import Categorical, kl_divergence, sample, total_variation
from .draft import (
    GRAD_BOUND,
    DraftParams,
    PreferenceTuple,
    ce_grad,
    ce_loss,
    dpo_loss_grad,
    predict,
)
from .engine import RandomStream, draft_tokens, verify_step
from .environment import EnvConfig, generate_stream, path_length, regime_name
from .learners import (
    EnsembleState,
    OgdState,
    OptimisticState,
    default_epsilon,
    ensemble_round,
    make_step_sizes,
    ogd_update,
    optimistic_commit,
    optimistic_play,
)
from .metrics import RoundRecord, RunSummary, summarize

__all__ = [
    "CSV_HEADER",
    "default_eta",
    "build_driver",
    "simulate_run",
    "run_experiment",
    "run_sweep",
    "write_run_outputs",
    "version_string",
]

CSV_HEADER = (
    "t,learner,regime,seed,k_used,n_accepted,emitted,acc_true,tv,kl,loss,"
    "comparator_loss,regret_cum,gamma_accepted_cum,gamma_emitted_cum,sim_wallclock_cum"
)

# Preference feedback for the dpo learner: pairs per round and the temperature
# used to flatten the target into the dispreferred sampler.
_DPO_BATCH = 2
_DPO_CORRUPT_TEMPERATURE = 2.0


def default_eta(D: float, T: int) -> float:
    """The D/(G sqrt(T)) step size with the analytic gradient bound."""
    return D / (GRAD_BOUND * math.sqrt(T))


class _FrozenDriver:
    def __init__(self, params: DraftParams) -> None:
        self.params = params

    def play(self, phi, target) -> DraftParams:
        return self.params

    def update(self, phi, target, played) -> None:
        pass


class _OgdDriver:
    def __init__(self, state: OgdState) -> None:
        self.state = state

    def play(self, phi, target) -> DraftParams:
        return self.state.params

    def update(self, phi, target, played) -> None:
        self.state = ogd_update(self.state, ce_grad(played, phi, target))


class _OptimisticDriver:
    def __init__(self, state: OptimisticState) -> None:
        self.state = state

    def play(self, phi, target) -> DraftParams:
        played, self.state = optimistic_play(self.state)
        return played

    def update(self, phi, target, played) -> None:
        self.state = optimistic_commit(self.state, ce_grad(played, phi, target))


class _EnsembleDriver:
    def __init__(self, state: EnsembleState) -> None:
        self.state = state

    def play(self, phi, target) -> DraftParams:
        combined, self.state = ensemble_round(
            self.state,
            lambda params: ce_loss(params, phi, target),
            lambda params: ce_grad(params, phi, target),
        )
        return combined

    def update(self, phi, target, played) -> None:
        pass  # base and meta updates happen in play, on the same round loss


class _DpoDriver:
    def __init__(self, state: OgdState, ref: DraftParams, beta: float, rng) -> None:
        self.state = state
        self.ref = ref
        self.beta = beta
        self.rng = rng

    def play(self, phi, target) -> DraftParams:
        return self.state.params

    def _corrupted(self, target: Categorical) -> Categorical:
        flat = target.probs ** (1.0 / _DPO_CORRUPT_TEMPERATURE)
        return Categorical(flat / flat.sum())

    def update(self, phi, target, played) -> None:
        feats = np.asarray(phi, dtype=np.float64)[None, :]
        corrupt = self._corrupted(target)
        batch = [
            PreferenceTuple(feats, (sample(target, self.rng),), (sample(corrupt, self.rng),))
            for _ in range(_DPO_BATCH)
        ]
        _, grad = dpo_loss_grad(played, self.ref, batch, self.beta)
        self.state = ogd_update(self.state, grad)


def build_driver(learner: LearnerConfig, env: EnvConfig, stream, feedback_rng):
    """Instantiate the learner driver for one run; draft params start at zero."""
    zero = DraftParams.zeros(env.V, env.d, env.D)
    eta = learner.eta if learner.eta is not None else default_eta(env.D, env.T)
    if learner.kind == "frozen":
        params = stream[0].comparator if learner.init == "comparator" else zero
        return _FrozenDriver(params)
    if learner.kind == "ogd":
        return _OgdDriver(OgdState(zero, eta))
    if learner.kind == "optimistic":
        return _OptimisticDriver(OptimisticState.fresh(zero, eta))
    if learner.kind == "ensemble":
        etas = make_step_sizes(env.D, GRAD_BOUND, env.T)
        epsilon = (
            learner.epsilon
            if learner.epsilon is not None
            else default_epsilon(len(etas), env.T)
        )
        return _EnsembleDriver(EnsembleState.fresh(zero, etas, epsilon))
    if learner.kind == "dpo":
        return _DpoDriver(OgdState(zero, eta), zero, learner.beta, feedback_rng)
    raise ValueError(f"unknown learner kind {learner.kind!r}")


class _KPolicy:
    """Candidate-length schedule: fixed, or grid-oracle on a rolling accept rate."""

    def __init__(self, policy, alpha: float) -> None:
        self.policy = policy
        self.alpha = alpha
        if isinstance(policy, DynamicK):
            self.window = deque(maxlen=policy.window)

    def next_k(self) -> int:
        if isinstance(self.policy, FixedK):
            return self.policy.k
        if not self.window:
            return 1
        evaluated = sum(e for _, e in self.window)
        accepted = sum(a for a, _ in self.window)
        acc_hat = min(accepted / evaluated, 0.999) if evaluated else 0.0
        from .metrics import optimal_k_exact

        return optimal_k_exact(acc_hat, self.alpha, self.policy.k_max)

    def observe(self, n_accepted: int, k_used: int) -> None:
        # Tokens after the first rejection are never tested, so the unbiased
        # per-token estimate divides by tokens evaluated, not tokens drafted.
        if isinstance(self.policy, DynamicK):
            evaluated = n_accepted + (0 if n_accepted == k_used else 1)
            self.window.append((n_accepted, evaluated))


def _run_rngs(env_seed: int, run_seed: int):
    root = np.random.SeedSequence(entropy=[env_seed & (2**63 - 1), run_seed & (2**63 - 1)])
    stream_ss, engine_ss, feedback_ss = root.spawn(3)
    return (
        np.random.Generator(np.random.PCG64(stream_ss)),
        RandomStream(np.random.Generator(np.random.PCG64(engine_ss))),
        np.random.Generator(np.random.PCG64(feedback_ss)),
    )


def simulate_run(cfg: ExperimentConfig, seed: int):
    """Execute one (config, seed) run; returns (records, summary).

    Deterministic: the three rng streams (environment, engine, feedback) are
    all derived from (env.seed, seed).
    """
    stream_rng, engine_rng, feedback_rng = _run_rngs(cfg.env.seed, seed)
    stream = generate_stream(cfg.env, stream_rng)
    driver = build_driver(cfg.learner, cfg.env, stream, feedback_rng)
    policy = _KPolicy(cfg.k_policy, cfg.alpha)

    records = []
    for t, step in enumerate(stream):
        k = policy.next_k()
        played = driver.play(step.phi, step.target)
        q = predict(played, step.phi)
        tokens = draft_tokens(q, k, engine_rng)
        outcome = verify_step(step.target, q, tokens, engine_rng)
        driver.update(step.phi, step.target, played)
        policy.observe(outcome.n_accepted, k)
        records.append(
            RoundRecord(
                t=t,
                loss=ce_loss(played, step.phi, step.target),
                comparator_loss=step.comparator_loss,
                n_accepted=outcome.n_accepted,
                emitted=len(outcome.emitted),
                acc_true=1.0 - total_variation(step.target, q),
                tv=total_variation(step.target, q),
                kl=kl_divergence(step.target, q),
                k_used=k,
            )
        )
    p_len = path_length(stream) if len(stream) >= 2 else 0.0
    return records, summarize(records, p_len, cfg.alpha)


def _fmt(x: float) -> str:
    return format(x, ".12g")


def records_to_csv(records, learner: str, regime: str, seed: int, alpha: float) -> str:
    lines = [CSV_HEADER]
    regret = 0.0
    accepted = 0
    emitted = 0
    wallclock = 0.0
    for r in records:
        regret += r.loss - r.comparator_loss
        accepted += r.n_accepted
        emitted += r.emitted
        wallclock += alpha * r.k_used + 1.0
        lines.append(
            ",".join(
                [
                    str(r.t),
                    learner,
                    regime,
                    str(seed),
                    str(r.k_used),
                    str(r.n_accepted),
                    str(r.emitted),
                    _fmt(r.acc_true),
                    _fmt(r.tv),
                    _fmt(r.kl),
                    _fmt(r.loss),
                    _fmt(r.comparator_loss),
                    _fmt(regret),
                    _fmt(accepted / wallclock),
                    _fmt(emitted / wallclock),
                    _fmt(wallclock),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def version_string() -> str:
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        )
        if desc.returncode == 0:
            return f"specsim-{__version__}+{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"specsim-{__version__}"


def _config_echo(cfg: ExperimentConfig) -> dict:
    echo = {
        "env": {
            "regime": asdict(cfg.env.regime) | {"kind": regime_name(cfg.env.regime)},
            "T": cfg.env.T,
            "V": cfg.env.V,
            "d": cfg.env.d,
            "D": cfg.env.D,
            "seed": cfg.env.seed,
        },
        "spec": {"k_policy": asdict(cfg.k_policy)},
        "learner": {k: v for k, v in asdict(cfg.learner).items() if v is not None},
        "alpha": cfg.alpha,
        "seeds": list(cfg.seeds),
        "output_dir": cfg.output_dir,
    }
    return echo


def write_run_outputs(cfg: ExperimentConfig, seed: int, records, summary: RunSummary) -> Path:
    """Write rounds.csv and summary.json for one run, atomically.

    The run is staged in a temp directory next to the target and renamed into
    place on completion, so a failing sibling never leaves partial output.
    """
    out_root = Path(cfg.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    final = out_root / f"seed_{seed}"
    csv_text = records_to_csv(
        records, cfg.learner.kind, regime_name(cfg.env.regime), seed, cfg.alpha
    )
    payload = asdict(summary) | {
        "seed": seed,
        "learner": cfg.learner.kind,
        "regime": regime_name(cfg.env.regime),
        "config": _config_echo(cfg),
        "version": version_string(),
    }
    staging = Path(tempfile.mkdtemp(prefix=f".tmp-seed_{seed}-", dir=out_root))
    try:
        (staging / "rounds.csv").write_text(csv_text)
        (staging / "summary.json").write_text(json.dumps(payload, indent=2) + "\n")
        if final.exists():
            shutil.rmtree(final)
        os.replace(staging, final)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    return final


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run every seed of one experiment; returns seed -> RunSummary."""
    summaries = {}
    for seed in cfg.seeds:
        records, summary = simulate_run(cfg, seed)
        write_run_outputs(cfg, seed, records, summary)
        summaries[seed] = summary
    return summaries


def _run_one_for_sweep(args):
    cfg, seed = args
    records, summary = simulate_run(cfg, seed)
    write_run_outputs(cfg, seed, records, summary)
    return summary


def run_sweep(configs, jobs: int = 1) -> dict:
    """Execute all (config, seed) runs, aggregate mean/std summaries per config.

    Failing runs are recorded and do not abort the sweep.
    """
    table = []
    for idx, cfg in enumerate(configs):
        tasks = [(cfg, seed) for seed in cfg.seeds]
        results = []
        errors = []
        if jobs > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_one_for_sweep, t) for t in tasks]
                for seed, fut in zip(cfg.seeds, futures):
                    try:
                        results.append(fut.result())
                    except Exception as exc:  # noqa: BLE001 - sweep must continue
                        errors.append({"seed": seed, "error": str(exc)})
        else:
            for task in tasks:
                try:
                    results.append(_run_one_for_sweep(task))
                except Exception as exc:  # noqa: BLE001 - sweep must continue
                    errors.append({"seed": task[1], "error": str(exc)})
        entry = {
            "index": idx,
            "learner": cfg.learner.kind,
            "regime": regime_name(cfg.env.regime),
            "output_dir": cfg.output_dir,
            "completed": len(results),
            "failed": errors,
        }
        if results:
            for field in ("regret", "gamma_accepted", "gamma_emitted", "path_length"):
                values = np.array([getattr(s, field) for s in results])
                entry[f"{field}_mean"] = float(values.mean())
                entry[f"{field}_std"] = float(values.std())
        table.append(entry)
    return {"runs": table}
