"""Render figures from parsed run data.

Four figure kinds:

- ``regret``: cumulative dynamic regret over rounds, one curve per run.
- ``throughput``: emitted tokens per unit of simulated wall clock
  (``emitted_cum / sim_wallclock_cum``), rolling-mean smoothed.
- ``avglen``: rolling mean of accepted tokens per round.
- ``gamma_vs_k``: final emitted-token speedup of each run against its
  candidate length, with the analytic cap ``k/(alpha*k + 1)`` and the
  expected-speedup curve at the pooled acceptance rate overlaid; a star
  marks that curve's grid maximum.

Output is deterministic: fixed figure geometry, a fixed SVG hash salt, and
no embedded timestamps, so identical inputs produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .reader import EmptyInputError, RunData, load_run

FIGURE_KINDS: tuple[str, ...] = ("regret", "throughput", "avglen", "gamma_vs_k")

DEFAULT_SMOOTHING = 100

_FIGSIZE = (6.4, 4.0)
_RC = {
    "svg.hashsalt": "specplot",
    "svg.fonttype": "path",
    "figure.figsize": _FIGSIZE,
    "figure.dpi": 100,
    "path.simplify": False,
}


@dataclass(frozen=True)
class FigureSpec:
    """One figure to render: what kind, from which runs, to which file."""

    kind: str
    inputs: tuple[Path, ...]
    output: Path
    smoothing: int = DEFAULT_SMOOTHING

    def __post_init__(self) -> None:
        if self.kind not in FIGURE_KINDS:
            raise ValueError(
                f"kind must be one of {', '.join(FIGURE_KINDS)}; got {self.kind!r}"
            )
        if not self.inputs:
            raise ValueError("inputs must be a nonempty list of run directories")
        if not isinstance(self.smoothing, int) or isinstance(self.smoothing, bool):
            raise ValueError(f"smoothing must be an integer >= 1; got {self.smoothing!r}")
        if self.smoothing < 1:
            raise ValueError(f"smoothing must be >= 1; got {self.smoothing}")
        suffix = Path(self.output).suffix.lower()
        if suffix not in (".svg", ".png"):
            raise ValueError(f"output must end in .svg or .png; got {self.output!s}")


def spec_from_dict(doc: dict[str, Any], base_dir: Path | None = None) -> FigureSpec:
    """Build a FigureSpec from a plain JSON object.

    Relative ``inputs``/``output`` paths are resolved against ``base_dir``
    (typically the directory holding the spec file) when given.
    """
    if not isinstance(doc, dict):
        raise ValueError(f"figure spec must be a JSON object; got {type(doc).__name__}")
    unknown = set(doc) - {"kind", "inputs", "output", "smoothing"}
    if unknown:
        raise ValueError(f"unknown figure-spec keys: {', '.join(sorted(unknown))}")
    for key in ("kind", "inputs", "output"):
        if key not in doc:
            raise ValueError(f"figure spec is missing required key {key!r}")
    inputs = doc["inputs"]
    if not isinstance(inputs, list) or not all(isinstance(p, str) for p in inputs):
        raise ValueError("inputs must be a list of run-directory paths")

    def _resolve(p: str) -> Path:
        path = Path(p)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        return path

    return FigureSpec(
        kind=doc["kind"],
        inputs=tuple(_resolve(p) for p in inputs),
        output=_resolve(doc["output"]),
        smoothing=doc.get("smoothing", DEFAULT_SMOOTHING),
    )


def spec_from_file(path: str | Path) -> list[FigureSpec]:
    """Load one figure spec, or a list of them, from a JSON file."""
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    base = path.parent
    if isinstance(doc, list):
        if not doc:
            raise ValueError(f"{path}: spec list is empty")
        return [spec_from_dict(d, base) for d in doc]
    return [spec_from_dict(doc, base)]


def _rolling_mean(x: np.ndarray, window: int) -> np.ndarray:
    window = min(window, len(x))
    return np.convolve(x, np.full(window, 1.0 / window), mode="valid")


def _labels(runs: list[RunData]) -> list[str]:
    names = [r.learner for r in runs]
    out = []
    for r in runs:
        if names.count(r.learner) > 1:
            out.append(f"{r.learner} (seed {r.seed})")
        else:
            out.append(r.learner)
    return out


def _run_k(run: RunData) -> int:
    """Candidate length of a run: the k used, or its rounded mean if varying."""
    k_used = run.columns["k_used"]
    if k_used.min() == k_used.max():
        return int(k_used[0])
    return int(round(float(k_used.mean())))


def _plot_series(
    ax: plt.Axes, runs: list[RunData], spec: FigureSpec
) -> dict[str, tuple[list[int], list[float]]]:
    series: dict[str, tuple[list[int], list[float]]] = {}
    for run, label in zip(runs, _labels(runs)):
        t = run.columns["t"]
        if spec.kind == "regret":
            x, y = t, run.columns["regret_cum"]
        elif spec.kind == "throughput":
            raw = run.columns["emitted"].cumsum() / run.columns["sim_wallclock_cum"]
            y = _rolling_mean(raw, spec.smoothing)
            x = t[len(t) - len(y):]
        else:  # avglen
            y = _rolling_mean(run.columns["n_accepted"].astype(float), spec.smoothing)
            x = t[len(t) - len(y):]
        ax.plot(x, y, label=label, linewidth=1.2)
        series[label] = (list(map(int, x)), list(map(float, y)))
    ax.set_xlabel("round")
    ax.set_ylabel(
        {
            "regret": "cumulative regret",
            "throughput": "emitted tokens / simulated time",
            "avglen": f"accepted tokens per round (window {spec.smoothing})",
        }[spec.kind]
    )
    ax.legend()
    return series


def _plot_gamma_vs_k(ax: plt.Axes, runs: list[RunData]) -> dict[str, Any]:
    alphas = {r.alpha for r in runs if r.alpha is not None}
    if not alphas:
        raise EmptyInputError(
            "gamma_vs_k needs summary.json with an 'alpha' field in each run directory"
        )
    if len(alphas) > 1:
        raise ValueError(f"gamma_vs_k inputs mix draft-cost ratios: {sorted(alphas)}")
    alpha = alphas.pop()

    points = sorted(
        ((_run_k(r), float(r.columns["gamma_emitted_cum"][-1])) for r in runs),
    )
    ks = np.array([p[0] for p in points])
    gammas = np.array([p[1] for p in points])
    acc = float(np.mean(np.concatenate([r.columns["acc_true"] for r in runs])))
    acc = min(acc, 1.0 - 1e-12)

    grid = np.arange(1, max(int(ks.max()), 16) + 1)
    cap = grid / (alpha * grid + 1.0)
    expected = (1.0 - acc**(grid + 0.0)) / ((1.0 - acc) * (alpha * grid + 1.0))
    k_star = int(grid[int(np.argmax(expected))])

    ax.plot(ks, gammas, "o-", label="measured (emitted)", linewidth=1.2)
    ax.plot(grid, cap, "--", color="gray", label=r"cap $k/(\alpha k+1)$")
    ax.plot(
        grid, expected, ":", color="tab:orange",
        label=f"expected at acc={acc:.3f}",
    )
    ax.plot(
        [k_star], [expected[k_star - 1]], marker="*", markersize=14,
        color="tab:red", linestyle="none", label=f"maximum at k={k_star}",
    )
    ax.set_xlabel("candidate length k")
    ax.set_ylabel("speedup over autoregressive")
    ax.legend()
    return {
        "max_k": k_star,
        "mean_acceptance": acc,
        "alpha": alpha,
        "points": [[int(k), float(g)] for k, g in points],
    }


def render(spec: FigureSpec) -> dict[str, Any]:
    """Render one figure and return what was drawn.

    The returned dict always has ``output`` and ``labels``; series figures
    add ``series`` (label -> (x, y)), and ``gamma_vs_k`` adds ``max_k``,
    ``mean_acceptance``, ``alpha``, and the measured ``points``.
    """
    runs = [load_run(p) for p in spec.inputs]
    meta: dict[str, Any] = {"output": str(spec.output), "labels": _labels(runs)}
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=_FIGSIZE)
        try:
            if spec.kind == "gamma_vs_k":
                meta.update(_plot_gamma_vs_k(ax, runs))
            else:
                meta["series"] = _plot_series(ax, runs, spec)
            ax.set_title(spec.kind.replace("_", " "))
            fig.tight_layout()
            out = Path(spec.output)
            out.parent.mkdir(parents=True, exist_ok=True)
            if out.suffix.lower() == ".svg":
                fig.savefig(out, format="svg", metadata={"Date": None})
            else:
                fig.savefig(out, format="png")
        finally:
            plt.close(fig)
    return meta
