"""Load simulator run directories by their documented file schemas.

A run directory contains ``rounds.csv`` (one row per round, exact header
below) and optionally ``summary.json`` (run totals plus a config echo).
Only the schemas are relied on; nothing is imported from the simulator.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_COLUMNS: tuple[str, ...] = (
    "t",
    "learner",
    "regime",
    "seed",
    "k_used",
    "n_accepted",
    "emitted",
    "acc_true",
    "tv",
    "kl",
    "loss",
    "comparator_loss",
    "regret_cum",
    "gamma_accepted_cum",
    "gamma_emitted_cum",
    "sim_wallclock_cum",
)

_STR_COLUMNS = frozenset({"learner", "regime"})
_INT_COLUMNS = frozenset({"t", "seed", "k_used", "n_accepted", "emitted"})


class SchemaError(ValueError):
    """The CSV header does not match the documented round-log schema."""


class EmptyInputError(ValueError):
    """A required input has no usable rows."""


@dataclass(frozen=True)
class RunData:
    """One run directory, parsed: per-round columns plus summary fields."""

    path: Path
    learner: str
    regime: str
    seed: int
    alpha: float | None
    columns: dict[str, np.ndarray]

    def __len__(self) -> int:
        return len(self.columns["t"])


def _read_rounds(csv_path: Path) -> dict[str, np.ndarray]:
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{csv_path}: file is empty") from None
        if tuple(header) != CSV_COLUMNS:
            missing = [c for c in CSV_COLUMNS if c not in header]
            unexpected = [c for c in header if c not in CSV_COLUMNS]
            parts = []
            if missing:
                parts.append(f"missing columns: {', '.join(missing)}")
            if unexpected:
                parts.append(f"unexpected columns: {', '.join(unexpected)}")
            if not parts:
                parts.append("columns are out of order")
            raise SchemaError(f"{csv_path}: {'; '.join(parts)}")
        rows = list(reader)
    if not rows:
        raise EmptyInputError(f"{csv_path}: no data rows")
    cols: dict[str, np.ndarray] = {}
    by_index = list(zip(*rows))
    for i, name in enumerate(CSV_COLUMNS):
        raw = by_index[i]
        try:
            if name in _STR_COLUMNS:
                cols[name] = np.array(raw, dtype=object)
            elif name in _INT_COLUMNS:
                cols[name] = np.array([int(v) for v in raw], dtype=np.int64)
            else:
                cols[name] = np.array([float(v) for v in raw], dtype=np.float64)
        except ValueError as exc:
            raise SchemaError(f"{csv_path}: column {name!r}: {exc}") from None
    return cols


def load_run(run_dir: str | Path) -> RunData:
    """Parse one run directory.

    Raises ``FileNotFoundError`` if ``rounds.csv`` is absent, ``SchemaError``
    on a header/type mismatch, and ``EmptyInputError`` on a row-less CSV.
    ``summary.json`` is optional; when present it supplies ``alpha``.
    """
    run_dir = Path(run_dir)
    csv_path = run_dir / "rounds.csv"
    if not csv_path.is_file():
        raise FileNotFoundError(f"{run_dir}: no rounds.csv found")
    columns = _read_rounds(csv_path)

    alpha: float | None = None
    summary_path = run_dir / "summary.json"
    if summary_path.is_file():
        with open(summary_path) as fh:
            summary = json.load(fh)
        if isinstance(summary, dict) and isinstance(summary.get("alpha"), (int, float)):
            alpha = float(summary["alpha"])

    return RunData(
        path=run_dir,
        learner=str(columns["learner"][0]),
        regime=str(columns["regime"][0]),
        seed=int(columns["seed"][0]),
        alpha=alpha,
        columns=columns,
    )
