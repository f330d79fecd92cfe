"""Figure generation for simulator run outputs.

Reads the simulator's per-round ``rounds.csv`` / ``summary.json`` outputs
(by schema only; no code is shared with the simulator package) and renders
four figure kinds: cumulative-regret curves, simulated throughput over
rounds, average accepted length over rounds, and speedup versus candidate
length with the analytic cap overlaid.
"""

from .reader import CSV_COLUMNS, EmptyInputError, RunData, SchemaError, load_run
from .figures import FIGURE_KINDS, FigureSpec, render, spec_from_dict, spec_from_file

__all__ = [
    "CSV_COLUMNS",
    "EmptyInputError",
    "FIGURE_KINDS",
    "FigureSpec",
    "RunData",
    "SchemaError",
    "load_run",
    "render",
    "spec_from_dict",
    "spec_from_file",
]
