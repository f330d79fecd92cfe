"""Command-line entry point: run / sweep / validate / report.

Exit codes: 0 success, 1 configuration error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, load_experiment, load_sweep
from .runner import run_experiment, run_sweep
from .validate import run_checks


def _cmd_run(args) -> int:
    cfg = load_experiment(args.config)
    summaries = run_experiment(cfg)
    for seed, summary in summaries.items():
        print(
            f"seed={seed} regret={summary.regret:.4f} "
            f"gamma_accepted={summary.gamma_accepted:.4f} "
            f"gamma_emitted={summary.gamma_emitted:.4f}"
        )
    print(f"wrote {len(summaries)} run(s) under {cfg.output_dir}")
    return 0


def _cmd_sweep(args) -> int:
    configs = load_sweep(args.configs)
    table = run_sweep(configs, jobs=args.jobs)
    out = Path(configs[0].output_dir).parent / "sweep_summary.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(table, indent=2) + "\n")
    failed = sum(len(entry["failed"]) for entry in table["runs"])
    print(f"sweep complete: {len(table['runs'])} config(s), {failed} failed run(s)")
    print(f"summary table: {out}")
    return 0


def _cmd_validate(args) -> int:
    checks = run_checks(quick=args.quick)
    ok = True
    for check in checks:
        print(check.line())
        ok = ok and check.ok
    print(f"{sum(c.ok for c in checks)}/{len(checks)} checks passed")
    return 0 if ok else 2


def _cmd_report(args) -> int:
    root = Path(args.dir)
    rows = []
    for summary_path in sorted(root.glob("**/summary.json")):
        with open(summary_path) as fh:
            s = json.load(fh)
        rows.append(s)
    if not rows:
        print(f"no summary.json files under {root}", file=sys.stderr)
        return 1
    header = f"{'learner':<12}{'regime':<12}{'seed':>6}{'regret':>12}{'gam_acc':>10}{'gam_emit':>10}"
    print(header)
    for s in rows:
        print(
            f"{s['learner']:<12}{s['regime']:<12}{s['seed']:>6}"
            f"{s['regret']:>12.4f}{s['gamma_accepted']:>10.4f}{s['gamma_emitted']:>10.4f}"
        )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="specsim",
        description="Speculative-decoding simulator with online-learned draft models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config", help="path to experiment JSON")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="execute a list of experiment configs")
    p_sweep.add_argument("configs", help="path to sweep JSON (list of configs)")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = sub.add_parser("validate", help="run the theory-validation suite")
    p_val.add_argument("--quick", action="store_true", help="exact-arithmetic subset only")
    p_val.set_defaults(func=_cmd_validate)

    p_rep = sub.add_parser("report", help="tabulate summaries under a directory")
    p_rep.add_argument("dir", help="run output directory")
    p_rep.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
