"""Command line entry point: ``dracbf <run|batch|sweep|ablate|oracle-check>``.

Exit status is 0 when the command completes, 2 for configuration errors and
3 for I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .harness import (FilterChoice, IoFailure, ablate, export, run_batch, run_episode,
                      sensitivity_sweep, sweep_table)
from .oracle import run_oracle_suite
from .sim.scenario import ConfigError, default_scenario, load_scenario

log = logging.getLogger("dracbf")

EXIT_CONFIG = 2
EXIT_IO = 3


def parse_seeds(text: str) -> tuple[int, int]:
    """``"base:count"`` (or a bare ``"base"``, meaning one seed) to a pair of ints."""
    try:
        if ":" in text:
            base, count = text.split(":", 1)
            base, count = int(base), int(count)
        else:
            base, count = int(text), 1
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must look like base:count, got {text!r}") from None
    if count < 1:
        raise argparse.ArgumentTypeError("seed count must be >= 1")
    return base, count


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario YAML/JSON file (default: built-in scenario)")
    common.add_argument("--seeds", type=parse_seeds, default=(0, 1), metavar="BASE:COUNT")
    common.add_argument("--filter", dest="filter_choice", default="dr-acbf",
                        choices=[c.value for c in FilterChoice])
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--format", dest="fmt", default="csv", choices=["csv", "jsonl"])
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--no-timing", action="store_true",
                        help="omit wall-clock columns so repeated runs export identical files")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dracbf", description="Risk-aware collision avoidance experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="single episode with a per-step trace")
    r.add_argument("--trace-every", type=int, default=10, help="print every N-th trace row")
    sub.add_parser("batch", parents=[common], help="seeded Monte Carlo batch")
    s = sub.add_parser("sweep", parents=[common], help="one batch per value of a parameter")
    s.add_argument("--param", default="H_max", help="H_max, d_cl, t_hd or a dotted scenario path")
    s.add_argument("--values", type=_float_list, default=[0.2, 0.4, 0.8])
    sub.add_parser("ablate", parents=[common], help="DR-CVaR trigger against the Gaussian fallback")
    o = sub.add_parser("oracle-check", parents=[common], help="projection against the exact QP")
    o.add_argument("--instances", type=int, default=1000)
    o.add_argument("--grid", type=int, default=100)
    return p


def _scenario(args):
    return load_scenario(args.config) if args.config else default_scenario()


def _write_rows(path: Path, rows: list[dict], fmt: str) -> Path:
    path = path.with_suffix("." + fmt)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            if fmt == "csv":
                w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
                w.writeheader()
                w.writerows(rows)
            else:
                for row in rows:
                    fh.write(json.dumps(row) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def _print_summary(label: str, summary) -> None:
    m = summary.means
    print(f"{label}: n={summary.n_runs} success={summary.success_rate:.1f}% "
          f"d_s={m['d_s']:.3f} m t_cp={m['t_cp']:.3f} ms v_cl={m['v_cl_at_trigger']:.2f} m/s "
          f"fingerprint={summary.fingerprint}")


def cmd_run(args) -> None:
    sc = _scenario(args)
    base, _ = args.seeds
    trace: list[dict] = []
    m = run_episode(sc, args.filter_choice, base, trace=trace)
    every = max(1, args.trace_every)
    for row in trace[::every]:
        print(" ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    print(json.dumps({k: (v if v == v and abs(v) != float("inf") else None) if isinstance(v, float) else v
                      for k, v in m.__dict__.items()}))
    if args.out:
        _write_rows(args.out / "trace", trace, args.fmt)
        export([m], args.out, args.fmt, stem="episode", include_timing=not args.no_timing)


def cmd_batch(args) -> None:
    sc = _scenario(args)
    base, count = args.seeds
    summary = run_batch(sc, count, base, args.filter_choice, args.workers)
    _print_summary(args.filter_choice, summary)
    if args.out:
        export(summary, args.out, args.fmt, include_timing=not args.no_timing)


def cmd_sweep(args) -> None:
    sc = _scenario(args)
    base, count = args.seeds
    rows = sensitivity_sweep(sc, args.param, args.values, count, base, args.filter_choice, args.workers)
    for value, summary in rows:
        _print_summary(f"{args.param}={value}", summary)
    if args.out:
        table = sweep_table(sc, rows, args.param)
        if args.no_timing:
            table = [{k: v for k, v in row.items() if k not in ("t_r", "t_cm", "t_cp")} for row in table]
        _write_rows(args.out / "sweep", table, args.fmt)
        for value, summary in rows:
            export(summary, args.out, args.fmt, stem=f"episodes_{args.param}_{value}",
                   include_timing=not args.no_timing)


def cmd_ablate(args) -> None:
    sc = _scenario(args)
    base, count = args.seeds
    res = ablate(sc, count, base, args.workers)
    _print_summary("cvar-on", res["on"])
    _print_summary("cvar-off", res["off"])
    print(f"gap: {res['gap']:.1f} percentage points")
    if args.out:
        export(res["on"], args.out, args.fmt, stem="cvar_on", include_timing=not args.no_timing)
        export(res["off"], args.out, args.fmt, stem="cvar_off", include_timing=not args.no_timing)
        _write_rows(args.out / "ablation", [{"on": res["on"].success_rate, "off": res["off"].success_rate,
                                             "gap": res["gap"], "n_runs": count, "seed_base": base}], args.fmt)


def cmd_oracle(args) -> None:
    base, _ = args.seeds
    report = run_oracle_suite(args.instances, args.grid, seed=base)
    for line in report.lines():
        print(line)
    print("PASS" if report.passed else "FAIL")
    if args.out:
        _write_rows(args.out / "oracle", [dict(report.__dict__, passed=report.passed)], args.fmt)


COMMANDS = {"run": cmd_run, "batch": cmd_batch, "sweep": cmd_sweep, "ablate": cmd_ablate,
            "oracle-check": cmd_oracle}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IoFailure, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
