"""Command line entry point.

    privharq run CONFIG [--seed S] [--blocks N] [--out SUMMARY.json] [--trace TRACE.csv]
    privharq sweep CONFIG [--seed S] [--blocks N] [--out ROWS.csv] [--plot FIG.svg] [--workers W]
    privharq plot ROWS.csv FIG.svg

Exit status is 0 on success, 1 for invalid input and 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from privharq.config import SweepSpec, parse_config
from privharq.experiment import SweepError, csv_text, emit_csv, emit_plot, read_csv, run_sweep
from privharq.sim import ConfigError, SimConfig, run

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _override(cfg: SimConfig, args) -> SimConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.blocks is not None:
        changes["n_blocks"] = args.blocks
        if cfg.warmup_blocks is not None and cfg.warmup_blocks >= args.blocks:
            changes["warmup_blocks"] = None
    return replace(cfg, **changes).validate() if changes else cfg


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def _summary_dict(s) -> dict:
    out = {k: _jsonable(v) for k, v in vars(s).items() if k not in ("trace", "horizon")}
    out.update(
        empirical_outage_fraction=s.empirical_outage_fraction,
        markov_bound_avg=s.markov_bound_avg,
        utility_avg=s.utility_avg,
        dummy_fraction_private=s.dummy_fraction(0),
        dummy_fraction_open=s.dummy_fraction(1),
        horizon=_jsonable(s.horizon),
    )
    return out


def _write_trace(trace: dict, path) -> None:
    cols = list(trace)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([c for c in cols if trace[c].ndim == 1] + [
            f"{c}_{j}" for c in cols if trace[c].ndim == 2 for j in range(trace[c].shape[1])
        ])
        for i in range(len(trace["k"])):
            row = [trace[c][i] for c in cols if trace[c].ndim == 1]
            row += [x for c in cols if trace[c].ndim == 2 for x in trace[c][i]]
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else int(x) for x in row])


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    if isinstance(cfg, SweepSpec):
        raise ConfigError(["config describes a sweep; use the 'sweep' subcommand"])
    cfg = _override(cfg, args)
    if args.trace:
        cfg = replace(cfg, metrics_granularity="per_block")
    summary = run(cfg)
    text = json.dumps(_summary_dict(summary), indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.trace:
        _write_trace(summary.trace, args.trace)
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = parse_config(args.config)
    if not isinstance(spec, SweepSpec):
        raise ConfigError(["config has no 'sweep' object"])
    spec = replace(spec, base=_override(spec.base, args))
    rows = run_sweep(spec, workers=args.workers)
    if args.out:
        emit_csv(rows, args.out)
    else:
        sys.stdout.write(csv_text(rows))
    if args.plot:
        emit_plot(rows, args.plot, axis_label=spec.axis)
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        rows = read_csv(args.csv)
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    if not rows:
        raise ConfigError([f"{args.csv}: no rows"])
    emit_plot(rows, args.svg)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage mistakes are invalid input, not runtime failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="privharq", description="Uplink privacy/HARQ drift-plus-penalty simulator")
    p.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="JSON configuration file")
        sp.add_argument("--seed", type=int, help="override the run seed")
        sp.add_argument("--blocks", type=int, help="override n_blocks")
        sp.add_argument("--out", help="output file (default: stdout)")

    r = sub.add_parser("run", help="simulate one configuration and print a JSON summary")
    common(r)
    r.add_argument("--trace", help="write the per-block trace to this CSV file")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a parameter sweep and write CSV rows")
    common(s)
    s.add_argument("--plot", help="also write an SVG rate plot")
    s.add_argument("--workers", type=int, help="worker processes (default: $PRIVHARQ_WORKERS or 1)")
    s.set_defaults(func=cmd_sweep)

    pl = sub.add_parser("plot", help="plot a sweep CSV as SVG")
    pl.add_argument("csv")
    pl.add_argument("svg")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such file", file=sys.stderr)
        return EXIT_INVALID
    except (SweepError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
