"""Operator command line: run scenarios, sweep parameters, analyze data.

Subcommands

* ``run``      — execute one scenario, emit trace.csv / report.csv /
                 resolved.config into the output directory.
* ``sweep``    — rerun a scenario across a list of values for one scalar
                 parameter, one subdirectory per value plus a sweep.csv
                 summary; runs execute concurrently up to ``--jobs``.
* ``analyze``  — bin a timestamp,value measurement CSV into a time-of-day
                 profile (profile.csv) and optionally score periodic
                 deviations at a given period.

Output roots resolve as: a relative ``--out`` lands under ``$GRIDPULSE_OUT``
when that is set, under the current directory otherwise; an absolute
``--out`` is taken as is.

Exit codes: 0 success, 1 validation or usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .analysis import (
    detect_periodic_deviation,
    load_frequency_csv,
    stability_metrics,
    time_of_day_profile,
    write_profile_csv,
    write_report_csv,
)
from .config import ConfigError, config_from_dict, load_config, resolved_dict, save_config
from .engine import run as run_scenario
from .engine import write_trace
from .market import FLOAT_FMT

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2

OUT_ROOT_ENV = "GRIDPULSE_OUT"

_MASK64 = (1 << 64) - 1

# sweepable scalar parameters: name -> (section attribute, value parser)
SWEEPABLE = {
    "act_probability": ("policy", float),
    "resume_wait_max": ("policy", int),
    "threshold_low": ("policy", float),
    "threshold_high": ("policy", float),
    "ewma_lambda": ("policy", float),
    "bargain_factor": ("policy", float),
    "voltage_limit": ("policy", float),
    "permits_per_tick": ("coordinator", int),
}


def mix64(index: int) -> int:
    """splitmix64 finalizer; spreads small sweep indices over 64 bits."""
    x = (index + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def derive_seed(base_seed: int, index: int) -> int:
    """Per-run sweep seed: appending values never reshuffles earlier rows."""
    return (base_seed ^ mix64(index)) & _MASK64


def _out_dir(arg: str | None) -> Path:
    out = Path(arg) if arg else Path(".")
    if not out.is_absolute():
        root = os.environ.get(OUT_ROOT_ENV)
        if root:
            out = Path(root) / out
    return out


def _fmt_value(value) -> str:
    return str(value) if isinstance(value, int) else FLOAT_FMT % value


class _Parser(argparse.ArgumentParser):
    """argparse reports usage errors with exit code 2; this contract uses 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_scenario(config_path: str, seed_override: int | None):
    config = load_config(config_path)
    if seed_override is not None:
        config.run.seed = seed_override
    if config.run.seed is None:
        raise ConfigError("run.seed: missing; set it in the config or pass --seed")
    return config


def _emit_run(config, out: Path):
    """Run one scenario, write its three artifacts, return the report."""
    out.mkdir(parents=True, exist_ok=True)
    trace = run_scenario(config)
    write_trace(trace, out / "trace.csv")
    if trace.n_ticks:
        report = stability_metrics(trace, band=tuple(config.run.band))
        write_report_csv(report, out / "report.csv")
    else:
        report = None
        (out / "report.csv").write_text("metric,value\n")
    save_config(config, out / "resolved.config")
    return report


def cmd_run(args) -> int:
    try:
        config = _load_scenario(args.config, args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    out = _out_dir(args.out)
    try:
        _emit_run(config, out)
    except ConfigError as exc:  # e.g. a market price file that is too short
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    for name in ("trace.csv", "report.csv", "resolved.config"):
        print(out / name)
    return EXIT_OK


def _sweep_worker(doc: dict, out_dir: str):
    """One sweep value, in its own process when --jobs > 1."""
    report = _emit_run(config_from_dict(doc), Path(out_dir))
    return (
        report.min_rel_voltage,
        report.band_crossings,
        report.settling_tick,
        report.sync_index,
    )


def cmd_sweep(args) -> int:
    if args.param not in SWEEPABLE:
        known = ", ".join(sorted(SWEEPABLE))
        print(f"error: unknown sweep parameter {args.param!r} (one of: {known})", file=sys.stderr)
        return EXIT_USAGE
    section, parse = SWEEPABLE[args.param]
    try:
        values = [parse(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError:
        print(f"error: --values must be comma-separated {parse.__name__}s", file=sys.stderr)
        return EXIT_USAGE
    if not values:
        print("error: --values is empty", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = _load_scenario(args.config, args.seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    if config.run.n_ticks == 0:
        print("error: run.n_ticks: a sweep needs at least one tick per run", file=sys.stderr)
        return EXIT_USAGE

    base_seed = config.run.seed
    base_doc = resolved_dict(config)
    jobs = []
    for i, value in enumerate(values):
        doc = copy.deepcopy(base_doc)
        doc[section][args.param] = value
        if args.param == "permits_per_tick":
            doc["coordinator"]["mode"] = "time_division"
        doc["run"]["seed"] = derive_seed(base_seed, i)
        jobs.append(doc)
    try:
        for doc in jobs:  # fail before any run on an invalid swept value
            config_from_dict(doc)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = _out_dir(args.out)
    dirs = [str(out / f"{args.param}={_fmt_value(v)}") for v in values]
    try:
        out.mkdir(parents=True, exist_ok=True)
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                rows = list(pool.map(_sweep_worker, jobs, dirs))
        else:
            rows = [_sweep_worker(doc, d) for doc, d in zip(jobs, dirs)]
        with open(out / "sweep.csv", "w", newline="") as fh:
            fh.write("value,min_rel_voltage,band_crossings,settling_tick,sync_index\n")
            for value, (min_rel, crossings, settling, sync) in zip(values, rows):
                fh.write(
                    f"{_fmt_value(value)},{FLOAT_FMT % min_rel},{crossings},"
                    f"{'' if settling is None else settling},"
                    f"{'' if sync is None else FLOAT_FMT % sync}\n"
                )
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(out / "sweep.csv")
    return EXIT_OK


def cmd_analyze(args) -> int:
    out = _out_dir(args.out)
    try:
        samples = list(load_frequency_csv(args.input))
        profile = time_of_day_profile(samples, args.bin_width)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_profile_csv(profile, out / "profile.csv")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(out / "profile.csv")
    if args.period is not None:
        try:
            score = detect_periodic_deviation(profile, args.period)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"periodic_deviation_score,{FLOAT_FMT % score}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridpulse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and emit its artifacts")
    p_run.add_argument("--config", required=True, help="scenario YAML file")
    p_run.add_argument("--seed", type=int, default=None, help="override run.seed")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="rerun a scenario over values of one parameter")
    p_sweep.add_argument("--config", required=True, help="scenario YAML file")
    p_sweep.add_argument("--seed", type=int, default=None, help="override the base seed")
    p_sweep.add_argument("--out", default=None, help="output directory")
    p_sweep.add_argument("--param", required=True, help="parameter to sweep")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    p_sweep.set_defaults(func=cmd_sweep)

    p_an = sub.add_parser("analyze", help="time-of-day profile of a measurement CSV")
    p_an.add_argument("input", help="CSV with timestamp,value columns")
    p_an.add_argument("--bin-width", type=int, default=1, help="bin width in seconds")
    p_an.add_argument("--period", type=int, default=None, help="score deviations at this period (seconds)")
    p_an.add_argument("--out", default=None, help="output directory")
    p_an.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
