"""Command line front end: sweeps, single-trial dumps, fixtures, validation.

Exit codes: 0 success, 1 configuration error (including unknown flags),
2 runtime failure.  Progress goes to stderr; result data goes to files
(sweep) or stdout (trial/fixtures).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .aud import predicted_search_space
from .harness import (
    ConfigError,
    ExperimentConfig,
    config_from_file,
    inspect_trial,
    parse_snr_spec,
    run_sweep,
)
from .preambles import zc_sequence
from .signatures import matrix_4x6

__all__ = ["main", "entry"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> _Parser:
    p = _Parser(prog="ldsaud", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key=value configuration file")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--seed", type=int, help="base trial seed")
    common.add_argument("--threads", type=int, help="cap worker threads")
    common.add_argument("--detector", action="append", help="detector tag (repeatable)")
    common.add_argument("--snr", help="SNR grid, 'start:step:stop' or list of dB values")
    common.add_argument("--lambda", dest="lambdas", action="append", type=float,
                        help="user sparsity (repeatable)")
    common.add_argument("--trials", type=int, help="trials per grid point")

    sub.add_parser("sweep", parents=[common], help="run a Monte Carlo sweep, write CSV")

    t = sub.add_parser("trial", parents=[common], help="run one seeded trial")
    t.add_argument("--verbose", action="store_true",
                   help="dump correlations, busy map, loads, sets, zero counts")

    f = sub.add_parser("fixtures", help="emit reference tables")
    f.add_argument("--matrix", action="store_true", help="print the 4x6 toy matrix")
    f.add_argument("--zc-table", action="store_true",
                   help="print cyclic autocorrelation magnitudes of the base sequence")
    f.add_argument("--search-space", action="store_true",
                   help="print the predicted combination count of the load-aided detector")
    f.add_argument("--lambda", dest="lam", type=float, default=0.1)
    f.add_argument("--wr", type=int, default=4, help="row weight")
    f.add_argument("--ls", type=int, default=39, help="number of sub-carriers")
    f.add_argument("--root", type=int, default=1)
    f.add_argument("--length", type=int, default=39)

    v = sub.add_parser("validate", help="check a configuration file")
    v.add_argument("--config", required=True)
    return p


def _load_config(args) -> ExperimentConfig:
    overrides = {}
    if args.out is not None:
        overrides["out_path"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.detector:
        overrides["detectors"] = tuple(args.detector)
    if args.snr is not None:
        overrides["snr_grid"] = parse_snr_spec(args.snr)
    if args.lambdas:
        overrides["lambdas"] = tuple(args.lambdas)
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.config:
        return config_from_file(args.config, overrides)
    return replace(ExperimentConfig(), **overrides)


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    cfg.validate()
    run_sweep(cfg, out_path=cfg.out_path, progress=True)
    print(f"wrote {cfg.out_path}", file=sys.stderr)
    return 0


def _fmt_vec(values, fmt) -> str:
    return " ".join(format(v, fmt) for v in values)


def _cmd_trial(args) -> int:
    cfg = _load_config(args)
    cfg.validate()
    detector = cfg.detectors[0]
    lam = cfg.lambdas[0]
    snr = cfg.snr_grid[0]
    dump = inspect_trial(cfg, detector, lam, snr, cfg.seed)
    counts = dump["counts"]
    print(f"detector {detector}  lambda {lam:g}  snr {snr:g} dB  seed {cfg.seed}")
    print(f"active   : {_fmt_vec(dump['activity'], 'd')}")
    if args.verbose:
        print(f"R        : {_fmt_vec(dump['R'], '.4f')}")
        print(f"busy     : {_fmt_vec(dump['busy'], 'd')}")
        print(f"loads    : {_fmt_vec(dump['loads'], 'd')}")
    print(f"superset : {_fmt_vec(dump['superset'], 'd')}")
    print(f"refined  : {_fmt_vec(dump['refined'], 'd')}")
    if args.verbose and dump["zero_counts"]:
        zc = " ".join(f"{u}:{n}" for u, n in sorted(dump["zero_counts"].items()))
        print(f"zeros    : {zc}")
    sym = counts.symbol_errors if counts.symbol_errors is not None else "-"
    print(f"counts   : missed {counts.missed}  false {counts.false}  symbol_errors {sym}")
    return 0


def _cmd_fixtures(args) -> int:
    wanted = args.matrix or args.zc_table or args.search_space
    if not wanted:
        raise ConfigError("fixtures", "pick at least one of --matrix/--zc-table/--search-space")
    if args.matrix:
        m = matrix_4x6()
        print(f"{m.n_subcarriers} {m.n_users}")
        for row in m.entries:
            print(" ".join(str(int(v)) for v in row))
    if args.zc_table:
        z = zc_sequence(args.root, args.length)
        print(f"lag |autocorr|  (root {args.root}, length {args.length})")
        for lag in range(args.length):
            mag = abs(np.vdot(np.roll(z, -lag), z)) / args.length
            print(f"{lag:3d} {mag:.12f}")
    if args.search_space:
        print(f"{predicted_search_space(args.lam, args.wr, args.ls):g}")
    return 0


def _cmd_validate(args) -> int:
    cfg = config_from_file(args.config)
    cfg.validate()
    print("ok", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "trial":
            return _cmd_trial(args)
        if args.command == "fixtures":
            return _cmd_fixtures(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("interrupted; partial results flushed", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
