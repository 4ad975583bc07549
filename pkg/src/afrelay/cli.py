"""Command line entry point ``afrelay``.

Exit status is 0 on success, 1 on a runtime or invariant failure and 2 when
the configuration cannot be used.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .analysis import chernoff_ser_mc, closed_form_bound
from .channel import make_rng
from .config import load_comparison, load_config, load_mapping
from .harness import ConfigError, build_profile, build_stats, run_experiment
from .validation import run_invariant_suite

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2


def _write(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _cmd_run(args) -> int:
    if "curves" in load_mapping(args.config):
        return _cmd_sweep(args)
    cfg = load_config(args.config)
    _write(run_experiment(cfg, n_jobs=args.jobs).to_csv(), args.output)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    curves = load_comparison(args.config)
    parts = []
    for i, (label, cfg) in enumerate(curves):
        logging.info("curve %s", label)
        parts.append(run_experiment(cfg, n_jobs=args.jobs).to_csv(label=label, header=i == 0))
    _write("".join(parts), args.output)
    return EXIT_OK


def _cmd_bound(args) -> int:
    cfg = load_config(args.config)
    stats = build_stats(cfg)
    lines = ["snr_db,chernoff,chernoff_stderr,closed_form\n"]
    for snr in cfg.snr_grid:
        prof = build_profile(cfg, snr)
        est = chernoff_ser_mc(stats, prof, args.trials, make_rng(cfg.seed, 8, int(round(snr * 1000)) % 2**32),
                              scheme=cfg.scheme, bit_algorithm=cfg.bit_algorithm)
        closed = closed_form_bound(stats, prof) if prof.P_total > np.e else float("nan")
        lines.append(f"{snr:.12g},{est.value:.12g},{est.stderr:.12g},{closed:.12g}\n")
    _write("".join(lines), args.output)
    return EXIT_OK


def _cmd_validate(args) -> int:
    results = run_invariant_suite(args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="afrelay", description="Relay-network feedback simulations.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a BER/BLER curve (or every curve of a comparison file) and write CSV")
    run.add_argument("config")
    run.add_argument("-o", "--output", help="CSV path (default: stdout)")
    run.add_argument("-j", "--jobs", type=int, default=1, help="worker processes over SNR points")
    run.set_defaults(func=_cmd_run)

    bnd = sub.add_parser("bound", help="Chernoff and closed-form SER bounds over the SNR grid")
    bnd.add_argument("config")
    bnd.add_argument("-o", "--output")
    bnd.add_argument("-n", "--trials", type=int, default=100_000, help="Monte Carlo draws per SNR point")
    bnd.set_defaults(func=_cmd_bound)

    cmp_ = sub.add_parser("sweep-compare", help="several labelled curves in one CSV")
    cmp_.add_argument("config")
    cmp_.add_argument("-o", "--output")
    cmp_.add_argument("-j", "--jobs", type=int, default=1)
    cmp_.set_defaults(func=_cmd_sweep)

    val = sub.add_parser("validate", help="run the built-in invariant checks")
    val.add_argument("--seed", type=int, default=2024)
    val.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"afrelay: config error in {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"afrelay: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
