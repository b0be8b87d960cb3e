#!/usr/bin/env python3
"""
adiamag: factorized adiabatic evolution of a charged particle in a slowly
rotating magnetic field.

Usage:
    python adiamag.py geometry --config configs/latitude_loop.json --out out/geometry
    python adiamag.py evolve   --config configs/latitude_loop.json --out out/evolve
    python adiamag.py converge --config configs/latitude_sweep.json --out out/converge [--seed N]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import logging
import os
import sys

import config
from errors import ConfigError, NumericalError, StateError
from experiments import run_converge, run_evolve, run_geometry
from report_writer import ReportWriter
from run_config import load_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("adiamag")


def configure_logging(out_dir=None, log_name=config.LOG_FILE, quiet=False, verbose=config.VERBOSE_MODE):
    """Stream handler always, file handler in the output directory when given."""
    level = logging.WARNING if quiet else (logging.DEBUG if verbose else logging.INFO)
    handlers = [logging.StreamHandler()]
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        handlers.append(logging.FileHandler(os.path.join(out_dir, log_name), encoding="utf-8"))
    logging.basicConfig(level=level, format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
                        handlers=handlers, force=True)


def build_parser():
    parser = argparse.ArgumentParser(prog="adiamag", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("geometry", "frames, E(s), sigma(s), d(s), phi_P and the solid angle"),
                       ("evolve", "direct vs factorized evolution, alpha and the wavepacket check"),
                       ("converge", "T sweep with fitted convergence orders")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, help="run configuration (JSON)")
        cmd.add_argument("--out", required=True, help="output directory")
        cmd.add_argument("--seed", type=int, default=None, help="override the config's seed")
        cmd.add_argument("--quiet", action="store_true", help="warnings and errors only")
        cmd.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def run(args):
    cfg = load_config(args.config, seed=args.seed)
    configure_logging(args.out, cfg.outputs["log"], args.quiet, args.verbose or config.VERBOSE_MODE)
    writer = ReportWriter(args.out)
    log.info("%s: config %s", args.command, args.config)

    if args.command == "geometry":
        result = run_geometry(cfg)
        writer.save_csv(cfg.outputs["frames"], result.columns, result.rows)
        writer.save_json(cfg.outputs["summary"], result.summary)
    elif args.command == "evolve":
        result = run_evolve(cfg)
        writer.save_csv(cfg.outputs["trajectory"], result.columns, result.rows)
        writer.save_json(cfg.outputs["summary"], result.summary)
    else:
        result = run_converge(cfg)
        writer.save_json(cfg.outputs["sweep"], result.rows)
        writer.save_json(cfg.outputs["summary"], result.summary)
        if not result.summary["passed"]:
            log.warning("✗ map_error order outside %s", list(config.ORDER_WINDOW))
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(quiet=args.quiet, verbose=args.verbose or config.VERBOSE_MODE)
    try:
        return run(args)
    except ConfigError as e:
        log.error("✗ configuration error: %s", e)
        return EXIT_CONFIG
    except (NumericalError, StateError) as e:
        log.error("✗ numerical failure: %s", e)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
