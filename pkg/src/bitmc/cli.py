"""``bitmc`` command line entry point.

Usage::

    bitmc recover|sweep-sigma|sweep-n|recsys-eval --config FILE [--out DIR] [--paper-scale]

Exit codes: 0 success, 2 configuration error, 3 dataset missing (skipped),
4 solver did not converge (recover only).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .experiments import ConfigError, DatasetMissing, load_config, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SKIPPED = 3
EXIT_NONCONVERGED = 4

COMMANDS = {
    "recover": "recover",
    "sweep-sigma": "sweep_sigma",
    "sweep-n": "sweep_n",
    "recsys-eval": "recsys_eval",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bitmc", description="1-bit matrix completion experiments")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment configuration")
    parser.add_argument("--out", help="output directory (overrides the config's 'output')")
    parser.add_argument("--paper-scale", action="store_true", help="run sweeps at full size (d=500 or d=200)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        kind = COMMANDS[args.command]
        if cfg.kind != kind:
            raise ConfigError(f"config kind {cfg.kind!r} does not match command {args.command!r}")
        if args.out:
            cfg = replace(cfg, output=args.out)
        if args.paper_scale:
            cfg = cfg.full_scale()
    except ConfigError as exc:
        print(f"bitmc: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = run(cfg)
    except DatasetMissing as exc:
        print(f"skipped: dataset ({exc})")
        return EXIT_SKIPPED
    except (OSError, ValueError) as exc:
        print(f"bitmc: error: {exc}", file=sys.stderr)
        return 1

    if kind == "recover":
        print(json.dumps({k: result["solver"][k] for k in ("converged", "status", "iterations", "residual")}))
        return EXIT_OK if result["solution"].converged else EXIT_NONCONVERGED
    if kind == "recsys_eval":
        sys.stdout.write(result["csv"])
    elif kind == "sweep_n":
        print(json.dumps(result["slopes"], indent=2))
    else:
        for row in result["summary"]:
            print(f"{row['program']:8s} sigma={row['sigma']:.4g} mean_rel_fro_sq={row['mean_rel_fro_sq']}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
