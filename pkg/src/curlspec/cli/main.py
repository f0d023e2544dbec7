"""Batch command-line entry point.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import ConfigError, CurlSpecError
from .commands import COMMANDS
from .config import RunConfig, load_config, parse_config
from .output import envelope, write_json

log = logging.getLogger("curlspec")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curlspec", description="Curl eigenvalues, shape derivatives and shape "
                                                             "optimization on tetrahedral meshes.")
    p.add_argument("command", choices=sorted(COMMANDS), help="subcommand to run")
    p.add_argument("--config", type=Path, help="JSON run configuration (defaults apply when omitted)")
    p.add_argument("--out", type=Path, default=Path("curlspec-out"), help="output directory")
    p.add_argument("--sequential", action="store_true", help="single-threaded, bit-reproducible execution")
    p.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config is not None else RunConfig()
    if args.seed is not None:
        data = cfg.model_dump(mode="json")
        data["seed"] = args.seed
        cfg = parse_config(data)
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = args.out
    try:
        cfg = resolve_config(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    out.mkdir(parents=True, exist_ok=True)
    log.info("running %s into %s", args.command, out)
    try:
        payload = COMMANDS[args.command](cfg, out, args.sequential)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        write_json(out / "results.json", envelope(args.command, cfg, {"error": str(err)}, "config_error"))
        return 2
    except CurlSpecError as err:
        print(f"numerical failure: {type(err).__name__}: {err}", file=sys.stderr)
        write_json(out / "results.json", envelope(args.command, cfg,
                                                  {"error": str(err), "error_type": type(err).__name__},
                                                  "numerical_failure"))
        return 1
    write_json(out / "results.json", envelope(args.command, cfg, payload))
    print(out / "results.json")
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
