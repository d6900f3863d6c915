"""Command-line interface.

Subcommands map to the experiment families in :mod:`zerolab.harness`:
``equidistribute``, ``bergman``, ``cuspforms``, plus ``validate-config``.
Exit status 0 on success, 2 on configuration errors, 3 on numerical
failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness
from .errors import ConfigError, ZerolabError

_COMMANDS = {
    "equidistribute": harness.cmd_equidistribute,
    "bergman": harness.cmd_bergman,
    "cuspforms": harness.cmd_cuspforms,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="zerolab",
        description="Zero statistics of random holomorphic sections")
    sub = p.add_subparsers(dest="command", required=True)
    for name in [*_COMMANDS, "validate-config"]:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, metavar="PATH",
                       help="JSON experiment configuration")
        s.add_argument("--set", action="append", default=[], metavar="K=V",
                       dest="overrides",
                       help="override a config key (dotted path, JSON value)")
        s.add_argument("--workers", type=int, default=None, metavar="K")
        s.add_argument("--seed", type=int, default=None, metavar="S")
        s.add_argument("--out", default=None, metavar="DIR")
    return p


def _load_config(args) -> harness.ExperimentConfig:
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    cfg = harness.ExperimentConfig.from_json(path.read_text())
    overrides = list(args.overrides)
    if args.workers is not None:
        overrides.append(f"workers={args.workers}")
    if args.seed is not None:
        overrides.append(f"master_seed={args.seed}")
    if args.out is not None:
        overrides.append(f"outdir={args.out}")
    if overrides:
        cfg = cfg.with_overrides(overrides)
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "validate-config":
        print(f"config ok (hash {cfg.config_hash()})")
        return 0
    try:
        rec = _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ZerolabError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return 3
    print(f"wrote {rec.outdir}: {', '.join(rec.files)}")
    if rec.failures:
        print(f"{len(rec.failures)} failed samples (see manifest.json)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
