"""Command-line driver: ``rfsgd <experiment> [--config FILE] [--key value ...]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, KEYS, ConfigError, resolve_config
from .experiments import run_experiment


def _parse_overrides(extra):
    """Turn ``--key value`` / ``--key=value`` pairs into a dict."""
    out = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
        else:
            try:
                value = next(it)
            except StopIteration:
                raise ConfigError(f"missing value for --{key}") from None
        out[key.replace("-", "_")] = value
    return out


def build_parser():
    p = argparse.ArgumentParser(
        prog="rfsgd",
        description="Random-feature averaged SGD experiments on the four-square distribution.",
        epilog="Config keys (usable as --key value): " + ", ".join(KEYS),
    )
    p.add_argument("experiment", help=f"one of: {', '.join(EXPERIMENTS)}")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.experiment not in EXPERIMENTS:
        parser.error(f"unknown experiment {args.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    try:
        overrides = _parse_overrides(extra)
        overrides["experiment"] = args.experiment
        cfg = resolve_config(args.config, overrides)
        result = run_experiment(cfg)
    except ConfigError as exc:
        parser.error(f"config error: {exc}")
    except OSError as exc:
        print(f"rfsgd: {exc}", file=sys.stderr)
        return 2
    print(result.summary)
    for f in result.files:
        print(f"  wrote {f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
