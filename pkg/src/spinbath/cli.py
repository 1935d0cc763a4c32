"""Command line entry point.

One subcommand per experiment; each accepts --config plus a few overrides.
Exit codes: 0 success, 2 config error, 3 resource guard, 4 numerical guard.
"""

from __future__ import annotations

import argparse
import json
import sys

from .evolver import NormDriftError
from .harness import ConfigError, ResourceGuardError, RunConfig, load_config, run

EXPERIMENTS = ["exact", "diag", "compare", "scaling", "dephasing", "landscape", "notice"]

EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_NUMERICAL = 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinbath", description=__doc__)
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int, help="override the run seed")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--m", type=int, help="override the sampled bath size M")
        sp.add_argument("--g", type=float, help="override the coupling scale g")
        sp.add_argument("--jobs", type=int, help="parallel workers for sweeps")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.config:
            config = load_config(args.config)
        else:
            config = RunConfig.from_dict({"experiment": args.experiment, "seed": 0})
        config.raw["experiment"] = args.experiment
        if args.seed is not None:
            config.raw["seed"] = args.seed
        if args.out is not None:
            config.raw["out"] = args.out
        if args.jobs is not None:
            config.raw["jobs"] = args.jobs
        if args.m is not None or args.g is not None:
            sample = config.raw["model"].setdefault("sample", {"M": 6})
            if args.m is not None:
                sample["M"] = args.m
            if args.g is not None:
                sample["g"] = args.g
        manifest = run(config)
    except (ConfigError, json.JSONDecodeError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceGuardError as e:
        print(f"resource guard: {e}", file=sys.stderr)
        return EXIT_GUARD
    except NormDriftError as e:
        print(f"numerical guard: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps({"out": config.raw.get("out", "."), "files": manifest["files"]}, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
