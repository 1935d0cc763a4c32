#!/usr/bin/env python3
"""Diagonal approximation vs exact propagation, with an optional g-sweep."""

import argparse

from spinbath import RunConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=10)
    ap.add_argument("--g", type=float, default=0.05)
    ap.add_argument("--e", type=float, default=2.0, help="system self-energy E")
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--t1", type=float, default=5.0)
    ap.add_argument("--sweep", action="store_true", help="also run the g-sweep")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="out/compare")
    args = ap.parse_args()

    doc = {
        "experiment": "compare",
        "seed": args.seed,
        "jobs": args.jobs,
        "model": {"sample": {"M": args.m, "g": args.g, "E": args.e}},
        "grid": {"t0": 0.0, "t1": args.t1, "n_steps": 20},
    }
    if args.sweep:
        doc["compare"] = {"g_sweep": [0.01, 0.05, 0.1, 0.3, 1.0], "n_seeds": 20}
    manifest = run(RunConfig.from_dict(doc), args.out)
    print(f"wrote {sorted(manifest['files'])} to {args.out}")


if __name__ == "__main__":
    main()
