#!/usr/bin/env python3
"""Phase landscape over branch labels with extremal selection and weights."""

import argparse

from spinbath import RunConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=8)
    ap.add_argument("--g", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=9)
    ap.add_argument("--t1", type=float, default=3.0)
    ap.add_argument("--mode", choices=["bloch-random", "product", "polarized"],
                    default="bloch-random")
    ap.add_argument("--out", default="out/landscape")
    args = ap.parse_args()

    doc = {
        "experiment": "landscape",
        "seed": args.seed,
        "model": {"sample": {"M": args.m, "g": args.g}},
        "ensemble": {"mode": args.mode},
        "grid": {"t0": 0.0, "t1": args.t1, "n_steps": 12},
    }
    manifest = run(RunConfig.from_dict(doc), args.out)
    print(f"wrote {sorted(manifest['files'])} to {args.out}")


if __name__ == "__main__":
    main()
