#!/usr/bin/env python3
"""Interaction-matrix-element scaling laws vs bath size (analytic, fast)."""

import argparse

from spinbath import RunConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m-list", type=int, nargs="+", default=[64, 256, 1024, 4096, 16384])
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--g", type=float, default=0.1)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="out/scaling")
    args = ap.parse_args()

    doc = {
        "experiment": "scaling",
        "seed": args.seed,
        "scaling": {"m_list": args.m_list, "samples": args.samples, "g": args.g, "t": args.t},
    }
    manifest = run(RunConfig.from_dict(doc), args.out)
    print(f"wrote {sorted(manifest['files'])} to {args.out}")


if __name__ == "__main__":
    main()
