#!/usr/bin/env python3
"""Pure-dephasing limit: exact propagation vs the product closed form."""

import argparse

from spinbath import RunConfig, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=10)
    ap.add_argument("--g", type=float, default=0.3)
    ap.add_argument("--seed", type=int, default=4)
    ap.add_argument("--t1", type=float, default=20.0)
    ap.add_argument("--site-amps", choices=["random", "uniform"], default="random")
    ap.add_argument("--out", default="out/dephasing")
    args = ap.parse_args()

    doc = {
        "experiment": "dephasing",
        "seed": args.seed,
        "step_scale": 0.005,
        "model": {"sample": {"M": args.m, "g": args.g, "zurek": True}},
        "grid": {"t0": 0.0, "t1": args.t1, "n_steps": 80},
        "dephasing": {"site_amps": args.site_amps},
    }
    manifest = run(RunConfig.from_dict(doc), args.out)
    print(f"wrote {sorted(manifest['files'])} to {args.out}")


if __name__ == "__main__":
    main()
