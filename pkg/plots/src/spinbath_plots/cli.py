"""Command line figure renderer.

Usage:
    plot --spec <json> [--data-check]
    plot <kind> <input...> -o <png>
    plot <kind> <input...> --data-check
    plot check <artifact...>          # validate any simulator artifact by name

Exit codes: 0 success, 2 bad arguments or schema mismatch.
"""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, SchemaError, check_artifact, data_check, render

EXIT_SCHEMA = 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plot", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("kind", nargs="?", choices=KINDS + ["check"],
                   help="figure kind, or 'check' to validate artifacts")
    p.add_argument("inputs", nargs="*", help="input CSV/JSON artifact(s)")
    p.add_argument("-o", "--out", help="output image path")
    p.add_argument("--spec", help="JSON figure spec (kind, inputs, out, title, labels)")
    p.add_argument("--data-check", action="store_true",
                   help="validate input schemas without rendering")
    p.add_argument("--title", default="")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.kind == "check":
            if not args.inputs:
                raise SchemaError("'check' needs at least one artifact path")
            for path in args.inputs:
                check_artifact(path)
                print(f"ok: {path}")
            return 0
        if args.spec:
            spec = FigureSpec.from_json(args.spec)
        elif args.kind:
            if not args.inputs:
                raise SchemaError(f"figure kind {args.kind!r} needs input file(s)")
            spec = FigureSpec(kind=args.kind, inputs=args.inputs,
                              out=args.out or "", title=args.title)
        else:
            raise SchemaError("provide --spec or a figure kind")
        if args.data_check:
            data_check(spec)
            print(f"ok: {', '.join(spec.inputs)}")
            return 0
        out = render(spec)
        print(f"wrote {out}")
        return 0
    except (SchemaError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
