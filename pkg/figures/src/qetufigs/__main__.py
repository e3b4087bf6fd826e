"""Render bundled recipes: python -m qetufigs --data results --out figures_out"""
import argparse
import sys

from .recipes import RecipeError, bundled_recipes, render, render_available


def main(argv=None):
    ap = argparse.ArgumentParser(prog="qetufigs")
    ap.add_argument("--data", default="results", help="directory of toolkit CSVs")
    ap.add_argument("--out", default="figures_out", help="image output directory")
    ap.add_argument("--recipe", default=None, help="render one recipe by name")
    args = ap.parse_args(argv)
    try:
        if args.recipe:
            matches = [r for r in bundled_recipes() if r.name == args.recipe]
            if not matches:
                raise RecipeError(f"unknown recipe {args.recipe!r}")
            paths = [render(matches[0], args.data, args.out)]
        else:
            paths = render_available(args.data, args.out)
    except RecipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
