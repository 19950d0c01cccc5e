"""Regenerate the bundled opening book from seeded self-play with the initial material-only weights."""

import argparse

from xqct.board import format_fen
from xqct.data import default_openings_path
from xqct.features import FeatureLayout
from xqct.harness import make_openings
from xqct.training import init_weights


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--out", default=str(default_openings_path()))
    args = ap.parse_args()
    ws = init_weights(FeatureLayout(("MATL", "LOC")))
    book = make_openings(ws, args.count, args.seed)
    with open(args.out, "w") as fh:
        fh.write(f"# {args.count} openings, 2-6 quiet plies of self-play, seed {args.seed}\n")
        for pos in book:
            fh.write(format_fen(pos) + "\n")
    print(f"wrote {len(book)} openings to {args.out}")


if __name__ == "__main__":
    main()
