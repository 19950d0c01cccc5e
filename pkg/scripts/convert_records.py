"""Convert loosely formatted game exports into xqct record lines.

Many game databases can export a game as a start FEN, a move list in
ICCS coordinates (often written ``H2-E2`` and numbered) and a result word.
This stub maps that shape onto ``FEN | moves | result``:

    move   "1. H2-E2 H9-G7 2. h0g2"  ->  "h2e2 h9g7 h0g2"
    result red / 1-0 / win           ->  "1-0"
           black / 0-1 / loss        ->  "0-1"
           draw / 1/2-1/2 / =        ->  "1/2-1/2"
           anything else             ->  "*"

Input is tab-separated ``fen<TAB>moves<TAB>result`` (the FEN may be
empty for the standard start). Every converted game is replayed; games
with an illegal move are reported on stderr and dropped.
"""

import argparse
import csv
import re
import sys

from xqct.data import RecordError, parse_record

RESULTS = {
    "red": "1-0", "1-0": "1-0", "win": "1-0",
    "black": "0-1", "0-1": "0-1", "loss": "0-1",
    "draw": "1/2-1/2", "1/2-1/2": "1/2-1/2", "=": "1/2-1/2",
}
MOVE = re.compile(r"^([a-i][0-9])-?([a-i][0-9])$")


def convert_moves(text: str) -> list[str]:
    out = []
    for tok in text.split():
        tok = tok.lower()
        if re.fullmatch(r"\d+\.+", tok):
            continue  # move number
        m = MOVE.match(tok)
        if not m:
            raise ValueError(f"unrecognised move token {tok!r}")
        out.append(m.group(1) + m.group(2))
    return out


def convert_row(fen: str, moves: str, result: str) -> str:
    line = f"{fen.strip()} | {' '.join(convert_moves(moves))} | {RESULTS.get(result.strip().lower(), '*')}"
    parse_record(line)  # legality check
    return line


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src", help="tab-separated export")
    ap.add_argument("out", help="record file to write")
    args = ap.parse_args(argv)
    kept = dropped = 0
    with open(args.src, newline="", encoding="utf-8") as fh, open(args.out, "w", encoding="utf-8") as out:
        for n, row in enumerate(csv.reader(fh, delimiter="\t"), 1):
            if not row or row[0].startswith("#"):
                continue
            try:
                if len(row) != 3:
                    raise ValueError("expected three tab-separated fields")
                out.write(convert_row(*row) + "\n")
                kept += 1
            except (ValueError, RecordError) as exc:
                print(f"{args.src}:{n}: {exc}", file=sys.stderr)
                dropped += 1
    print(f"converted {kept} games, dropped {dropped}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
