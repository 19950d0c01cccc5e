"""Command-line entry point: ``xqct <subcommand> ...``.

Every flag can also come from ``--config FILE``, a ``key=value`` file whose
keys are flag names (``batch=50``, ``max-iter=5``; dashes or
underscores both work). Command-line flags override the file. The worker
count defaults to ``$XQCT_THREADS`` when set.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .board import START_FEN, FenError, parse_fen, perft
from .data import default_openings_path, expand_samples, load_openings, load_records, save_records, samples_to_records
from .evaluation import load_weights
from .features import FeatureLayout, describe, extract, parse_sets
from .harness import run_match
from .search import DEFAULT_NODE_BUDGET
from .training import TrainerConfig, TrainingSample, init_weights, save_checkpoint, test_accuracy, train

log = logging.getLogger("xqct")


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("XQCT_THREADS", "1")))
    except ValueError:
        return 1


def read_config(path: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _weights_arg(text: str):
    """A weight file, or ``init`` for the material-only baseline."""
    if text == "init":
        return init_weights(FeatureLayout(("MATL", "LOC")))
    return load_weights(text, use_average=True)


def cmd_perft(args) -> int:
    print(perft(parse_fen(args.fen), args.depth))
    return 0


def cmd_features(args) -> int:
    layout = FeatureLayout(parse_sets(args.sets))
    vec = extract(parse_fen(args.fen), layout)
    for name, value in describe(vec, layout):
        print(f"{name}\t{value:+d}")
    return 0


def cmd_train(args) -> int:
    records = load_records(args.data)
    train_set, test_set = expand_samples(records, args.seed, args.train_fraction, args.limit)
    if not train_set or not test_set:
        log.error("%s: not enough positions to train", args.data)
        return 1
    cfg = TrainerConfig(
        depth=args.depth, batch_size=args.batch, workers=args.workers, max_iterations=args.max_iter, seed=args.seed
    )
    layout = FeatureLayout(parse_sets(args.sets))
    log.info("%d training and %d test positions, %d features", len(train_set), len(test_set), layout.total)
    result = train(train_set, test_set, cfg, layout=layout)
    save_checkpoint(args.out, result, cfg)
    for r in result.history:
        print(f"epoch {r.epoch}: updates={r.updates} mean|delta|={r.mean_abs_delta:.4f} accuracy={r.test_accuracy:.4f}")
    print(f"best epoch {result.best_epoch}, weights written to {args.out}")
    return 0


def cmd_accuracy(args) -> int:
    ws = load_weights(args.weights, use_average=True)
    records = load_records(args.data)
    samples = [s for rec in records for s in _record_samples(rec)]
    if not samples:
        log.error("%s: no positions", args.data)
        return 1
    print(f"{test_accuracy(ws, samples, args.depth):.4f}")
    return 0


def _record_samples(rec):
    return [TrainingSample(pos, m) for pos, m in rec.positions()]


def cmd_match(args) -> int:
    openings = load_openings(args.openings or default_openings_path())
    if args.count:
        openings = openings[: args.count]
    res = run_match(_weights_arg(args.a), _weights_arg(args.b), openings, args.nodes, args.workers, report=args.report)
    for g in res.games:
        print(f"opening {g.opening:3d} A={g.a_color:5s} {g.result:7s} plies={g.plies}")
    s = res.summary()
    print(f"A: +{s['wins']} ={s['draws']} -{s['losses']} win rate {s['win_rate']:.4f} +/- {s['stderr']:.4f}")
    return 0


def cmd_weights_show(args) -> int:
    ws = load_weights(args.weights, use_average=args.average)
    layout = ws.layout
    order = np.argsort(-np.maximum(np.abs(ws.w_o), np.abs(ws.w_e)), kind="stable")
    for i in order[: args.top]:
        print(f"{layout.feature_name(int(i))}\topening={ws.w_o[i]:.3f}\tendgame={ws.w_e[i]:.3f}")
    return 0


def cmd_synth(args) -> int:
    from .synthetic import SyntheticConfig, generate_samples, hidden_weights

    samples = generate_samples(hidden_weights(), SyntheticConfig(samples=args.samples, seed=args.seed))
    save_records(args.out, samples_to_records(samples))
    print(f"wrote {len(samples)} labelled positions to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xqct", description="Xiangqi comparison training toolkit")
    p.add_argument("--config", help="key=value file supplying defaults for any flag")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("perft", help="count leaf nodes of the legal move tree")
    s.add_argument("--fen", default=START_FEN)
    s.add_argument("--depth", type=int, default=1)
    s.set_defaults(func=cmd_perft)

    s = sub.add_parser("features", help="dump the sparse feature vector of a position")
    s.add_argument("--fen", default=START_FEN)
    s.add_argument("--sets", default="eval0", help="e.g. matl,loc or eval7 or eval0+aka")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("train", help="comparison-train weights on a record file")
    s.add_argument("--data", required=True)
    s.add_argument("--sets", default="matl,loc")
    s.add_argument("--depth", type=int, default=1)
    s.add_argument("--batch", type=int, default=1)
    s.add_argument("--workers", type=int, default=_default_workers())
    s.add_argument("--max-iter", type=int, default=20)
    s.add_argument("--train-fraction", type=float, default=0.8)
    s.add_argument("--limit", type=int, default=None, help="sample at most this many positions")
    s.add_argument("--out", default="weights.bin")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("accuracy", help="fraction of record moves ranked strictly first")
    s.add_argument("--weights", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--depth", type=int, default=1)
    s.set_defaults(func=cmd_accuracy)

    s = sub.add_parser("match", help="play A against B over an opening book")
    s.add_argument("--a", required=True, help="weight file, or 'init' for the material baseline")
    s.add_argument("--b", required=True, help="weight file, or 'init' for the material baseline")
    s.add_argument("--openings", default=None)
    s.add_argument("--count", type=int, default=None, help="use only the first COUNT openings")
    s.add_argument("--nodes", type=int, default=DEFAULT_NODE_BUDGET)
    s.add_argument("--workers", type=int, default=_default_workers())
    s.add_argument("--report", default=None, help="write JSON-lines game records here")
    s.set_defaults(func=cmd_match)

    s = sub.add_parser("weights", help="inspect weight files")
    wsub = s.add_subparsers(dest="weights_command", required=True)
    w = wsub.add_parser("show", help="largest-magnitude weights with feature names")
    w.add_argument("--weights", required=True)
    w.add_argument("--top", type=int, default=20)
    w.add_argument("--average", action="store_true", help="show the stored average instead")
    w.set_defaults(func=cmd_weights_show)

    s = sub.add_parser("synth", help="write records labelled by the hidden synthetic expert")
    s.add_argument("--out", required=True)
    s.add_argument("--samples", type=int, default=5000)
    s.set_defaults(func=cmd_synth)
    return p


def _subparsers(parser: argparse.ArgumentParser):
    yield parser
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for child in action.choices.values():
                yield from _subparsers(child)


def _apply_config(parser: argparse.ArgumentParser, values: dict[str, str]) -> None:
    known = set()
    for p in _subparsers(parser):
        for action in p._actions:
            if action.dest in values:
                known.add(action.dest)
                raw = values[action.dest]
                if isinstance(action, argparse._StoreTrueAction):
                    action.default = raw.lower() in ("1", "true", "yes", "on")
                else:
                    action.default = action.type(raw) if action.type else raw
    for k in sorted(set(values) - known):
        raise ValueError(f"unknown config key {k!r}")


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            _apply_config(parser, read_config(known.config))
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
        return args.func(args)
    except (OSError, ValueError, FenError) as exc:
        print(f"xqct: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
