"""Hidden-expert recovery: train on synthetic labels, then play the baseline.

Generates positions labelled by the hidden MATL+LOC expert, trains from the
material-only start, reports per-epoch held-out accuracy and optionally
plays the trained weights against the material baseline.

    python3 scripts/recover_synthetic.py --out recovered.bin --match 50
"""

import argparse
import logging
import os

from xqct.data import default_openings_path, load_openings
from xqct.harness import run_match
from xqct.synthetic import LAYOUT, recovery_experiment
from xqct.training import TrainerConfig, init_weights, save_checkpoint


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-iter", type=int, default=20)
    ap.add_argument("--workers", type=int, default=int(os.environ.get("XQCT_THREADS", "1")))
    ap.add_argument("--out", default=None, help="save the recovered weights here")
    ap.add_argument("--match", type=int, default=0, help="openings to play against the baseline (0: skip)")
    ap.add_argument("--nodes", type=int, default=10_000)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    def report(rec):
        print(f"epoch {rec.epoch:2d}  updates {rec.updates:5d}  accuracy {rec.test_accuracy:.4f}", flush=True)

    rec = recovery_experiment(args.samples, args.seed, args.max_iter, args.workers, on_epoch=report)
    print(f"best held-out accuracy {rec.accuracy:.4f} at epoch {rec.result.best_epoch}")
    if args.out:
        cfg = TrainerConfig(max_iterations=args.max_iter, seed=args.seed, workers=args.workers)
        save_checkpoint(args.out, rec.result, cfg)
    if args.match:
        openings = load_openings(default_openings_path())[: args.match]
        res = run_match(rec.result.weights, init_weights(LAYOUT), openings, args.nodes, workers=args.workers)
        s = res.summary()
        print(f"vs baseline: +{s['wins']} ={s['draws']} -{s['losses']}  win rate {s['win_rate']:.3f} +/- {s['stderr']:.3f}")


if __name__ == "__main__":
    main()
