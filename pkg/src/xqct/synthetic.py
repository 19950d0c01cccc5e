"""Synthetic expert data labelled by a hidden MATL+LOC weight vector.

The hidden evaluator plays the expert: each sample's move is the unique
1-ply argmax of its tapered evaluation. Because the hidden vector lives in
the trainable layout the data is separable, so comparison training can be
checked for recovery of a known preference ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .board import CANNON, GUARD, KING, KNIGHT, MINISTER, PAWN, ROOK, Position, file_of, rank_of
from .evaluation import Evaluator, WeightStore
from .features import FOLDED_SQUARES, LOC_BASE, MATL_SLOT, FeatureLayout
from .training import TrainerConfig, TrainingSample, TrainResult, init_weights, train

LAYOUT = FeatureLayout(("MATL", "LOC"))

# Opening / endgame material of the hidden expert.
_MATERIAL = {
    GUARD: (200.0, 250.0),
    MINISTER: (250.0, 200.0),
    ROOK: (1300.0, 1400.0),
    KNIGHT: (600.0, 700.0),
    CANNON: (650.0, 550.0),
    PAWN: (100.0, 220.0),
}


def _placement(kind: int, file: int, rank: int) -> tuple[float, float]:
    """Hand-shaped (opening, endgame) square bonus, red-relative."""
    centre = 4 - abs(file - 4)  # 0 on the edge, 4 on the centre file
    if kind == PAWN:
        if rank <= 4:
            return 0.0, 0.0
        adv = min(rank - 5, 3)  # the back rank is never useful
        return 60.0 + 15.0 * centre + 20.0 * adv, 90.0 + 20.0 * centre + 30.0 * adv
    if kind == KNIGHT:
        fwd = min(rank, 7)
        return 12.0 * centre + 10.0 * fwd - (40.0 if rank == 0 else 0.0), 15.0 * centre + 6.0 * fwd
    if kind == ROOK:
        return 8.0 * centre + (25.0 if rank in (3, 4, 6) else 0.0) + 6.0 * min(rank, 6), 10.0 * centre
    if kind == CANNON:
        return (45.0 if file == 4 else 0.0) + 5.0 * centre - 6.0 * max(rank - 4, 0), 3.0 * centre
    if kind == KING:
        return (-40.0 * rank - 15.0 * abs(file - 4)), 10.0 * (1 - abs(file - 4))
    if kind == GUARD or kind == MINISTER:
        return (10.0 if file == 4 else 0.0), 0.0
    return 0.0, 0.0


def hidden_weights(seed: int = 7, noise: float = 12.0) -> WeightStore:
    """The hidden expert: structured material and placement plus seeded noise."""
    rng = np.random.default_rng(seed)
    ws = WeightStore.zeros(LAYOUT)
    base = LAYOUT.offsets["MATL"]
    for kind, (o, e) in _MATERIAL.items():
        ws.w_o[base + MATL_SLOT[kind]] = o
        ws.w_e[base + MATL_SLOT[kind]] = e
    base = LAYOUT.offsets["LOC"]
    for kind, squares in FOLDED_SQUARES.items():
        for slot, sq in enumerate(squares):
            o, e = _placement(kind, file_of(sq), rank_of(sq))
            i = base + LOC_BASE[kind] + slot
            ws.w_o[i] = o + noise * rng.standard_normal()
            ws.w_e[i] = e + noise * rng.standard_normal()
    return ws


def ranked_children(pos: Position, ev: Evaluator):
    """(value for the mover, move) of every child, best first."""
    out = []
    for m in pos.legal_moves():
        pos.push(m)
        out.append((-ev(pos), m))
        pos.pop(m)
    out.sort(key=lambda x: -x[0])
    return out


@dataclass
class SyntheticConfig:
    samples: int = 5000
    seed: int = 0
    margin: float = 1.0  # minimum gap between best and second-best child
    random_move_prob: float = 0.5  # playout exploration
    sample_prob: float = 0.3  # chance a visited position is kept
    max_plies: int = 160


def generate_samples(ws: WeightStore, cfg: SyntheticConfig = SyntheticConfig()) -> list[TrainingSample]:
    """Seeded playouts; keep positions whose hidden argmax is unique by ``margin``.

    Playout moves mix uniform random choices with the hidden expert's own
    move so that positions cover openings, middlegames and thin endings.
    Duplicate positions (same hash) are kept once.
    """
    rng = np.random.default_rng(cfg.seed)
    ev = Evaluator(ws)
    samples: list[TrainingSample] = []
    seen: set[int] = set()
    while len(samples) < cfg.samples:
        pos = Position.start()
        for _ in range(cfg.max_plies):
            if pos.kings[pos.side] is None:
                break
            ranked = ranked_children(pos, ev)
            if not ranked:
                break
            if (
                len(ranked) > 1
                and ranked[0][0] - ranked[1][0] >= cfg.margin
                and pos.hash not in seen
                and rng.random() < cfg.sample_prob
            ):
                seen.add(pos.hash)
                samples.append(TrainingSample(pos.copy(), ranked[0][1]))
                if len(samples) == cfg.samples:
                    break
            if rng.random() < cfg.random_move_prob:
                m = ranked[int(rng.integers(len(ranked)))][1]
            else:
                m = ranked[0][1]
            pos.push(m)
    return samples


def split(samples: list[TrainingSample], train_fraction: float = 0.8, seed: int = 0):
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(samples))
    cut = int(round(train_fraction * len(samples)))
    return [samples[i] for i in order[:cut]], [samples[i] for i in order[cut:]]


@dataclass
class Recovery:
    result: TrainResult
    train: list[TrainingSample]
    test: list[TrainingSample]

    @property
    def accuracy(self) -> float:
        return max(r.test_accuracy for r in self.result.history)


def recovery_experiment(
    samples: int = 5000, seed: int = 0, max_iterations: int = 20, workers: int = 1, on_epoch=None
) -> Recovery:
    """Label ``samples`` positions with the hidden expert, split 80/20 and
    train from the material-only start at depth 1."""
    data = generate_samples(hidden_weights(), SyntheticConfig(samples=samples, seed=seed))
    tr, te = split(data, 0.8, seed)
    cfg = TrainerConfig(depth=1, batch_size=1, workers=workers, max_iterations=max_iterations, seed=seed)
    result = train(tr, te, cfg, initial=init_weights(LAYOUT), on_epoch=on_epoch)
    return Recovery(result, tr, te)
