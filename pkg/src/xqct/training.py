"""Comparison training of tapered weights (averaged perceptron over siblings).

For a training position ``s`` with expert child ``s_1``, every sibling whose
value beats ``s_1`` under the current weights contributes
``phi(leaf_1) - phi(leaf_i)``; the contributions are averaged into one
update quantity and split between the opening and endgame vectors so the
effective weight vector at ``alpha(s)`` moves by exactly that quantity.
Feature vectors here are always taken from the training position's mover.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy import sparse

from .board import GUARD, KNIGHT, CANNON, MINISTER, PAWN, ROOK, Move, Position
from .evaluation import WeightStore, evaluate, phase_alpha, save_weights
from .features import MATL_SLOT, FeatureLayout, extract
from .search import replay, search

log = logging.getLogger(__name__)

# Initial MATL weights.
INITIAL_MATERIAL = {GUARD: 350.0, MINISTER: 350.0, ROOK: 2000.0, KNIGHT: 950.0, CANNON: 950.0, PAWN: 300.0}


@dataclass(frozen=True)
class TrainingSample:
    position: Position
    expert_move: Move

    def __post_init__(self):
        if self.expert_move not in self.position.legal_moves():
            raise ValueError(f"expert move {self.expert_move.iccs()} is not legal")


@dataclass
class UpdateDelta:
    indices: np.ndarray
    values: np.ndarray
    alpha: float

    @classmethod
    def from_dense(cls, dense: np.ndarray, alpha: float) -> "UpdateDelta":
        idx = np.flatnonzero(dense)
        return cls(idx, dense[idx], alpha)

    @classmethod
    def zero(cls, alpha: float) -> "UpdateDelta":
        return cls(np.zeros(0, np.int64), np.zeros(0), alpha)

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        out[self.indices] = self.values
        return out

    @property
    def is_zero(self) -> bool:
        return self.values.size == 0

    def l1(self) -> float:
        return float(np.abs(self.values).sum())


@dataclass
class TrainerConfig:
    depth: int = 1
    batch_size: int = 1
    workers: int = 1
    max_iterations: int = 20
    seed: int = 0
    backend: str = "auto"

    def __post_init__(self):
        for name in ("depth", "batch_size", "workers", "max_iterations"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


@dataclass
class EpochRecord:
    epoch: int
    updates: int
    mean_abs_delta: float
    test_accuracy: float


@dataclass
class TrainerState:
    ws: WeightStore
    sum_o: np.ndarray = None
    sum_e: np.ndarray = None
    count: int = 0
    t: int = 0
    history: list[EpochRecord] = field(default_factory=list)

    def begin_epoch(self) -> None:
        """Start a new running average at the current weights w^(0)."""
        self.sum_o = self.ws.w_o.copy()
        self.sum_e = self.ws.w_e.copy()
        self.count = 1

    def record(self) -> None:
        self.sum_o += self.ws.w_o
        self.sum_e += self.ws.w_e
        self.count += 1

    def average(self) -> WeightStore:
        avg_o, avg_e = self.sum_o / self.count, self.sum_e / self.count
        return WeightStore(self.ws.layout, avg_o, avg_e)


def init_weights(layout: FeatureLayout) -> WeightStore:
    ws = WeightStore.zeros(layout)
    if "MATL" in layout.sets:
        base = layout.offsets["MATL"]
        for kind, value in INITIAL_MATERIAL.items():
            ws.w_o[base + MATL_SLOT[kind]] = value
            ws.w_e[base + MATL_SLOT[kind]] = value
    return ws


# ---------------------------------------------------------------------------
# update rules


def apply_balanced_tapered(ws: WeightStore, delta: UpdateDelta) -> WeightStore:
    """Split ``delta`` over (w_o, w_e) so alpha*w_o + (1-alpha)*w_e moves by ``delta``."""
    a = delta.alpha
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"stage index {a} outside [0, 1]")
    if not np.all(np.isfinite(delta.values)):
        raise ValueError("non-finite update quantity")
    den = a * a + (1.0 - a) * (1.0 - a)
    ws.w_o[delta.indices] += (a / den) * delta.values
    ws.w_e[delta.indices] += ((1.0 - a) / den) * delta.values
    return ws


def apply_naive_tapered(ws: WeightStore, delta: UpdateDelta) -> WeightStore:
    """Proportional split without rebalancing; undershoots for 0 < alpha < 1."""
    a = delta.alpha
    ws.w_o[delta.indices] += a * delta.values
    ws.w_e[delta.indices] += (1.0 - a) * delta.values
    return ws


# ---------------------------------------------------------------------------
# per-position comparison


def _leaves(pos: Position, ws: WeightStore, depth: int, backend: str):
    """(move, value for the root mover, leaf position) for every legal move."""
    out = []
    for m in pos.legal_moves():
        child = replay(pos, [m])
        if depth == 1:
            out.append((m, -evaluate(child, ws), child))
        else:
            r = search(child, depth - 1, ws, backend=backend)
            out.append((m, -r.score, replay(child, r.pv)))
    return out


def _root_features(leaf: Position, root_side: int, layout: FeatureLayout):
    phi = extract(leaf, layout)
    return phi if leaf.side == root_side else -phi


def compare_position(sample: TrainingSample, ws: WeightStore, depth: int = 1, backend: str = "python") -> UpdateDelta:
    pos = sample.position
    alpha = phase_alpha(pos)
    leaves = _leaves(pos, ws, depth, backend)
    if not leaves:
        raise ValueError("training position has no legal moves")
    expert = next(x for x in leaves if x[0] == sample.expert_move)
    better = [x for x in leaves if x[1] > expert[1]]
    if not better:
        return UpdateDelta.zero(alpha)
    layout = ws.layout
    phi_1 = _root_features(expert[2], pos.side, layout).as_dict()
    acc: dict[int, float] = {}
    for _, _, leaf in better:
        phi_i = _root_features(leaf, pos.side, layout).as_dict()
        for i in phi_1.keys() | phi_i.keys():
            acc[i] = acc.get(i, 0.0) + phi_1.get(i, 0) - phi_i.get(i, 0)
    k = len(better)
    idx = np.array(sorted(i for i, v in acc.items() if v), dtype=np.int64)
    vals = np.array([acc[i] / k for i in idx], dtype=np.float64)
    return UpdateDelta(idx, vals, alpha)


def expert_is_best(sample: TrainingSample, ws: WeightStore, depth: int = 1, backend: str = "python") -> bool:
    leaves = _leaves(sample.position, ws, depth, backend)
    expert = next(x for x in leaves if x[0] == sample.expert_move)
    return all(x[1] < expert[1] for x in leaves if x is not expert)


# ---------------------------------------------------------------------------
# 1-ply cache: at depth 1 the children's features do not depend on weights


@dataclass
class ChildTable:
    """Children of one training position, as rows of a sparse matrix.

    Rows hold ``extract(child)`` (the child's mover, i.e. the opponent) so
    the root-perspective vectors are the negated rows.
    """

    features: sparse.csr_matrix
    child_alpha: np.ndarray
    expert: int
    alpha: float

    @classmethod
    def build(cls, sample: TrainingSample, layout: FeatureLayout) -> "ChildTable":
        pos = sample.position.copy()
        moves = pos.legal_moves()
        if not moves:
            raise ValueError("training position has no legal moves")
        data, cols, ptr, alphas = [], [], [0], []
        for m in moves:
            pos.push(m)
            for i, v in extract(pos, layout).entries:
                cols.append(i)
                data.append(float(v))
            ptr.append(len(cols))
            alphas.append(phase_alpha(pos))
            pos.pop(m)
        mat = sparse.csr_matrix((data, cols, ptr), shape=(len(moves), layout.total))
        return cls(mat, np.array(alphas), moves.index(sample.expert_move), phase_alpha(pos))

    def values(self, ws: WeightStore) -> np.ndarray:
        a = self.child_alpha
        return -(a * (self.features @ ws.w_o) + (1.0 - a) * (self.features @ ws.w_e))

    def delta(self, ws: WeightStore) -> UpdateDelta:
        v = self.values(ws)
        better = np.flatnonzero(v > v[self.expert])
        if better.size == 0:
            return UpdateDelta.zero(self.alpha)
        x = self.features
        dense = np.asarray(x[better].sum(axis=0)).ravel() / better.size - x[self.expert].toarray().ravel()
        return UpdateDelta.from_dense(dense, self.alpha)

    def correct(self, ws: WeightStore) -> bool:
        v = self.values(ws)
        return bool(np.sum(v >= v[self.expert]) == 1)


def build_tables(samples: Sequence[TrainingSample], layout: FeatureLayout) -> list[ChildTable]:
    return [ChildTable.build(s, layout) for s in samples]


# ---------------------------------------------------------------------------
# accuracy


def test_accuracy(
    ws: WeightStore,
    test: Sequence[TrainingSample],
    depth: int = 1,
    tables: Sequence[ChildTable] | None = None,
    backend: str = "auto",
) -> float:
    """Fraction of samples whose expert move is strictly best (ties are wrong)."""
    if not test:
        raise ValueError("empty test set")
    if depth == 1:
        if tables is None:
            tables = build_tables(test, ws.layout)
        hits = sum(t.correct(ws) for t in tables)
    else:
        hits = sum(expert_is_best(s, ws, depth, backend) for s in test)
    return hits / len(test)


test_accuracy.__test__ = False  # not a pytest test despite the name


# ---------------------------------------------------------------------------
# batches and epochs


class _DeltaSource:
    """Computes the update quantity of sample ``i`` under given weights."""

    def __init__(self, samples, depth, backend, tables=None):
        self.samples = samples
        self.depth = depth
        self.backend = backend
        self.tables = tables

    def __call__(self, i: int, ws: WeightStore) -> UpdateDelta:
        if self.tables is not None:
            return self.tables[i].delta(ws)
        return compare_position(self.samples[i], ws, self.depth, self.backend)


_worker_source: _DeltaSource | None = None


def _init_worker(source: _DeltaSource) -> None:
    global _worker_source
    _worker_source = source


def _worker_deltas(args) -> list[UpdateDelta]:
    layout, w_o, w_e, indices = args
    ws = WeightStore(layout, w_o, w_e)
    return [_worker_source(i, ws) for i in indices]


class _Pool:
    def __init__(self, source: _DeltaSource, workers: int):
        self.source = source
        self.workers = workers
        self.executor = None
        if workers > 1:
            self.executor = ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(source,))

    def deltas(self, indices: Sequence[int], ws: WeightStore) -> list[UpdateDelta]:
        if self.executor is None:
            return [self.source(i, ws) for i in indices]
        # Workers grab chunks in any order; results come back in sample order.
        chunks = [list(indices[k :: self.workers]) for k in range(self.workers)]
        jobs = [(ws.layout, ws.w_o, ws.w_e, c) for c in chunks if c]
        out: dict[int, UpdateDelta] = {}
        for chunk, result in zip((c for c in chunks if c), self.executor.map(_worker_deltas, jobs)):
            out.update(zip(chunk, result))
        return [out[i] for i in indices]

    def close(self) -> None:
        if self.executor is not None:
            self.executor.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _apply_batch(state: TrainerState, deltas: Sequence[UpdateDelta]) -> None:
    for d in deltas:
        apply_balanced_tapered(state.ws, d)
        state.t += 1
        state.record()


def train_batch(
    samples: Sequence[TrainingSample],
    state: TrainerState,
    cfg: TrainerConfig,
    *,
    tables: Sequence[ChildTable] | None = None,
    pool: _Pool | None = None,
) -> list[UpdateDelta]:
    """One batch update: every delta is computed against the pre-batch weights."""
    if len(samples) > cfg.batch_size:
        raise ValueError("batch larger than batch_size")
    own = pool is None
    if own:
        pool = _Pool(_DeltaSource(list(samples), cfg.depth, cfg.backend, tables), cfg.workers)
    try:
        snapshot = state.ws.copy()
        deltas = pool.deltas(list(range(len(samples))), snapshot)
    finally:
        if own:
            pool.close()
    _apply_batch(state, deltas)
    return deltas


def train_online(
    samples: Sequence[TrainingSample],
    state: TrainerState,
    depth: int = 1,
    backend: str = "python",
) -> None:
    """Plain per-sample training: compare, update, next sample."""
    for s in samples:
        d = compare_position(s, state.ws, depth, backend)
        apply_balanced_tapered(state.ws, d)
        state.t += 1
        state.record()


def batches(order: Sequence[int], size: int) -> Iterator[list[int]]:
    for k in range(0, len(order), size):
        yield list(order[k : k + size])


@dataclass
class TrainResult:
    weights: WeightStore
    history: list[EpochRecord]
    best_epoch: int
    updates: int


def train(
    dataset: Sequence[TrainingSample],
    test: Sequence[TrainingSample],
    cfg: TrainerConfig,
    layout: FeatureLayout | None = None,
    initial: WeightStore | None = None,
    on_epoch=None,
) -> TrainResult:
    """Epochs of batch comparison training with the accuracy-decrease stop."""
    if not dataset or not test:
        raise ValueError("training and test sets must be non-empty")
    ws = initial.copy() if initial is not None else init_weights(layout or FeatureLayout())
    layout = ws.layout
    state = TrainerState(ws)
    rng = np.random.default_rng(cfg.seed)
    train_tables = test_tables = None
    if cfg.depth == 1:
        train_tables = build_tables(dataset, layout)
        test_tables = build_tables(test, layout)
    source = _DeltaSource(list(dataset), cfg.depth, cfg.backend, train_tables)
    best: WeightStore | None = None
    best_acc, best_epoch, prev_acc = -1.0, 0, -1.0
    with _Pool(source, cfg.workers) as pool:
        for epoch in range(1, cfg.max_iterations + 1):
            order = rng.permutation(len(dataset))
            state.begin_epoch()
            nonzero, l1 = 0, 0.0
            for batch in batches(order, cfg.batch_size):
                deltas = pool.deltas(batch, state.ws.copy())
                _apply_batch(state, deltas)
                for d in deltas:
                    if not d.is_zero:
                        nonzero += 1
                        l1 += d.l1()
            w_star = state.average()
            acc = test_accuracy(w_star, test, cfg.depth, test_tables, cfg.backend)
            rec = EpochRecord(epoch, nonzero, l1 / len(dataset), acc)
            state.history.append(rec)
            log.info("epoch %d: %d non-zero updates, test accuracy %.4f", epoch, nonzero, acc)
            if on_epoch is not None:
                on_epoch(rec)
            if acc > best_acc:
                best, best_acc, best_epoch = w_star, acc, epoch
            if acc < prev_acc or nonzero == 0:
                break
            prev_acc = acc
            state.ws = w_star.copy()  # best may alias w_star
    out = best.copy()
    out.avg_o, out.avg_e = best.w_o.copy(), best.w_e.copy()
    return TrainResult(out, state.history, best_epoch, state.t)


def save_checkpoint(path: str | os.PathLike, result: TrainResult, cfg: TrainerConfig | None = None) -> None:
    """Weight file plus ``.meta`` (key=value) and ``.log`` (JSON lines) sidecars."""
    path = Path(path)
    save_weights(path, result.weights)
    meta = {
        "epoch": result.best_epoch,
        "epochs_run": len(result.history),
        "t": result.updates,
        "accuracy_history": ",".join(f"{r.test_accuracy:.6f}" for r in result.history),
    }
    if cfg is not None:
        meta.update({f"cfg.{k}": v for k, v in asdict(cfg).items()})
    Path(str(path) + ".meta").write_text("".join(f"{k}={v}\n" for k, v in meta.items()))
    with open(str(path) + ".log", "w") as fh:
        for r in result.history:
            fh.write(json.dumps(asdict(r)) + "\n")


def read_meta(path: str | os.PathLike) -> dict[str, str]:
    out = {}
    for line in Path(str(path) + ".meta").read_text().splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k] = v
    return out


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale if a.size else 0.0

