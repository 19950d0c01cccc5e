"""Tapered linear evaluation and the weight file format."""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .board import CANNON, GUARD, KING, KNIGHT, MINISTER, NUM_SQUARES, PAWN, ROOK, Position, legal_square
from .features import FeatureLayout, FeatureVector, MATL_SLOT, extract, loc_index

PHASE_POINTS = {ROOK: 6, KNIGHT: 3, CANNON: 3, GUARD: 1, MINISTER: 1, PAWN: 1, KING: 0}
PHASE_TOTAL = 66
ALPHA_ID = "phase-R6N3C3G1M1P1-66"

# Sets whose contribution is a sum of per-(piece, square) terms.
TABLE_SETS = frozenset({"MATL", "LOC"})

MAGIC = b"XQCTWGT\x00"
FORMAT_VERSION = 1


def phase_alpha(pos: Position) -> float:
    """Game-stage index: 1.0 with all material on the board, 0.0 with bare kings."""
    points = 0
    for p in pos.board:
        if p:
            points += PHASE_POINTS[abs(p)]
    return min(1.0, points / PHASE_TOTAL)


@dataclass
class WeightStore:
    layout: FeatureLayout
    w_o: np.ndarray
    w_e: np.ndarray
    # Running average w* kept alongside, when the weights came from training.
    avg_o: np.ndarray | None = field(default=None, repr=False)
    avg_e: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.w_o = np.asarray(self.w_o, dtype=np.float64)
        self.w_e = np.asarray(self.w_e, dtype=np.float64)
        n = self.layout.total
        if self.w_o.shape != (n,) or self.w_e.shape != (n,):
            raise ValueError(f"weight vectors must have length {n}")
        if not (np.all(np.isfinite(self.w_o)) and np.all(np.isfinite(self.w_e))):
            raise ValueError("weights must be finite")

    @classmethod
    def zeros(cls, layout: FeatureLayout) -> "WeightStore":
        return cls(layout, np.zeros(layout.total), np.zeros(layout.total))

    def copy(self) -> "WeightStore":
        return WeightStore(
            self.layout,
            self.w_o.copy(),
            self.w_e.copy(),
            None if self.avg_o is None else self.avg_o.copy(),
            None if self.avg_e is None else self.avg_e.copy(),
        )

    def effective(self, alpha: float) -> np.ndarray:
        return alpha * self.w_o + (1.0 - alpha) * self.w_e

    def scaled(self, c: float) -> "WeightStore":
        return WeightStore(self.layout, self.w_o * c, self.w_e * c)

    def is_table_evaluable(self) -> bool:
        return set(self.layout.sets) <= TABLE_SETS


def evaluate_features(phi: FeatureVector, alpha: float, ws: WeightStore) -> float:
    return alpha * phi.dot(ws.w_o) + (1.0 - alpha) * phi.dot(ws.w_e)


def evaluate(pos: Position, ws: WeightStore, layout: FeatureLayout | None = None) -> float:
    """Score of ``pos`` for the side to move, by full feature re-extraction."""
    if layout is not None and layout != ws.layout:
        raise ValueError("weight layout does not match the extractor layout")
    return evaluate_features(extract(pos, ws.layout), phase_alpha(pos), ws)


def round_half_away(x: float) -> float:
    return math.copysign(math.floor(abs(x) + 0.5), x)


class Evaluator:
    """Callable evaluation bound to one weight store.

    MATL and LOC terms are folded into red-relative piece-square tables, one
    for the opening weights and one for the endgame weights; any other
    enabled set goes through the generic extractor. ``evaluate`` remains the
    definition; this class only reorganises the same sums.
    """

    def __init__(self, ws: WeightStore, quantize: bool = False):
        self.ws = ws
        self.quantize = quantize
        layout = ws.layout
        self.pst_o, self.pst_e = piece_square_tables(ws)
        rest = tuple(s for s in layout.sets if s not in TABLE_SETS)
        self._rest_layout = FeatureLayout(rest, layout.loc2_pairs) if rest else None
        if rest:
            idx = np.concatenate([np.arange(layout.offsets[s], layout.offsets[s] + layout.sizes[s]) for s in rest])
            self._rest_o = ws.w_o[idx].tolist()
            self._rest_e = ws.w_e[idx].tolist()

    def __call__(self, pos: Position) -> float:
        so = se = 0.0
        points = 0
        pst_o, pst_e = self.pst_o, self.pst_e
        for sq, p in enumerate(pos.board):
            if p:
                so += pst_o[p + 7][sq]
                se += pst_e[p + 7][sq]
                points += PHASE_POINTS[abs(p)]
        alpha = min(1.0, points / PHASE_TOTAL)
        v = alpha * so + (1.0 - alpha) * se
        if pos.side < 0:
            v = -v
        if self._rest_layout is not None:
            phi = extract(pos, self._rest_layout)
            v += alpha * phi.dot(self._rest_o) + (1.0 - alpha) * phi.dot(self._rest_e)
        if self.quantize:
            v = round_half_away(v)
        return v


def piece_square_tables(ws: WeightStore) -> tuple[list[list[float]], list[list[float]]]:
    """Red-relative MATL+LOC contribution of every (piece code + 7, square)."""
    layout = ws.layout
    matl, loc = layout.offsets.get("MATL"), layout.offsets.get("LOC")
    tables = []
    for w in (ws.w_o.tolist(), ws.w_e.tolist()):
        table = [[0.0] * NUM_SQUARES for _ in range(15)]
        for code in range(-7, 8):
            if code == 0:
                continue
            kind, color = abs(code), (1 if code > 0 else -1)
            for sq in range(NUM_SQUARES):
                if not legal_square(kind, color, sq):
                    continue
                v = 0.0
                if matl is not None and kind != KING:
                    v += w[matl + MATL_SLOT[kind]]
                if loc is not None:
                    v += w[loc + loc_index(kind, sq, color)]
                table[code + 7][sq] = color * v
        tables.append(table)
    return tables[0], tables[1]


# ---------------------------------------------------------------------------
# weight files


def save_weights(path: str | Path, ws: WeightStore) -> None:
    header = json.dumps(
        {"layout": ws.layout.manifest(), "alpha": ALPHA_ID, "has_average": ws.avg_o is not None},
        sort_keys=True,
    ).encode()
    arrays = [ws.w_o, ws.w_e]
    if ws.avg_o is not None:
        arrays += [ws.avg_o, ws.avg_e]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header)))
        fh.write(header)
        for a in arrays:
            fh.write(np.asarray(a, dtype="<f8").tobytes())


def load_weights(path: str | Path, use_average: bool = False) -> WeightStore:
    """Read a weight file; ``use_average`` swaps in the stored w* pair."""
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a weight file")
    version, hlen = struct.unpack_from("<II", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    start = len(MAGIC) + 8
    header = json.loads(data[start : start + hlen])
    if header["alpha"] != ALPHA_ID:
        raise ValueError(f"{path}: unknown stage index definition {header['alpha']!r}")
    layout = FeatureLayout.from_manifest(header["layout"])
    n = layout.total
    body = np.frombuffer(data, dtype="<f8", offset=start + hlen)
    count = 4 if header["has_average"] else 2
    if body.size != count * n:
        raise ValueError(f"{path}: expected {count * n} weights, found {body.size}")
    parts = [body[i * n : (i + 1) * n].astype(np.float64) for i in range(count)]
    ws = WeightStore(layout, parts[0], parts[1])
    if count == 4:
        ws.avg_o, ws.avg_e = parts[2], parts[3]
        if use_average:
            ws = WeightStore(layout, parts[2].copy(), parts[3].copy(), parts[2], parts[3])
    return ws
