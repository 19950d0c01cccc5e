"""Sparse feature extraction for the eight feature sets.

Every feature value is a side-to-move-relative difference: the activation
counted for the mover minus the same activation counted for the opponent
(each seen from its own side of the board). Extracting a color-swapped
position therefore yields the negated vector.

Block layout, in this order whenever enabled::

    MATL   6      piece counts G M R N C P
    LOC    194    folded piece-square slots K6 G3 M4 R50 N50 C50 P31
    MOB    26     knight mobility 0..8, rook mobility 0..15, >=16
    AKA    5      attacks on the king's adjacent squares 1,2,3,4,>=5
    SPC    5      safe checking moves 1,2,3,4,>=5
    COP    36     (attacker kind, victim kind) chase pairs
    MATL2  441    one 2-tuple per (own kind, opponent kind) over counts
    LOC2   varies one 2-tuple per configured kind pair over locations
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .board import (
    BLACK,
    CANNON,
    GUARD,
    KING,
    KIND_NAMES,
    KINDS,
    KING_MOVES,
    KNIGHT,
    MAX_COUNT,
    Move,
    MINISTER,
    NUM_SQUARES,
    PAWN,
    RED,
    ROOK,
    Position,
    attackers_of,
    file_of,
    flip_rank,
    legal_square,
    mirror_file,
    piece_targets,
    square_name,
)

FEATURE_SETS = ("MATL", "LOC", "MOB", "AKA", "SPC", "COP", "MATL2", "LOC2")
SCHEME_VERSION = "xqct-features-1"

MATL_KINDS = (GUARD, MINISTER, ROOK, KNIGHT, CANNON, PAWN)
MATL_SLOT = {k: i for i, k in enumerate(MATL_KINDS)}

# Initial material values; the king outranks everything for exchange tests.
PIECE_VALUE = {GUARD: 350, MINISTER: 350, ROOK: 2000, KNIGHT: 950, CANNON: 950, PAWN: 300, KING: 10**6}

DEFAULT_LOC2_PAIRS = ((KNIGHT, KNIGHT), (KNIGHT, PAWN), (CANNON, PAWN), (ROOK, KNIGHT))

KNIGHT_MOB_SLOTS = 9
ROOK_MOB_SLOTS = 17
THREAT_SLOTS = 5

# Versions of the evaluation function by feature-set algebra.
_EVAL0 = ("MATL", "LOC", "MOB")
_EVAL7 = _EVAL0 + ("AKA", "SPC", "COP")
EVAL_VERSIONS = {
    "eval0": _EVAL0,
    "eval1": _EVAL0 + ("AKA",),
    "eval2": _EVAL0 + ("SPC",),
    "eval3": _EVAL0 + ("COP",),
    "eval4": _EVAL0 + ("AKA", "SPC"),
    "eval5": _EVAL0 + ("AKA", "COP"),
    "eval6": _EVAL0 + ("SPC", "COP"),
    "eval7": _EVAL7,
    "eval8": _EVAL0 + ("MATL2",),
    "eval9": _EVAL7 + ("MATL2",),
    "eval10": _EVAL0 + ("LOC2",),
    "eval11": _EVAL7 + ("LOC2",),
    "eval12": _EVAL0 + ("MATL2", "LOC2"),
    "eval13": _EVAL7 + ("MATL2", "LOC2"),
}


# ---------------------------------------------------------------------------
# location tables (all squares are owner-relative, i.e. seen from red)


def _fold(sq: int) -> int:
    return mirror_file(sq) if file_of(sq) > 4 else sq


def _build_loc_tables():
    folded, full = {}, {}
    for kind in KINDS:
        legal = [sq for sq in range(NUM_SQUARES) if legal_square(kind, RED, sq)]
        full[kind] = {sq: i for i, sq in enumerate(legal)}
        reps = sorted({_fold(sq) for sq in legal})
        folded[kind] = {sq: i for i, sq in enumerate(reps)}
    return folded, full


FOLDED_SLOT, FULL_SLOT = _build_loc_tables()
FOLDED_SQUARES = {k: sorted(v, key=v.get) for k, v in FOLDED_SLOT.items()}
FULL_SQUARES = {k: sorted(v, key=v.get) for k, v in FULL_SLOT.items()}

LOC_BASE = {}
_acc = 0
for _k in KINDS:
    LOC_BASE[_k] = _acc
    _acc += len(FOLDED_SLOT[_k])
LOC_SIZE = _acc
del _acc, _k


def relative(sq: int, color: int) -> int:
    return sq if color == RED else flip_rank(sq)


def loc_index(kind: int, sq: int, color: int = RED) -> int:
    """Slot of a piece inside the LOC block; mirror squares share a slot."""
    rel = relative(sq, color)
    if not legal_square(kind, RED, rel):
        raise ValueError(f"{KIND_NAMES[kind]} cannot stand on {square_name(sq)}")
    return LOC_BASE[kind] + FOLDED_SLOT[kind][_fold(rel)]


def loc2_block_size(pair: tuple[int, int]) -> int:
    a, b = pair
    return len(FOLDED_SLOT[a]) * len(FULL_SLOT[b])


def loc2_pair_index(pair: tuple[int, int], sa: int, sb: int) -> int:
    """Index inside one LOC2 block for owner-relative squares ``sa``, ``sb``.

    The pair is reflected so the first piece sits on the left half (and the
    second too, when the first is on the centre file); for same-kind pairs
    the smaller of the two orderings is used, so the index does not depend
    on which piece is called first.
    """
    ka, kb = pair
    orders = ((sa, sb), (sb, sa)) if ka == kb else ((sa, sb),)
    best = None
    for x, y in orders:
        for mx, my in ((x, y), (mirror_file(x), mirror_file(y))):
            fx = file_of(mx)
            if fx > 4 or (fx == 4 and file_of(my) > 4):
                continue
            if best is None or (mx, my) < best:
                best = (mx, my)
    fx, fy = best
    return FOLDED_SLOT[ka][fx] * len(FULL_SLOT[kb]) + FULL_SLOT[kb][fy]


def _matl2_tuples():
    out, base = [], 0
    for a in MATL_KINDS:
        for b in MATL_KINDS:
            out.append((a, b, base))
            base += (MAX_COUNT[a] + 1) * (MAX_COUNT[b] + 1)
    return out, base


MATL2_TUPLES, MATL2_SIZE = _matl2_tuples()
_MATL2_BASE = {(a, b): base for a, b, base in MATL2_TUPLES}


# ---------------------------------------------------------------------------
# layout


def parse_sets(text: str) -> tuple[str, ...]:
    """Expand a selection such as ``"eval7"``, ``"matl,loc"`` or ``"eval0+loc2"``."""
    chosen: set[str] = set()
    for token in text.replace("+", ",").split(","):
        token = token.strip().lower()
        if not token:
            continue
        if token in EVAL_VERSIONS:
            chosen.update(EVAL_VERSIONS[token])
        elif token.upper() in FEATURE_SETS:
            chosen.add(token.upper())
        else:
            raise ValueError(f"unknown feature set {token!r}")
    if not chosen:
        raise ValueError("no feature sets selected")
    return tuple(s for s in FEATURE_SETS if s in chosen)


@dataclass(frozen=True)
class FeatureLayout:
    sets: tuple[str, ...] = ("MATL", "LOC")
    loc2_pairs: tuple[tuple[int, int], ...] = DEFAULT_LOC2_PAIRS
    offsets: dict = field(init=False, compare=False, repr=False)
    sizes: dict = field(init=False, compare=False, repr=False)
    total: int = field(init=False, compare=False)

    def __post_init__(self):
        unknown = [s for s in self.sets if s not in FEATURE_SETS]
        if unknown:
            raise ValueError(f"unknown feature sets {unknown}")
        ordered = tuple(s for s in FEATURE_SETS if s in self.sets)
        object.__setattr__(self, "sets", ordered)
        object.__setattr__(self, "loc2_pairs", tuple(tuple(p) for p in self.loc2_pairs))
        sizes = {
            "MATL": len(MATL_KINDS),
            "LOC": LOC_SIZE,
            "MOB": KNIGHT_MOB_SLOTS + ROOK_MOB_SLOTS,
            "AKA": THREAT_SLOTS,
            "SPC": THREAT_SLOTS,
            "COP": len(MATL_KINDS) ** 2,
            "MATL2": MATL2_SIZE,
            "LOC2": sum(loc2_block_size(p) for p in self.loc2_pairs),
        }
        assert (sizes["MATL"], sizes["LOC"], sizes["MOB"], sizes["AKA"], sizes["SPC"]) == (6, 194, 26, 5, 5)
        offsets, total = {}, 0
        for s in ordered:
            offsets[s] = total
            total += sizes[s]
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "sizes", {s: sizes[s] for s in ordered})
        object.__setattr__(self, "total", total)

    @classmethod
    def from_spec(cls, text: str, loc2_pairs=DEFAULT_LOC2_PAIRS) -> "FeatureLayout":
        return cls(parse_sets(text), loc2_pairs)

    def block(self, name: str) -> range:
        return range(self.offsets[name], self.offsets[name] + self.sizes[name])

    def manifest(self) -> dict:
        return {
            "scheme": SCHEME_VERSION,
            "total": self.total,
            "sets": [{"name": s, "offset": self.offsets[s], "size": self.sizes[s]} for s in self.sets],
            "loc2_pairs": [[KIND_NAMES[a], KIND_NAMES[b]] for a, b in self.loc2_pairs],
        }

    @classmethod
    def from_manifest(cls, manifest: dict) -> "FeatureLayout":
        if manifest.get("scheme") != SCHEME_VERSION:
            raise ValueError(f"unsupported feature scheme {manifest.get('scheme')!r}")
        letters = {v: k for k, v in KIND_NAMES.items()}
        pairs = tuple((letters[a], letters[b]) for a, b in manifest.get("loc2_pairs", []))
        layout = cls(tuple(s["name"] for s in manifest["sets"]), pairs or DEFAULT_LOC2_PAIRS)
        if layout.manifest() != manifest:
            raise ValueError("layout manifest does not match this build's offsets")
        return layout

    def feature_name(self, index: int) -> str:
        for s in self.sets:
            lo = self.offsets[s]
            if lo <= index < lo + self.sizes[s]:
                return f"{s} {_slot_name(self, s, index - lo)}"
        raise IndexError(index)


def _slot_name(layout: FeatureLayout, name: str, i: int) -> str:
    if name == "MATL":
        return KIND_NAMES[MATL_KINDS[i]]
    if name == "LOC":
        for kind in KINDS:
            n = len(FOLDED_SLOT[kind])
            if i < n:
                return f"{KIND_NAMES[kind]}@{square_name(FOLDED_SQUARES[kind][i])}"
            i -= n
    if name == "MOB":
        if i < KNIGHT_MOB_SLOTS:
            return f"N={i}"
        i -= KNIGHT_MOB_SLOTS
        return f"R={i}" if i < ROOK_MOB_SLOTS - 1 else f"R>={i}"
    if name in ("AKA", "SPC"):
        return str(i + 1) if i < THREAT_SLOTS - 1 else f">={THREAT_SLOTS}"
    if name == "COP":
        a, v = divmod(i, len(MATL_KINDS))
        return f"{KIND_NAMES[MATL_KINDS[a]]}>{KIND_NAMES[MATL_KINDS[v]].lower()}"
    if name == "MATL2":
        for a, b, base in MATL2_TUPLES:
            width = MAX_COUNT[b] + 1
            size = (MAX_COUNT[a] + 1) * width
            if base <= i < base + size:
                na, nb = divmod(i - base, width)
                return f"{KIND_NAMES[a]}{na}/{KIND_NAMES[b].lower()}{nb}"
    if name == "LOC2":
        for a, b in layout.loc2_pairs:
            size = loc2_block_size((a, b))
            if i < size:
                fa, fb = divmod(i, len(FULL_SLOT[b]))
                return (
                    f"{KIND_NAMES[a]}@{square_name(FOLDED_SQUARES[a][fa])}"
                    f"+{KIND_NAMES[b]}@{square_name(FULL_SQUARES[b][fb])}"
                )
            i -= size
    raise IndexError(i)


# ---------------------------------------------------------------------------
# feature vector


@dataclass(frozen=True)
class FeatureVector:
    """Sorted sparse (index, value) pairs with non-zero values."""

    entries: tuple[tuple[int, int], ...] = ()

    @classmethod
    def from_counts(cls, counts: dict[int, int]) -> "FeatureVector":
        return cls(tuple((i, v) for i, v in sorted(counts.items()) if v))

    @property
    def indices(self) -> np.ndarray:
        return np.fromiter((i for i, _ in self.entries), dtype=np.int64, count=len(self.entries))

    @property
    def values(self) -> np.ndarray:
        return np.fromiter((v for _, v in self.entries), dtype=np.float64, count=len(self.entries))

    def dot(self, w: Sequence[float]) -> float:
        total = 0.0
        for i, v in self.entries:
            total += v * w[i]
        return total

    def dense(self, n: int) -> np.ndarray:
        out = np.zeros(n)
        for i, v in self.entries:
            out[i] = v
        return out

    def __neg__(self) -> "FeatureVector":
        return FeatureVector(tuple((i, -v) for i, v in self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def as_dict(self) -> dict[int, int]:
        return dict(self.entries)


# ---------------------------------------------------------------------------
# individual feature values


def _is_safe(board: list[int], dest: int, color: int, value: int) -> bool:
    """Static exchange test for a ``color`` piece of ``value`` standing on ``dest``.

    Safe when no enemy attacks the square, or when it is defended and every
    attacker is worth at least as much as the piece.
    """
    attackers = attackers_of(board, dest, -color)
    if not attackers:
        return True
    if not attackers_of(board, dest, color):
        return False
    return min(PIECE_VALUE[abs(board[s])] for s in attackers) >= value


def _safe_moves(pos: Position, sq: int) -> list[int]:
    board = pos.board
    piece = board[sq]
    color = 1 if piece > 0 else -1
    value = PIECE_VALUE[abs(piece)]
    out = []
    for to in piece_targets(board, sq):
        captured = board[to]
        if not pos.is_legal_for(Move(sq, to, captured), color):
            continue
        board[to], board[sq] = piece, 0
        safe = _is_safe(board, to, color, value)
        board[sq], board[to] = piece, captured
        if safe:
            out.append(to)
    return out


def mobility(pos: Position, sq: int) -> int:
    """Number of squares the rook or knight on ``sq`` can safely move to."""
    piece = pos.board[sq]
    if abs(piece) not in (ROOK, KNIGHT):
        raise ValueError(f"mobility needs a rook or knight on {square_name(sq)}")
    return len(_safe_moves(pos, sq))


def safe_destinations(pos: Position, sq: int) -> list[str]:
    return [square_name(s) for s in _safe_moves(pos, sq)]


def aka_value(pos: Position, defender: int) -> int:
    """Attacker/square pairs on the orthogonal in-palace neighbours of the king."""
    king = pos.kings[defender]
    if king is None:
        return 0
    return sum(len(attackers_of(pos.board, a, -defender)) for a in KING_MOVES[defender][king])


def safe_checks(pos: Position, defender: int) -> list:
    """Opponent moves that check ``defender``'s king and land safely."""
    attacker = -defender
    if pos.kings[defender] is None:
        return []
    board = pos.board
    out = []
    for m in pos.moves_for(attacker):
        piece = board[m.frm]
        board[m.to], board[m.frm] = piece, 0
        saved = pos.kings[attacker]
        if abs(piece) == KING:
            pos.kings[attacker] = m.to
        if pos.in_check(defender) and _is_safe(board, m.to, attacker, PIECE_VALUE[abs(piece)]):
            out.append(m)
        pos.kings[attacker] = saved
        board[m.frm], board[m.to] = piece, m.captured
    return out


def spc_value(pos: Position, defender: int) -> int:
    return len(safe_checks(pos, defender))


def threat_slot(value: int) -> int | None:
    if value <= 0:
        return None
    return min(value, THREAT_SLOTS) - 1


def mobility_slot(kind: int, count: int) -> int:
    if kind == KNIGHT:
        return min(count, KNIGHT_MOB_SLOTS - 1)
    return KNIGHT_MOB_SLOTS + min(count, ROOK_MOB_SLOTS - 1)


def chase_pairs(pos: Position, color: int) -> list[tuple[int, int]]:
    """(attacker kind, victim kind) for every ``color`` piece attacking an enemy piece."""
    board = pos.board
    out = []
    for sq, p in enumerate(board):
        if p * color >= 0 or abs(p) == KING:
            continue
        for s in attackers_of(board, sq, color):
            a = abs(board[s])
            if a != KING:
                out.append((a, abs(p)))
    return out


def piece_counts(pos: Position, color: int) -> dict[int, int]:
    counts = dict.fromkeys(KINDS, 0)
    for p in pos.board:
        if p * color > 0:
            counts[abs(p)] += 1
    return counts


def matl2_activations(pos: Position, color: int) -> list[int]:
    """One active MATL2 index per (own kind, opponent kind) tuple, for ``color``."""
    own, opp = piece_counts(pos, color), piece_counts(pos, -color)
    return [base + own[a] * (MAX_COUNT[b] + 1) + opp[b] for a, b, base in MATL2_TUPLES]


def loc2_activations(pos: Position, color: int, pairs: Iterable[tuple[int, int]]) -> list[int]:
    """One active LOC2 index per pair of ``color``'s pieces, block-offset."""
    where: dict[int, list[int]] = {k: [] for k in KINDS}
    for sq, p in enumerate(pos.board):
        if p * color > 0:
            where[abs(p)].append(relative(sq, color))
    out, base = [], 0
    for pair in pairs:
        a, b = pair
        if a == b:
            sqs = where[a]
            combos = [(sqs[i], sqs[j]) for i in range(len(sqs)) for j in range(i + 1, len(sqs))]
        else:
            combos = [(x, y) for x in where[a] for y in where[b]]
        for x, y in combos:
            out.append(base + loc2_pair_index(pair, x, y))
        base += loc2_block_size(pair)
    return out


def extract(pos: Position, layout: FeatureLayout) -> FeatureVector:
    """Feature vector of ``pos`` from the side to move's point of view."""
    me = pos.side
    counts: dict[int, int] = {}

    def add(index: int, value: int) -> None:
        counts[index] = counts.get(index, 0) + value

    board = pos.board
    sets = layout.sets
    if "MATL" in sets or "LOC" in sets:
        matl, loc = layout.offsets.get("MATL"), layout.offsets.get("LOC")
        for sq, p in enumerate(board):
            if not p:
                continue
            kind = abs(p)
            sign = 1 if p * me > 0 else -1
            if matl is not None and kind != KING:
                add(matl + MATL_SLOT[kind], sign)
            if loc is not None:
                add(loc + loc_index(kind, sq, 1 if p > 0 else -1), sign)
    if "MOB" in sets:
        base = layout.offsets["MOB"]
        for sq, p in enumerate(board):
            kind = abs(p)
            if kind == ROOK or kind == KNIGHT:
                add(base + mobility_slot(kind, mobility(pos, sq)), 1 if p * me > 0 else -1)
    for name, fn in (("AKA", aka_value), ("SPC", spc_value)):
        if name in sets:
            base = layout.offsets[name]
            # Threats against the opponent's king count for the mover.
            for defender, sign in ((-me, 1), (me, -1)):
                slot = threat_slot(fn(pos, defender))
                if slot is not None:
                    add(base + slot, sign)
    if "COP" in sets:
        base = layout.offsets["COP"]
        for color, sign in ((me, 1), (-me, -1)):
            for a, v in chase_pairs(pos, color):
                add(base + MATL_SLOT[a] * len(MATL_KINDS) + MATL_SLOT[v], sign)
    if "MATL2" in sets:
        base = layout.offsets["MATL2"]
        for color, sign in ((me, 1), (-me, -1)):
            for i in matl2_activations(pos, color):
                add(base + i, sign)
    if "LOC2" in sets:
        base = layout.offsets["LOC2"]
        for color, sign in ((me, 1), (-me, -1)):
            for i in loc2_activations(pos, color, layout.loc2_pairs):
                add(base + i, sign)
    return FeatureVector.from_counts(counts)


def describe(vec: FeatureVector, layout: FeatureLayout) -> list[tuple[str, int]]:
    return [(layout.feature_name(i), v) for i, v in vec.entries]
