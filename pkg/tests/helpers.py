"""Shared fixtures for the test suite: seeded random positions and oracles."""

from __future__ import annotations

import numpy as np

from xqct.board import Position
from xqct.search import MATE

# Hand-built position carrying every sub-count quoted for the worked example.
# Red rook f4 has the seven safe squares d4 e4 f2 f3 f6 f8 h4 (g4 is hit by
# pawn g5 and knight h6, f5 and f7 by knight h6, f7 and f9 also by the guard
# e8; c4 and i4 hold red pawns, f1 the red king). Four attacks land next to
# the black king e9: e8 from knight g7, d9 from cannon d2 (screen d6), f9 from
# both rook f4 and knight g7. Black has three safe checks on the red king f1:
# knight i0h2, rook a5a1, cannon e7f7.
WORKED_FEN = "4k4/4a4/4c1N2/3P3n1/r5p2/2P2R2P/9/3C5/5K3/8n w"


def random_positions(n: int, seed: int = 0, min_plies: int = 4, max_plies: int = 120, capture_bias: float = 0.5):
    """Distinct non-terminal positions reached by seeded random playouts.

    Captures are preferred with probability ``capture_bias`` so the set
    covers thinned-out middlegames and endings as well as openings.
    """
    rng = np.random.default_rng(seed)
    out, seen = [], set()
    while len(out) < n:
        pos = Position.start()
        for _ in range(int(rng.integers(min_plies, max_plies + 1))):
            moves = pos.legal_moves()
            if not moves or pos.kings[pos.side] is None:
                break
            caps = [m for m in moves if m.captured]
            pool = caps if caps and rng.random() < capture_bias else moves
            pos.push(pool[int(rng.integers(len(pool)))])
        if pos.kings[pos.side] is not None and pos.legal_moves() and pos.hash not in seen:
            seen.add(pos.hash)
            out.append(pos)
    return out


def minimax(pos: Position, depth: int, leaf, ply: int = 0) -> float:
    """Exhaustive negamax without pruning; ``leaf(pos)`` scores the horizon."""
    if pos.kings[pos.side] is None:
        return -(MATE - ply)
    if depth == 0:
        return leaf(pos)
    moves = pos.legal_moves()
    if not moves:
        return -(MATE - ply)
    best = -float("inf")
    for m in moves:
        pos.push(m)
        best = max(best, -minimax(pos, depth - 1, leaf, ply + 1))
        pos.pop(m)
    return best
