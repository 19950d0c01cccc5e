"""Fixed-depth alpha-beta negamax with principal-variation extraction.

Two uses share this module. Training searches run a plain fixed-depth tree
in the board's fixed move order with float leaf scores, so PV leaves depend
only on (position, depth, weights). Match play runs iterative deepening
under a node budget with capture-first ordering and integer leaf scores.
Layouts made only of MATL and LOC can hand either kind of search to the
compiled kernel in ``xqct._fastsearch``, which visits the same nodes in the
same order and returns the same result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .board import CANNON, GUARD, KING, KNIGHT, MINISTER, PAWN, ROOK, Move, Position
from .evaluation import Evaluator, WeightStore, evaluate

MATE = 10**6
MATE_BOUND = MATE - 1000
INF = float("inf")
MAX_DEPTH = 32
DEFAULT_NODE_BUDGET = 400_000

# Capture ordering ranks (most valuable victim, then least valuable attacker).
ORDER_RANK = {KING: 9, ROOK: 6, KNIGHT: 4, CANNON: 4, GUARD: 2, MINISTER: 2, PAWN: 1}
QUIET_KEY = 200


@dataclass
class SearchResult:
    score: float
    pv: list[Move] = field(default_factory=list)
    nodes: int = 0
    depth: int = 0

    @property
    def best(self) -> Move | None:
        return self.pv[0] if self.pv else None


class SearchAborted(Exception):
    pass


def order_key(board: list[int], m: Move, first: Move | None = None) -> int:
    if first is not None and m.frm == first.frm and m.to == first.to:
        return 0
    if m.captured:
        return 100 - 10 * ORDER_RANK[abs(m.captured)] + ORDER_RANK[abs(board[m.frm])]
    return QUIET_KEY


class Searcher:
    """Negamax searcher bound to one weight store.

    ``exact=True`` scores leaves with :func:`evaluate` (full re-extraction),
    which is the reference definition; the default uses :class:`Evaluator`.
    ``repetition=True`` (match play only) scores any non-root node whose
    position already occurred in the game or on the current line as a draw.
    """

    def __init__(
        self,
        ws: WeightStore,
        *,
        ordering: bool = False,
        quantize: bool = False,
        exact: bool = False,
        alphabeta: bool = True,
        repetition: bool = False,
    ):
        self.ws = ws
        self.ordering = ordering
        self.alphabeta = alphabeta
        self.repetition = repetition
        if exact:
            self.evaluate = lambda pos: evaluate(pos, ws)
        else:
            self.evaluate = Evaluator(ws, quantize=quantize)
        self.nodes = 0
        self.budget = 0
        self.can_abort = False

    def search(self, pos: Position, depth: int, first: Move | None = None) -> SearchResult:
        self.nodes = 0
        score, pv = self._negamax(pos, depth, -INF, INF, 0, first)
        return SearchResult(score, pv, self.nodes, depth)

    def _negamax(self, pos, depth, alpha, beta, ply, first=None):
        self.nodes += 1
        if self.can_abort and self.nodes > self.budget:
            raise SearchAborted
        if pos.kings[pos.side] is None:
            return -(MATE - ply), []
        if self.repetition and ply > 0 and pos.hash in pos.history:
            return 0.0, []
        if depth == 0:
            return self.evaluate(pos), []
        moves = pos.legal_moves()
        if not moves:
            return -(MATE - ply), []
        if self.ordering:
            board = pos.board
            moves.sort(key=lambda m: order_key(board, m, first))
        best, best_pv = -INF, []
        for m in moves:
            pos.push(m)
            v, pv = self._negamax(pos, depth - 1, -beta, -alpha, ply + 1)
            pos.pop(m)
            v = -v
            if v > best:
                best, best_pv = v, [m] + pv
                if self.alphabeta and v > alpha:
                    alpha = v
                    if alpha >= beta:
                        break
        return best, best_pv


def _use_fast(ws: WeightStore, backend: str) -> bool:
    if backend == "python":
        return False
    if backend not in ("auto", "numba"):
        raise ValueError(f"unknown search backend {backend!r}")
    if not ws.is_table_evaluable():
        if backend == "numba":
            raise ValueError("the compiled search only supports MATL/LOC layouts")
        return False
    return True


def make_searcher(
    ws: WeightStore,
    *,
    ordering: bool = False,
    quantize: bool = False,
    repetition: bool = False,
    backend: str = "auto",
):
    """A reusable searcher; the compiled one when the layout allows it."""
    if _use_fast(ws, backend):
        from ._fastsearch import FastSearcher

        return FastSearcher(ws, ordering=ordering, quantize=quantize, repetition=repetition)
    return Searcher(ws, ordering=ordering, quantize=quantize, repetition=repetition)


def search(
    pos: Position,
    depth: int,
    ws: WeightStore,
    *,
    ordering: bool = False,
    quantize: bool = False,
    backend: str = "python",
) -> SearchResult:
    """Depth-limited negamax value and PV of ``pos`` for the side to move."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    return make_searcher(ws, ordering=ordering, quantize=quantize, backend=backend).search(pos.copy(), depth)


def replay(pos: Position, moves: list[Move]) -> Position:
    out = pos.copy()
    for m in moves:
        out.push(m)
    return out


def pv_leaf(pos: Position, first_move: Move, depth: int, ws: WeightStore, backend: str = "python") -> Position:
    """End of the PV below ``first_move`` when the root is searched to ``depth``."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    child = replay(pos, [first_move])
    result = search(child, depth - 1, ws, backend=backend)
    return replay(child, result.pv)


def iterative_search(
    pos: Position,
    ws: WeightStore,
    node_budget: int = DEFAULT_NODE_BUDGET,
    *,
    max_depth: int = MAX_DEPTH,
    backend: str = "auto",
    quantize: bool = True,
    repetition: bool = False,
) -> SearchResult:
    """Deepen one ply at a time until the node budget runs out.

    The depth-1 iteration always completes; a deeper iteration that would
    cross the budget is abandoned and the last finished one is returned.
    The reported node count includes the abandoned work.
    """
    engine = make_searcher(ws, ordering=True, quantize=quantize, repetition=repetition, backend=backend)
    work = pos.copy()
    engine.budget = node_budget
    result = None
    total = 0
    for depth in range(1, max_depth + 1):
        engine.can_abort = depth > 1
        try:
            r = engine.search(work, depth, first=result.best if result else None)
        except SearchAborted:
            total += engine.nodes
            break
        total += r.nodes
        result = r
        engine.budget = node_budget - total
        if not r.pv or abs(r.score) >= MATE_BOUND or total >= node_budget:
            break
    result.nodes = total
    return result
