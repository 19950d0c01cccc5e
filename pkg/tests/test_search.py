import math

import pytest
from hypothesis import given, settings, strategies as st

from helpers import minimax, random_positions
from xqct.board import Move, Position, parse_fen, parse_square
from xqct.evaluation import Evaluator, evaluate
from xqct.features import FeatureLayout
from xqct.search import (
    MATE,
    MATE_BOUND,
    QUIET_KEY,
    Searcher,
    iterative_search,
    order_key,
    pv_leaf,
    replay,
    search,
)
from xqct.synthetic import hidden_weights
from xqct.training import init_weights

WS = hidden_weights()
POSITIONS = random_positions(30, seed=41)


def leaf_value(root: Position, pv, ws) -> float:
    """Static value of the PV end, seen from the root mover."""
    leaf = replay(root, pv)
    v = evaluate(leaf, ws)
    return v if leaf.side == root.side else -v


def test_depth_zero_is_static():
    for pos in POSITIONS[:5]:
        r = search(pos, 0, WS)
        assert r.pv == [] and r.nodes == 1
        assert math.isclose(r.score, evaluate(pos, WS), rel_tol=1e-9, abs_tol=1e-9)


def test_hanging_rook_is_taken():
    # Black rook a5 hangs to the red rook a0; depth 2 sees it and the reply.
    pos = parse_fen("3k5/9/9/9/r8/9/9/9/9/R3K4 w")
    r = search(pos, 2, init_weights(FeatureLayout()))
    assert r.best == Move(parse_square("a0"), parse_square("a5"), -4)
    assert r.score == pytest.approx(2000.0, rel=1e-12)


def test_mate_in_one_scores_mate():
    # Leaves are scored statically, so the mate shows from depth 2.
    pos = parse_fen("3k5/R8/9/9/9/9/9/9/9/1R2K4 w")
    assert search(pos, 1, WS).score < MATE_BOUND
    r = search(pos, 2, WS)
    assert r.score == MATE - 1
    assert replay(pos, r.pv).legal_moves() == []


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_alphabeta_equals_minimax(depth):
    ev = Evaluator(WS)
    for pos in POSITIONS[:8]:
        assert search(pos, depth, WS).score == minimax(pos.copy(), depth, ev)


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_pv_leaf_value_matches_score(depth):
    for pos in POSITIONS[:10]:
        r = search(pos, depth, WS)
        if abs(r.score) >= MATE - 100:
            continue
        assert len(r.pv) <= depth
        assert math.isclose(leaf_value(pos, r.pv, WS), r.score, rel_tol=1e-9, abs_tol=1e-6)


def test_pruning_visits_fewer_nodes():
    for pos in POSITIONS[:5]:
        full = Searcher(WS, alphabeta=False).search(pos.copy(), 3)
        pruned = Searcher(WS).search(pos.copy(), 3)
        assert pruned.nodes <= full.nodes
        assert pruned.score == full.score


def test_pv_leaf():
    pos = POSITIONS[0]
    m = pos.legal_moves()[0]
    assert pv_leaf(pos, m, 1, WS) == replay(pos, [m])
    leaf = pv_leaf(pos, m, 3, WS)
    assert leaf.ply == pos.ply + 3 or leaf.outcome() != leaf.outcome().ONGOING


def test_order_keys():
    pos = parse_fen("3k5/9/9/9/r3p4/9/9/9/9/R3K4 w")
    board = pos.board
    take_rook = Move(parse_square("a0"), parse_square("a5"), -4)
    quiet = Move(parse_square("a0"), parse_square("a1"))
    assert order_key(board, take_rook) < order_key(board, quiet) == QUIET_KEY
    assert order_key(board, quiet, first=quiet) == 0


@pytest.mark.parametrize("depth", [1, 2, 3, 4])
def test_compiled_search_is_identical(depth):
    for pos in POSITIONS[:6]:
        for ordering in (False, True):
            a = search(pos, depth, WS, ordering=ordering, backend="python")
            b = search(pos, depth, WS, ordering=ordering, backend="numba")
            assert (a.score, a.pv, a.nodes) == (b.score, b.pv, b.nodes)


@settings(max_examples=8)
@given(st.integers(0, 29), st.sampled_from([500, 3000, 12000]))
def test_iterative_search_budget(idx, budget):
    pos = POSITIONS[idx]
    a = iterative_search(pos, WS, budget, backend="python")
    b = iterative_search(pos, WS, budget, backend="numba")
    assert (a.score, a.pv, a.nodes, a.depth) == (b.score, b.pv, b.nodes, b.depth)
    assert a.depth >= 1 and a.best in pos.legal_moves()


def test_iterative_search_stops_on_mate():
    pos = parse_fen("3k5/R8/9/9/9/9/9/9/9/1R2K4 w")
    r = iterative_search(pos, WS, 10**6)
    assert r.depth == 2 and r.score == MATE - 1


def test_repetition_scores_draw():
    # Three knight moves in, c7b9 would restore the start position.
    pos = Position.start()
    for text in ("b0c2", "b9c7", "c2b0"):
        pos.push(pos.parse_move(text))
    back = pos.parse_move("c7b9")
    child = replay(pos, [back])
    s = Searcher(WS, repetition=True)
    assert s._negamax(child, 2, -math.inf, math.inf, 1)[0] == 0.0
    # Without the flag the repeated position is searched normally.
    plain = Searcher(WS)._negamax(child.copy(), 2, -math.inf, math.inf, 1)[0]
    assert plain != 0.0


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_repetition_backends_agree(depth):
    pos = Position.start()
    for text in ("b0c2", "b9c7", "c2b0"):
        pos.push(pos.parse_move(text))
    for root in [pos] + POSITIONS[:4]:
        a = Searcher(WS, repetition=True).search(root.copy(), depth)
        b = search_fast(root, depth)
        assert (a.score, a.pv, a.nodes) == (b.score, b.pv, b.nodes)


def search_fast(pos, depth):
    from xqct._fastsearch import FastSearcher

    return FastSearcher(WS, repetition=True).search(pos.copy(), depth)


def test_search_is_deterministic():
    pos = POSITIONS[3]
    assert search(pos, 3, WS) == search(pos, 3, WS)


def test_negative_depth_rejected():
    with pytest.raises(ValueError):
        search(Position.start(), -1, WS)
