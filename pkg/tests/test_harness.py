import json

import pytest

from xqct.board import MAX_PLIES, RED, BLACK, ROOK, Outcome, Position, parse_fen
from xqct.data import default_openings_path, load_openings
from xqct.features import MATL_SLOT, FeatureLayout
from xqct.harness import GameLog, MatchResult, make_openings, play_game, run_match
from xqct.training import init_weights

LAYOUT = FeatureLayout(("MATL", "LOC"))
OPENINGS = load_openings(default_openings_path())
BARE = parse_fen("3k5/4a4/9/9/9/9/9/9/4A4/4K4 w")


def rookless():
    ws = init_weights(LAYOUT)
    ws.w_o[MATL_SLOT[ROOK]] = ws.w_e[MATL_SLOT[ROOK]] = 0.0
    return ws


def test_self_play_scores_half():
    ws = init_weights(LAYOUT)
    res = run_match(ws, ws, OPENINGS[:3], 300)
    assert len(res.games) == 6
    assert res.win_rate == 0.5
    for i in range(3):
        pair = [g for g in res.games if g.opening == i]
        assert [g.a_color for g in pair] == ["red", "black"]
        assert pair[0].plies == pair[1].plies


def test_colours_alternate_per_opening(tmp_path):
    res = run_match(init_weights(LAYOUT), rookless(), OPENINGS[:10], 100, report=tmp_path / "r.jsonl")
    assert len(res.games) == 20
    assert sorted((g.opening, g.a_color) for g in res.games) == sorted(
        (i, c) for i in range(10) for c in ("red", "black")
    )
    lines = (tmp_path / "r.jsonl").read_text().splitlines()
    assert len(lines) == 21
    assert json.loads(lines[-1])["summary"]["games"] == 20


def test_match_is_deterministic():
    a = run_match(init_weights(LAYOUT), rookless(), OPENINGS[:2], 300)
    b = run_match(init_weights(LAYOUT), rookless(), OPENINGS[:2], 300)
    assert a.games == b.games


def test_parallel_match_matches_serial():
    serial = run_match(init_weights(LAYOUT), rookless(), OPENINGS[:2], 200)
    parallel = run_match(init_weights(LAYOUT), rookless(), OPENINGS[:2], 200, workers=2)
    assert serial.games == parallel.games


@pytest.mark.slow
def test_rook_blind_weights_lose():
    res = run_match(init_weights(LAYOUT), rookless(), OPENINGS[:10], 1000)
    assert res.win_rate > 0.7


def test_bare_kings_draw():
    g = play_game(init_weights(LAYOUT), init_weights(LAYOUT), BARE, 300)
    assert g.outcome == Outcome.DRAW and g.plies < MAX_PLIES


def test_ply_cap_ends_game(monkeypatch):
    # With repetition claims disabled only the ply cap can stop this game.
    monkeypatch.setattr(Position, "repetitions", lambda self: 1)
    opening = BARE.copy()
    opening.ply = 57  # reset: the cap counts from the opening
    g = play_game(init_weights(LAYOUT), init_weights(LAYOUT), opening, 200, repetition=False)
    assert g.outcome == Outcome.DRAW and g.plies == MAX_PLIES == len(g.moves)


def test_checkmated_opening_ends_immediately():
    mated = parse_fen("1R1k5/R8/9/9/9/9/9/9/9/4K4 b")
    g = play_game(init_weights(LAYOUT), init_weights(LAYOUT), mated, 100)
    assert g.outcome == Outcome.RED_WIN and g.moves == []
    assert g.score_for(RED) == 1.0 and g.score_for(BLACK) == 0.0


def test_match_statistics():
    games = [GameLog(0, "red", "1-0", 1.0, 10), GameLog(0, "black", "1/2-1/2", 0.5, 10), GameLog(1, "red", "0-1", 0.0, 9)]
    res = MatchResult(games)
    assert (res.wins, res.draws, res.losses) == (1, 1, 1)
    assert res.win_rate == 0.5
    assert res.stderr == pytest.approx((0.5 / 3) ** 0.5 / 3**0.5)


def test_empty_book_rejected():
    with pytest.raises(ValueError):
        run_match(init_weights(LAYOUT), init_weights(LAYOUT), [], 100)


def test_make_openings_quiet_and_distinct():
    book = make_openings(init_weights(LAYOUT), count=3, seed=5, min_plies=2, max_plies=3)
    assert len(book) == 3 and len({p.hash for p in book}) == 3
    for p in book:
        assert sum(1 for x in p.board if x) == 32
        assert p.ply == 0 and p.history == []
