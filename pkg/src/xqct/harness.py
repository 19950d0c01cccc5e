"""Engine-vs-engine matches over an opening book.

Each opening is played twice with colours swapped. Games stop on king
capture or no legal move, threefold repetition (draw) or the 400-ply cap
(draw), counted from the opening position.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .board import BLACK, RED, Outcome, Position
from .evaluation import WeightStore
from .search import iterative_search, make_searcher, replay

log = logging.getLogger(__name__)


@dataclass
class GameResult:
    outcome: Outcome
    moves: list[str]
    plies: int

    def score_for(self, color: int) -> float:
        if self.outcome == Outcome.DRAW:
            return 0.5
        won = Outcome.RED_WIN if color == RED else Outcome.BLACK_WIN
        return 1.0 if self.outcome == won else 0.0


def play_game(
    red_ws: WeightStore,
    black_ws: WeightStore,
    opening: Position,
    node_budget: int,
    backend: str = "auto",
    repetition: bool = True,
) -> GameResult:
    """Deterministic game between two weight sets from ``opening``.

    With ``repetition`` both engines score repeated positions as draws
    inside their searches, since that is how the game will be judged.
    """
    pos = opening.copy()
    pos.ply = 0
    moves = []
    while True:
        outcome = pos.outcome(claim_repetition=True)
        if outcome != Outcome.ONGOING:
            return GameResult(outcome, moves, pos.ply)
        ws = red_ws if pos.side == RED else black_ws
        r = iterative_search(pos, ws, node_budget, backend=backend, repetition=repetition)
        pos.push(r.best)
        moves.append(r.best.iccs())


@dataclass
class GameLog:
    opening: int
    a_color: str
    result: str
    score_a: float
    plies: int


@dataclass
class MatchResult:
    games: list[GameLog] = field(default_factory=list)

    @property
    def wins(self) -> int:
        return sum(g.score_a == 1.0 for g in self.games)

    @property
    def draws(self) -> int:
        return sum(g.score_a == 0.5 for g in self.games)

    @property
    def losses(self) -> int:
        return sum(g.score_a == 0.0 for g in self.games)

    @property
    def win_rate(self) -> float:
        return (self.wins + 0.5 * self.draws) / len(self.games)

    @property
    def stderr(self) -> float:
        """Standard error of the mean per-game score."""
        n = len(self.games)
        p = self.win_rate
        var = sum((g.score_a - p) ** 2 for g in self.games) / n
        return math.sqrt(var / n)

    def summary(self) -> dict:
        return {
            "games": len(self.games),
            "wins": self.wins,
            "draws": self.draws,
            "losses": self.losses,
            "win_rate": self.win_rate,
            "stderr": self.stderr,
        }

    def write(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            for g in self.games:
                fh.write(json.dumps(asdict(g)) + "\n")
            fh.write(json.dumps({"summary": self.summary()}) + "\n")


_match_state: dict = {}


def _init_match(ws_a, ws_b, openings, node_budget, backend, repetition):
    _match_state.update(
        ws_a=ws_a, ws_b=ws_b, openings=openings, budget=node_budget, backend=backend, repetition=repetition
    )


def _play_job(job: tuple[int, int]) -> GameLog:
    i, a_color = job
    s = _match_state
    red, black = (s["ws_a"], s["ws_b"]) if a_color == RED else (s["ws_b"], s["ws_a"])
    g = play_game(red, black, s["openings"][i], s["budget"], s["backend"], s["repetition"])
    return GameLog(i, "red" if a_color == RED else "black", g.outcome.value, g.score_for(a_color), g.plies)


def run_match(
    ws_a: WeightStore,
    ws_b: WeightStore,
    openings: Sequence[Position],
    node_budget: int,
    workers: int = 1,
    backend: str = "auto",
    report: str | os.PathLike | None = None,
    repetition: bool = True,
) -> MatchResult:
    """Play every opening with A as red and then as black; return A's results."""
    if not openings:
        raise ValueError("no openings")
    jobs = [(i, c) for i in range(len(openings)) for c in (RED, BLACK)]
    args = (ws_a, ws_b, list(openings), node_budget, backend, repetition)
    if workers > 1:
        with ProcessPoolExecutor(workers, initializer=_init_match, initargs=args) as ex:
            games = list(ex.map(_play_job, jobs))
    else:
        _init_match(*args)
        games = [_play_job(j) for j in jobs]
    result = MatchResult(games)
    for g in games:
        log.info("opening %d, A %s: %s in %d plies", g.opening, g.a_color, g.result, g.plies)
    if report is not None:
        result.write(report)
    return result


def make_openings(ws: WeightStore, count: int = 100, seed: int = 0, min_plies: int = 2, max_plies: int = 6) -> list[Position]:
    """Distinct short openings from seeded self-play with ``ws``.

    Each ply picks uniformly among the quiet moves whose 4-ply value is within
    one unit of the best, so no opening starts with a trade or a blunder.
    """
    rng = np.random.default_rng(seed)
    engine = make_searcher(ws)
    out, seen = [], set()
    while len(out) < count:
        pos = Position.start()
        for _ in range(int(rng.integers(min_plies, max_plies + 1))):
            scored = [(-engine.search(replay(pos, [m]), 3).score, m) for m in pos.legal_moves()]
            best = max(v for v, _ in scored)
            good = [m for v, m in scored if v >= best - 1.0 and not m.captured]
            if not good:  # a capture is strictly better: discard this line
                pos = None
                break
            pos.push(good[int(rng.integers(len(good)))])
        if pos is not None and pos.hash not in seen:
            seen.add(pos.hash)
            out.append(Position(pos.board, pos.side))
    return out
