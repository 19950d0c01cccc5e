"""Game records, sample expansion and opening books.

Record files are UTF-8 with one game per line::

    [FEN] | h2e2 h9g7 ... | 1-0

The FEN field may be empty (standard start). Results use ``1-0``, ``0-1``,
``1/2-1/2`` or ``*``. Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .board import START_FEN, FenError, IllegalMoveError, Move, Outcome, Position, format_fen, parse_fen
from .training import TrainingSample

log = logging.getLogger(__name__)


@dataclass
class GameRecord:
    initial: str | None = None
    moves: list[str] = field(default_factory=list)
    result: Outcome = Outcome.ONGOING
    record_id: str = ""

    def start(self) -> Position:
        return parse_fen(self.initial or START_FEN)

    def positions(self) -> Iterable[tuple[Position, Move]]:
        """(position before the move, move) for every ply, as independent copies."""
        pos = self.start()
        for text in self.moves:
            m = pos.parse_move(text)
            yield pos.copy(), m
            pos.push(m)

    def to_line(self) -> str:
        return f"{self.initial or ''} | {' '.join(self.moves)} | {self.result.value}"


class RecordError(ValueError):
    pass


def parse_record(line: str, record_id: str = "") -> GameRecord:
    """Parse and legality-check one record line."""
    parts = [p.strip() for p in line.split("|")]
    if len(parts) != 3:
        raise RecordError(f"record {record_id}: expected 'FEN | moves | result'")
    fen, moves, result = parts
    try:
        outcome = Outcome(result)
    except ValueError:
        raise RecordError(f"record {record_id}: unknown result {result!r}") from None
    rec = GameRecord(fen or None, moves.split(), outcome, record_id)
    try:
        pos = rec.start()
    except FenError as exc:
        raise RecordError(f"record {record_id}: {exc}") from None
    for ply, text in enumerate(rec.moves, 1):
        try:
            pos.push(pos.parse_move(text))
        except (IllegalMoveError, ValueError):
            raise RecordError(f"record {record_id}: illegal move {text!r} at ply {ply}") from None
    return rec


def load_records(path: str | os.PathLike) -> list[GameRecord]:
    """Read a record file; illegal records are logged and skipped."""
    text = Path(path).read_text(encoding="utf-8")
    records, skipped = [], 0
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            records.append(parse_record(line, record_id=str(lineno)))
        except RecordError as exc:
            skipped += 1
            log.warning("%s", exc)
    if skipped:
        log.warning("%s: skipped %d of %d records", path, skipped, skipped + len(records))
    return records


def save_records(path: str | os.PathLike, records: Sequence[GameRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r.to_line() + "\n")


def samples_to_records(samples: Sequence[TrainingSample]) -> list[GameRecord]:
    """One single-move record per sample (how synthetic data is stored)."""
    return [GameRecord(format_fen(s.position), [s.expert_move.iccs()]) for s in samples]


def expand_samples(
    records: Sequence[GameRecord],
    rng_seed: int = 0,
    train_fraction: float = 0.8,
    limit: int | None = None,
    skip_opening_plies: int = 0,
) -> tuple[list[TrainingSample], list[TrainingSample]]:
    """Deduplicate all (position, move) pairs, draw a seeded subset and split it.

    A position seen several times keeps its first occurrence in file order,
    so it cannot land in both sets.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    candidates: list[TrainingSample] = []
    seen: set[int] = set()
    for rec in records:
        for ply, (pos, m) in enumerate(rec.positions()):
            if ply < skip_opening_plies or pos.hash in seen:
                continue
            seen.add(pos.hash)
            candidates.append(TrainingSample(pos, m))
    rng = np.random.default_rng(rng_seed)
    order = rng.permutation(len(candidates))
    if limit is not None:
        order = order[:limit]
    cut = int(round(train_fraction * len(order)))
    train = [candidates[i] for i in order[:cut]]
    test = [candidates[i] for i in order[cut:]]
    return train, test


def load_openings(path: str | os.PathLike) -> list[Position]:
    """A plain list of FEN lines; ``#`` comments and blank lines allowed."""
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse_fen(line))
        except FenError as exc:
            raise FenError(f"{path}:{lineno}: {exc}") from None
    return out


def default_openings_path() -> Path:
    return Path(__file__).with_name("openings.fen")
