"""Xiangqi rules: board representation, move generation, make/undo, outcome.

Squares are integers ``rank * 9 + file`` with rank 0 on red's back rank.
Pieces are signed integers: the magnitude is the kind (``KING`` .. ``PAWN``)
and the sign is the color (``RED = 1``, ``BLACK = -1``), so
``piece * color > 0`` tests ownership.
"""

from __future__ import annotations

import enum
import random
from typing import Iterator, NamedTuple

RED = 1
BLACK = -1

KING, GUARD, MINISTER, ROOK, KNIGHT, CANNON, PAWN = range(1, 8)
KINDS = (KING, GUARD, MINISTER, ROOK, KNIGHT, CANNON, PAWN)
KIND_LETTERS = {KING: "k", GUARD: "a", MINISTER: "b", ROOK: "r", KNIGHT: "n", CANNON: "c", PAWN: "p"}
# Display letters used in feature names, following the K/G/M/R/N/C/P convention.
KIND_NAMES = {KING: "K", GUARD: "G", MINISTER: "M", ROOK: "R", KNIGHT: "N", CANNON: "C", PAWN: "P"}
_LETTER_KINDS = {v: k for k, v in KIND_LETTERS.items()}
_LETTER_KINDS.update({"g": GUARD, "e": MINISTER, "m": MINISTER, "h": KNIGHT})
MAX_COUNT = {KING: 1, GUARD: 2, MINISTER: 2, ROOK: 2, KNIGHT: 2, CANNON: 2, PAWN: 5}

FILES = "abcdefghi"
NUM_SQUARES = 90
MAX_PLIES = 400

START_FEN = "rnbakabnr/9/1c5c1/p1p1p1p1p/9/9/P1P1P1P1P/1C5C1/9/RNBAKABNR w"


def square(file: int, rank: int) -> int:
    return rank * 9 + file


def file_of(sq: int) -> int:
    return sq % 9


def rank_of(sq: int) -> int:
    return sq // 9


def square_name(sq: int) -> str:
    return f"{FILES[sq % 9]}{sq // 9}"


def parse_square(text: str) -> int:
    if len(text) != 2 or text[0] not in FILES or not text[1].isdigit():
        raise ValueError(f"bad square {text!r}")
    return square(FILES.index(text[0]), int(text[1]))


def flip_rank(sq: int) -> int:
    return (9 - sq // 9) * 9 + sq % 9


def mirror_file(sq: int) -> int:
    return (sq // 9) * 9 + 8 - sq % 9


def in_palace(color: int, sq: int) -> bool:
    f, r = sq % 9, sq // 9
    if not 3 <= f <= 5:
        return False
    return r <= 2 if color == RED else r >= 7


def own_half(color: int, sq: int) -> bool:
    return sq // 9 <= 4 if color == RED else sq // 9 >= 5


def _legal_square_red(kind: int, sq: int) -> bool:
    f, r = sq % 9, sq // 9
    if kind == KING:
        return in_palace(RED, sq)
    if kind == GUARD:
        return (f, r) in {(3, 0), (5, 0), (4, 1), (3, 2), (5, 2)}
    if kind == MINISTER:
        return (f, r) in {(2, 0), (6, 0), (0, 2), (4, 2), (8, 2), (2, 4), (6, 4)}
    if kind == PAWN:
        if r >= 5:
            return True
        return r >= 3 and f % 2 == 0
    return True


def legal_square(kind: int, color: int, sq: int) -> bool:
    """Whether a piece of ``kind`` and ``color`` may ever stand on ``sq``."""
    return _legal_square_red(kind, sq if color == RED else flip_rank(sq))


class Move(NamedTuple):
    frm: int
    to: int
    captured: int = 0

    def iccs(self) -> str:
        return square_name(self.frm) + square_name(self.to)

    def __str__(self) -> str:
        return self.iccs()


class Outcome(enum.Enum):
    RED_WIN = "1-0"
    BLACK_WIN = "0-1"
    DRAW = "1/2-1/2"
    ONGOING = "*"


class FenError(ValueError):
    pass


class IllegalMoveError(ValueError):
    pass


# ---------------------------------------------------------------------------
# precomputed geometry

_ORTHO = ((0, 1), (0, -1), (1, 0), (-1, 0))


def _on_board(f: int, r: int) -> bool:
    return 0 <= f < 9 and 0 <= r < 10


def _build_rays() -> list[tuple[tuple[int, ...], ...]]:
    rays = []
    for sq in range(NUM_SQUARES):
        f0, r0 = sq % 9, sq // 9
        per = []
        for df, dr in _ORTHO:
            f, r, ray = f0 + df, r0 + dr, []
            while _on_board(f, r):
                ray.append(square(f, r))
                f, r = f + df, r + dr
            per.append(tuple(ray))
        rays.append(tuple(per))
    return rays


def _build_knight() -> tuple[list, list]:
    moves: list[list[tuple[int, int]]] = [[] for _ in range(NUM_SQUARES)]
    attackers: list[list[tuple[int, int]]] = [[] for _ in range(NUM_SQUARES)]
    for sq in range(NUM_SQUARES):
        f0, r0 = sq % 9, sq // 9
        for df, dr in ((1, 2), (-1, 2), (1, -2), (-1, -2), (2, 1), (2, -1), (-2, 1), (-2, -1)):
            f, r = f0 + df, r0 + dr
            if not _on_board(f, r):
                continue
            leg = square(f0 + df // 2, r0) if abs(df) == 2 else square(f0, r0 + dr // 2)
            moves[sq].append((square(f, r), leg))
            attackers[square(f, r)].append((sq, leg))
    for lst in moves + attackers:
        lst.sort()
    return [tuple(x) for x in moves], [tuple(x) for x in attackers]


def _build_minister() -> dict[int, list]:
    table = {}
    for color in (RED, BLACK):
        per = []
        for sq in range(NUM_SQUARES):
            out = []
            if own_half(color, sq):
                f0, r0 = sq % 9, sq // 9
                for df, dr in ((2, 2), (-2, 2), (2, -2), (-2, -2)):
                    f, r = f0 + df, r0 + dr
                    if _on_board(f, r) and own_half(color, square(f, r)):
                        out.append((square(f, r), square(f0 + df // 2, r0 + dr // 2)))
            per.append(tuple(sorted(out)))
        table[color] = per
    return table


def _build_palace_steps(diagonal: bool) -> dict[int, list]:
    table = {}
    deltas = ((1, 1), (1, -1), (-1, 1), (-1, -1)) if diagonal else _ORTHO
    for color in (RED, BLACK):
        per = []
        for sq in range(NUM_SQUARES):
            out = []
            if in_palace(color, sq):
                for df, dr in deltas:
                    f, r = sq % 9 + df, sq // 9 + dr
                    if _on_board(f, r) and in_palace(color, square(f, r)):
                        out.append(square(f, r))
            per.append(tuple(sorted(out)))
        table[color] = per
    return table


def _build_pawn() -> dict[int, list]:
    table = {}
    for color in (RED, BLACK):
        per = []
        for sq in range(NUM_SQUARES):
            f, r = sq % 9, sq // 9
            out = []
            if _on_board(f, r + color):
                out.append(square(f, r + color))
            if not own_half(color, sq):
                if f > 0:
                    out.append(sq - 1)
                if f < 8:
                    out.append(sq + 1)
            per.append(tuple(sorted(out)))
        table[color] = per
    return table


RAYS = _build_rays()
KNIGHT_MOVES, KNIGHT_ATTACKERS = _build_knight()
MINISTER_MOVES = _build_minister()
GUARD_MOVES = _build_palace_steps(diagonal=True)
KING_MOVES = _build_palace_steps(diagonal=False)
PAWN_MOVES = _build_pawn()

_zobrist_rng = random.Random(0x58514354)
ZOBRIST = [[_zobrist_rng.getrandbits(64) for _ in range(NUM_SQUARES)] for _ in range(15)]
ZOBRIST_SIDE = _zobrist_rng.getrandbits(64)


# ---------------------------------------------------------------------------
# attack primitives (module-level so features can share them)


def attackers_of(board: list[int], sq: int, color: int) -> list[int]:
    """Squares of ``color`` pieces that attack ``sq`` (pseudo-legal captures).

    The occupant of ``sq`` is ignored, so the same call answers both "who
    threatens this piece" and "who defends it".
    """
    out = []
    rook, cannon = ROOK * color, CANNON * color
    for ray in RAYS[sq]:
        screen = False
        for s in ray:
            p = board[s]
            if p == 0:
                continue
            if not screen:
                if p == rook:
                    out.append(s)
                screen = True
            else:
                if p == cannon:
                    out.append(s)
                break
    knight = KNIGHT * color
    for s, leg in KNIGHT_ATTACKERS[sq]:
        if board[s] == knight and board[leg] == 0:
            out.append(s)
    pawn = PAWN * color
    for s in (sq - 9 * color, sq - 1, sq + 1):
        if 0 <= s < NUM_SQUARES and board[s] == pawn and sq in PAWN_MOVES[color][s]:
            out.append(s)
    if in_palace(color, sq):
        guard, king = GUARD * color, KING * color
        for s in GUARD_MOVES[color][sq]:
            if board[s] == guard:
                out.append(s)
        for s in KING_MOVES[color][sq]:
            if board[s] == king:
                out.append(s)
    if own_half(color, sq):
        minister = MINISTER * color
        for s, eye in MINISTER_MOVES[color][sq]:
            if board[s] == minister and board[eye] == 0:
                out.append(s)
    return out


def is_attacked(board: list[int], sq: int, color: int) -> bool:
    """Fast boolean form of :func:`attackers_of`."""
    rook, cannon = ROOK * color, CANNON * color
    for ray in RAYS[sq]:
        screen = False
        for s in ray:
            p = board[s]
            if p == 0:
                continue
            if not screen:
                if p == rook:
                    return True
                screen = True
            else:
                if p == cannon:
                    return True
                break
    knight = KNIGHT * color
    for s, leg in KNIGHT_ATTACKERS[sq]:
        if board[s] == knight and board[leg] == 0:
            return True
    pawn = PAWN * color
    s = sq - 9 * color
    if 0 <= s < NUM_SQUARES and board[s] == pawn:
        return True
    if not own_half(color, sq):
        f = sq % 9
        if f > 0 and board[sq - 1] == pawn:
            return True
        if f < 8 and board[sq + 1] == pawn:
            return True
    if in_palace(color, sq):
        for s in GUARD_MOVES[color][sq]:
            if board[s] == GUARD * color:
                return True
        for s in KING_MOVES[color][sq]:
            if board[s] == KING * color:
                return True
    if own_half(color, sq):
        minister = MINISTER * color
        for s, eye in MINISTER_MOVES[color][sq]:
            if board[s] == minister and board[eye] == 0:
                return True
    return False


def kings_facing(board: list[int], red_king: int | None, black_king: int | None) -> bool:
    if red_king is None or black_king is None or red_king % 9 != black_king % 9:
        return False
    for s in range(red_king + 9, black_king, 9):
        if board[s]:
            return False
    return True


def piece_targets(board: list[int], sq: int) -> Iterator[int]:
    """Pseudo-legal destination squares for the piece on ``sq``."""
    p = board[sq]
    color = 1 if p > 0 else -1
    kind = p * color
    if kind == ROOK:
        for ray in RAYS[sq]:
            for s in ray:
                q = board[s]
                if q == 0:
                    yield s
                    continue
                if q * color < 0:
                    yield s
                break
    elif kind == CANNON:
        for ray in RAYS[sq]:
            screen = False
            for s in ray:
                q = board[s]
                if not screen:
                    if q == 0:
                        yield s
                    else:
                        screen = True
                elif q != 0:
                    if q * color < 0:
                        yield s
                    break
    elif kind == KNIGHT:
        for s, leg in KNIGHT_MOVES[sq]:
            if board[leg] == 0 and board[s] * color <= 0:
                yield s
    elif kind == PAWN:
        for s in PAWN_MOVES[color][sq]:
            if board[s] * color <= 0:
                yield s
    elif kind == GUARD:
        for s in GUARD_MOVES[color][sq]:
            if board[s] * color <= 0:
                yield s
    elif kind == MINISTER:
        for s, eye in MINISTER_MOVES[color][sq]:
            if board[eye] == 0 and board[s] * color <= 0:
                yield s
    elif kind == KING:
        for s in KING_MOVES[color][sq]:
            if board[s] * color <= 0:
                yield s


# ---------------------------------------------------------------------------


class Position:
    """Mutable game state with in-place ``push``/``pop``.

    The functional :func:`apply_move` / :func:`undo_move` wrappers copy first,
    so callers that want value semantics can have them.
    """

    __slots__ = ("board", "side", "ply", "history", "hash", "kings")

    def __init__(self, board: list[int], side: int = RED, ply: int = 0, history: list[int] | None = None):
        self.board = list(board)
        self.side = side
        self.ply = ply
        self.history = list(history) if history else []
        self.kings = {RED: None, BLACK: None}
        for sq, p in enumerate(self.board):
            if p == KING:
                self.kings[RED] = sq
            elif p == -KING:
                self.kings[BLACK] = sq
        self.hash = self._full_hash()

    def _full_hash(self) -> int:
        h = ZOBRIST_SIDE if self.side == BLACK else 0
        for sq, p in enumerate(self.board):
            if p:
                h ^= ZOBRIST[p + 7][sq]
        return h

    @classmethod
    def start(cls) -> "Position":
        return parse_fen(START_FEN)

    def copy(self) -> "Position":
        new = Position.__new__(Position)
        new.board = self.board[:]
        new.side = self.side
        new.ply = self.ply
        new.history = self.history[:]
        new.hash = self.hash
        new.kings = dict(self.kings)
        return new

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Position):
            return NotImplemented
        return (
            self.board == other.board
            and self.side == other.side
            and self.ply == other.ply
            and self.history == other.history
            and self.hash == other.hash
        )

    def __repr__(self) -> str:
        return f"Position({format_fen(self)!r}, ply={self.ply})"

    # -- make / unmake ------------------------------------------------------

    def push(self, m: Move) -> None:
        b = self.board
        piece = b[m.frm]
        h = self.hash
        self.history.append(h)
        h ^= ZOBRIST[piece + 7][m.frm] ^ ZOBRIST[piece + 7][m.to] ^ ZOBRIST_SIDE
        if m.captured:
            h ^= ZOBRIST[m.captured + 7][m.to]
            if m.captured == KING or m.captured == -KING:
                self.kings[-self.side] = None
        if piece == KING or piece == -KING:
            self.kings[self.side] = m.to
        b[m.to] = piece
        b[m.frm] = 0
        self.hash = h
        self.side = -self.side
        self.ply += 1

    def pop(self, m: Move) -> None:
        b = self.board
        piece = b[m.to]
        b[m.frm] = piece
        b[m.to] = m.captured
        self.side = -self.side
        self.ply -= 1
        self.hash = self.history.pop()
        if piece == KING or piece == -KING:
            self.kings[self.side] = m.frm
        if m.captured == KING or m.captured == -KING:
            self.kings[-self.side] = m.to

    # -- queries ------------------------------------------------------------

    def in_check(self, color: int) -> bool:
        """True when ``color``'s king could be taken next ply (or is gone)."""
        k = self.kings[color]
        if k is None:
            return True
        if kings_facing(self.board, self.kings[RED], self.kings[BLACK]):
            return True
        return is_attacked(self.board, k, -color)

    def pseudo_moves(self, color: int | None = None) -> list[Move]:
        color = self.side if color is None else color
        b = self.board
        out = []
        for sq in range(NUM_SQUARES):
            if b[sq] * color > 0:
                for to in piece_targets(b, sq):
                    out.append(Move(sq, to, b[to]))
        return out

    def is_legal_for(self, m: Move, color: int) -> bool:
        """Whether pseudo-legal ``m`` leaves ``color``'s own king safe."""
        b = self.board
        piece = b[m.frm]
        kings = self.kings
        saved = kings[color]
        b[m.to] = piece
        b[m.frm] = 0
        if piece == KING * color:
            kings[color] = m.to
        other_saved = kings[-color]
        if m.captured == -KING * color:
            kings[-color] = None
        ok = not self.in_check(color)
        b[m.frm] = piece
        b[m.to] = m.captured
        kings[color] = saved
        kings[-color] = other_saved
        return ok

    def moves_for(self, color: int) -> list[Move]:
        """Legal moves for ``color``, whether or not it is that side's turn."""
        if self.kings[color] is None:
            return []
        moves = [m for m in self.pseudo_moves(color) if self.is_legal_for(m, color)]
        moves.sort()
        return moves

    def legal_moves(self) -> list[Move]:
        """Legal moves for the side to move, ordered by from- then to-square."""
        return self.moves_for(self.side)

    def key(self) -> int:
        """Hash of placement and side to move (ignores ply and history)."""
        return self.hash

    def repetitions(self) -> int:
        """How many times the current placement has occurred, including now."""
        return 1 + sum(1 for h in self.history if h == self.hash)

    def outcome(self, claim_repetition: bool = False) -> Outcome:
        if self.kings[RED] is None:
            return Outcome.BLACK_WIN
        if self.kings[BLACK] is None:
            return Outcome.RED_WIN
        if not self.legal_moves():
            return Outcome.BLACK_WIN if self.side == RED else Outcome.RED_WIN
        if self.ply >= MAX_PLIES:
            return Outcome.DRAW
        if claim_repetition and self.repetitions() >= 3:
            return Outcome.DRAW
        return Outcome.ONGOING

    def parse_move(self, text: str) -> Move:
        """Resolve an ICCS string like ``"h2e2"`` to a legal move."""
        text = text.strip().lower().replace("-", "")
        try:
            frm, to = parse_square(text[:2]), parse_square(text[2:])
        except ValueError:
            raise IllegalMoveError(f"malformed move {text!r}") from None
        for m in self.legal_moves():
            if m.frm == frm and m.to == to:
                return m
        raise IllegalMoveError(f"illegal move {text!r} in {format_fen(self)}")

    def pieces(self) -> Iterator[tuple[int, int]]:
        for sq, p in enumerate(self.board):
            if p:
                yield sq, p

    def color_swapped(self) -> "Position":
        """Swap piece colors and flip ranks, keeping the side to move.

        Every feature of the result is the negation of this position's, which
        makes it the reference transform for antisymmetry checks.
        """
        board = [0] * NUM_SQUARES
        for sq, p in enumerate(self.board):
            if p:
                board[flip_rank(sq)] = -p
        return Position(board, self.side, self.ply)


def apply_move(pos: Position, m: Move) -> Position:
    if m not in pos.legal_moves():
        raise IllegalMoveError(f"{m.iccs()} is not legal in {format_fen(pos)}")
    new = pos.copy()
    new.push(m)
    return new


def undo_move(pos: Position, m: Move) -> Position:
    if not pos.history:
        raise IllegalMoveError("no move to undo")
    new = pos.copy()
    new.pop(m)
    return new


def legal_moves(pos: Position) -> list[Move]:
    return pos.legal_moves()


def perft(pos: Position, depth: int) -> int:
    if depth == 0:
        return 1
    moves = pos.legal_moves()
    if depth == 1:
        return len(moves)
    total = 0
    for m in moves:
        pos.push(m)
        total += perft(pos, depth - 1)
        pos.pop(m)
    return total


# ---------------------------------------------------------------------------
# FEN


def parse_fen(text: str) -> Position:
    fields = text.split()
    if not fields:
        raise FenError("piece placement: empty FEN")
    rows = fields[0].split("/")
    if len(rows) != 10:
        raise FenError(f"piece placement: expected 10 ranks, got {len(rows)}")
    board = [0] * NUM_SQUARES
    counts: dict[int, int] = {}
    for i, row in enumerate(rows):
        rank = 9 - i
        f = 0
        for ch in row:
            if ch.isdigit():
                f += int(ch)
                continue
            kind = _LETTER_KINDS.get(ch.lower())
            if kind is None:
                raise FenError(f"piece placement: unknown piece {ch!r} on rank {rank}")
            if f >= 9:
                raise FenError(f"piece placement: rank {rank} is longer than 9")
            color = RED if ch.isupper() else BLACK
            sq = square(f, rank)
            if not legal_square(kind, color, sq):
                raise FenError(f"piece placement: {ch} cannot stand on {square_name(sq)}")
            board[sq] = kind * color
            counts[kind * color] = counts.get(kind * color, 0) + 1
            f += 1
        if f != 9:
            raise FenError(f"piece placement: rank {rank} has length {f}, expected 9")
    for color in (RED, BLACK):
        name = "red" if color == RED else "black"
        if counts.get(KING * color, 0) != 1:
            raise FenError(f"piece count: {name} must have exactly one king")
        for kind, limit in MAX_COUNT.items():
            if counts.get(kind * color, 0) > limit:
                raise FenError(f"piece count: {name} has too many {KIND_NAMES[kind]}")
    side_field = fields[1] if len(fields) > 1 else "w"
    if side_field in ("w", "r"):
        side = RED
    elif side_field == "b":
        side = BLACK
    else:
        raise FenError(f"side to move: {side_field!r}")
    pos = Position(board, side)
    if kings_facing(pos.board, pos.kings[RED], pos.kings[BLACK]):
        raise FenError("piece placement: kings face each other on an open file")
    return pos


def format_fen(pos: Position) -> str:
    rows = []
    for rank in range(9, -1, -1):
        row, empty = "", 0
        for f in range(9):
            p = pos.board[square(f, rank)]
            if p == 0:
                empty += 1
                continue
            if empty:
                row += str(empty)
                empty = 0
            letter = KIND_LETTERS[abs(p)]
            row += letter.upper() if p > 0 else letter
        if empty:
            row += str(empty)
        rows.append(row)
    return "/".join(rows) + (" w" if pos.side == RED else " b")
