"""Compiled negamax for MATL/LOC layouts.

A line-for-line port of ``Searcher._negamax`` over numpy board arrays: same
legal-move order, same ordering keys, same node counting and abort rule, and
the same left-to-right float sums in the leaf evaluation, so results are
identical to the Python searcher.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import board as B
from .board import Move, Position
from .evaluation import PHASE_POINTS, PHASE_TOTAL, WeightStore, piece_square_tables
from .search import MATE, ORDER_RANK, QUIET_KEY, SearchAborted, SearchResult

MAXPLY = 64
MAXMOVES = 160


def _tables():
    rays = np.full((90, 4, 9), -1, np.int64)
    ray_len = np.zeros((90, 4), np.int64)
    for sq in range(90):
        for d, ray in enumerate(B.RAYS[sq]):
            ray_len[sq, d] = len(ray)
            rays[sq, d, : len(ray)] = ray
    kmov = np.zeros((90, 8, 2), np.int64)
    kmov_n = np.zeros(90, np.int64)
    katt = np.zeros((90, 8, 2), np.int64)
    katt_n = np.zeros(90, np.int64)
    for sq in range(90):
        kmov_n[sq] = len(B.KNIGHT_MOVES[sq])
        for i, (t, leg) in enumerate(B.KNIGHT_MOVES[sq]):
            kmov[sq, i] = (t, leg)
        katt_n[sq] = len(B.KNIGHT_ATTACKERS[sq])
        for i, (t, leg) in enumerate(B.KNIGHT_ATTACKERS[sq]):
            katt[sq, i] = (t, leg)
    mins = np.zeros((2, 90, 4, 2), np.int64)
    mins_n = np.zeros((2, 90), np.int64)
    guard = np.zeros((2, 90, 4), np.int64)
    guard_n = np.zeros((2, 90), np.int64)
    king = np.zeros((2, 90, 4), np.int64)
    king_n = np.zeros((2, 90), np.int64)
    pawn = np.zeros((2, 90, 3), np.int64)
    pawn_n = np.zeros((2, 90), np.int64)
    palace = np.zeros((2, 90), np.bool_)
    half = np.zeros((2, 90), np.bool_)
    for ci, color in enumerate((B.RED, B.BLACK)):
        for sq in range(90):
            mins_n[ci, sq] = len(B.MINISTER_MOVES[color][sq])
            for i, (t, eye) in enumerate(B.MINISTER_MOVES[color][sq]):
                mins[ci, sq, i] = (t, eye)
            guard_n[ci, sq] = len(B.GUARD_MOVES[color][sq])
            guard[ci, sq, : guard_n[ci, sq]] = B.GUARD_MOVES[color][sq]
            king_n[ci, sq] = len(B.KING_MOVES[color][sq])
            king[ci, sq, : king_n[ci, sq]] = B.KING_MOVES[color][sq]
            pawn_n[ci, sq] = len(B.PAWN_MOVES[color][sq])
            pawn[ci, sq, : pawn_n[ci, sq]] = B.PAWN_MOVES[color][sq]
            palace[ci, sq] = B.in_palace(color, sq)
            half[ci, sq] = B.own_half(color, sq)
    phase = np.zeros(8, np.int64)
    for k, v in PHASE_POINTS.items():
        phase[k] = v
    rank = np.zeros(8, np.int64)
    for k, v in ORDER_RANK.items():
        rank[k] = v
    return (rays, ray_len, kmov, kmov_n, katt, katt_n, mins, mins_n, guard, guard_n,
            king, king_n, pawn, pawn_n, palace, half, phase, rank)


(RAYS, RAY_LEN, KMOV, KMOV_N, KATT, KATT_N, MINS, MINS_N, GUARD_T, GUARD_N,
 KING_T, KING_N, PAWN_T, PAWN_N, PALACE, HALF, PHASE, RANK) = _tables()

K_KING, K_GUARD, K_MIN, K_ROOK, K_KNIGHT, K_CANNON, K_PAWN = B.KINDS


def _signed(hashes) -> np.ndarray:
    """64-bit Zobrist keys reinterpreted as int64 (XOR is unchanged)."""
    return np.array(hashes, dtype=np.uint64).view(np.int64)


ZOB = _signed(B.ZOBRIST).reshape(15, 90)
ZSIDE = _signed([B.ZOBRIST_SIDE])[0]


@njit(cache=True)
def _ci(color):
    return 0 if color > 0 else 1


@njit(cache=True)
def is_attacked(board, sq, color):
    ci = _ci(color)
    rook = K_ROOK * color
    cannon = K_CANNON * color
    for d in range(4):
        screen = False
        for k in range(RAY_LEN[sq, d]):
            s = RAYS[sq, d, k]
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
    knight = K_KNIGHT * color
    for k in range(KATT_N[sq]):
        if board[KATT[sq, k, 0]] == knight and board[KATT[sq, k, 1]] == 0:
            return True
    pawn = K_PAWN * color
    s = sq - 9 * color
    if 0 <= s < 90 and board[s] == pawn:
        return True
    if not HALF[ci, sq]:
        f = sq % 9
        if f > 0 and board[sq - 1] == pawn:
            return True
        if f < 8 and board[sq + 1] == pawn:
            return True
    if PALACE[ci, sq]:
        for k in range(GUARD_N[ci, sq]):
            if board[GUARD_T[ci, sq, k]] == K_GUARD * color:
                return True
        for k in range(KING_N[ci, sq]):
            if board[KING_T[ci, sq, k]] == K_KING * color:
                return True
    if HALF[ci, sq]:
        for k in range(MINS_N[ci, sq]):
            if board[MINS[ci, sq, k, 0]] == K_MIN * color and board[MINS[ci, sq, k, 1]] == 0:
                return True
    return False


@njit(cache=True)
def in_check(board, kings, color):
    k = kings[_ci(color)]
    if k < 0:
        return True
    rk = kings[0]
    bk = kings[1]
    if rk >= 0 and bk >= 0 and rk % 9 == bk % 9:
        clear = True
        for s in range(rk + 9, bk, 9):
            if board[s] != 0:
                clear = False
                break
        if clear:
            return True
    return is_attacked(board, k, -color)


@njit(cache=True)
def _push_pseudo(board, sq, color, frm, to, n):
    p = board[sq]
    kind = p * color
    ci = _ci(color)
    if kind == K_ROOK:
        for d in range(4):
            for k in range(RAY_LEN[sq, d]):
                s = RAYS[sq, d, k]
                q = board[s]
                if q == 0:
                    frm[n] = sq
                    to[n] = s
                    n += 1
                    continue
                if q * color < 0:
                    frm[n] = sq
                    to[n] = s
                    n += 1
                break
    elif kind == K_CANNON:
        for d in range(4):
            screen = False
            for k in range(RAY_LEN[sq, d]):
                s = RAYS[sq, d, k]
                q = board[s]
                if not screen:
                    if q == 0:
                        frm[n] = sq
                        to[n] = s
                        n += 1
                    else:
                        screen = True
                elif q != 0:
                    if q * color < 0:
                        frm[n] = sq
                        to[n] = s
                        n += 1
                    break
    elif kind == K_KNIGHT:
        for k in range(KMOV_N[sq]):
            s = KMOV[sq, k, 0]
            if board[KMOV[sq, k, 1]] == 0 and board[s] * color <= 0:
                frm[n] = sq
                to[n] = s
                n += 1
    elif kind == K_PAWN:
        for k in range(PAWN_N[ci, sq]):
            s = PAWN_T[ci, sq, k]
            if board[s] * color <= 0:
                frm[n] = sq
                to[n] = s
                n += 1
    elif kind == K_GUARD:
        for k in range(GUARD_N[ci, sq]):
            s = GUARD_T[ci, sq, k]
            if board[s] * color <= 0:
                frm[n] = sq
                to[n] = s
                n += 1
    elif kind == K_MIN:
        for k in range(MINS_N[ci, sq]):
            s = MINS[ci, sq, k, 0]
            if board[MINS[ci, sq, k, 1]] == 0 and board[s] * color <= 0:
                frm[n] = sq
                to[n] = s
                n += 1
    elif kind == K_KING:
        for k in range(KING_N[ci, sq]):
            s = KING_T[ci, sq, k]
            if board[s] * color <= 0:
                frm[n] = sq
                to[n] = s
                n += 1
    return n


@njit(cache=True)
def legal_moves(board, kings, color, frm, to):
    """Fill ``frm``/``to`` with legal moves sorted by (from, to); return the count."""
    ci = _ci(color)
    if kings[ci] < 0:
        return 0
    n = 0
    for sq in range(90):
        if board[sq] * color > 0:
            n = _push_pseudo(board, sq, color, frm, to, n)
    m = 0
    for i in range(n):
        f = frm[i]
        t = to[i]
        piece = board[f]
        cap = board[t]
        board[t] = piece
        board[f] = 0
        saved = kings[ci]
        osaved = kings[1 - ci]
        if piece == K_KING * color:
            kings[ci] = t
        if cap == -K_KING * color:
            kings[1 - ci] = -1
        ok = not in_check(board, kings, color)
        board[f] = piece
        board[t] = cap
        kings[ci] = saved
        kings[1 - ci] = osaved
        if ok:
            frm[m] = f
            to[m] = t
            m += 1
    # insertion sort by (from, to)
    for i in range(1, m):
        kf = frm[i]
        kt = to[i]
        key = kf * 90 + kt
        j = i - 1
        while j >= 0 and frm[j] * 90 + to[j] > key:
            frm[j + 1] = frm[j]
            to[j + 1] = to[j]
            j -= 1
        frm[j + 1] = kf
        to[j + 1] = kt
    return m


@njit(cache=True)
def evaluate(board, side, pst_o, pst_e, quantize):
    so = 0.0
    se = 0.0
    points = 0
    for sq in range(90):
        p = board[sq]
        if p != 0:
            so += pst_o[p + 7, sq]
            se += pst_e[p + 7, sq]
            points += PHASE[abs(p)]
    alpha = min(1.0, points / PHASE_TOTAL)
    v = alpha * so + (1.0 - alpha) * se
    if side < 0:
        v = -v
    if quantize:
        v = np.floor(abs(v) + 0.5) * (1.0 if v >= 0 else -1.0)
    return v


# Not cached: numba crashes when loading a cached self-recursive function.
@njit
def negamax(board, kings, side, depth, alpha, beta, ply, st, pst_o, pst_e, quantize, ordering,
            first_f, first_t, alphabeta, mf, mt, keys, pv, pv_len, h, zob, zside, rep, hist, hlen):
    # st: [nodes, budget, can_abort, aborted]
    # hist[:hlen] holds the game history; hist[hlen + k] the hash at ply k of this line.
    st[0] += 1
    pv_len[ply] = 0
    if st[2] == 1 and st[0] > st[1]:
        st[3] = 1
        return 0.0
    if kings[_ci(side)] < 0:
        return -(MATE - ply) * 1.0
    if rep and ply > 0:
        for k in range(hlen + ply):
            if hist[k] == h:
                return 0.0
    if depth == 0:
        return evaluate(board, side, pst_o, pst_e, quantize)
    n = legal_moves(board, kings, side, mf[ply], mt[ply])
    if n == 0:
        return -(MATE - ply) * 1.0
    if ordering:
        for i in range(n):
            f = mf[ply, i]
            t = mt[ply, i]
            if ply == 0 and f == first_f and t == first_t:
                keys[ply, i] = 0
            elif board[t] != 0:
                keys[ply, i] = 100 - 10 * RANK[abs(board[t])] + RANK[abs(board[f])]
            else:
                keys[ply, i] = QUIET_KEY
        for i in range(1, n):
            kf = mf[ply, i]
            kt = mt[ply, i]
            kk = keys[ply, i]
            j = i - 1
            while j >= 0 and keys[ply, j] > kk:
                mf[ply, j + 1] = mf[ply, j]
                mt[ply, j + 1] = mt[ply, j]
                keys[ply, j + 1] = keys[ply, j]
                j -= 1
            mf[ply, j + 1] = kf
            mt[ply, j + 1] = kt
            keys[ply, j + 1] = kk
    best = -np.inf
    ci = _ci(side)
    for i in range(n):
        f = mf[ply, i]
        t = mt[ply, i]
        piece = board[f]
        cap = board[t]
        board[t] = piece
        board[f] = 0
        saved = kings[ci]
        osaved = kings[1 - ci]
        if piece == K_KING * side:
            kings[ci] = t
        if cap == -K_KING * side:
            kings[1 - ci] = -1
        ch = h ^ zob[piece + 7, f] ^ zob[piece + 7, t] ^ zside
        if cap != 0:
            ch ^= zob[cap + 7, t]
        hist[hlen + ply] = h
        v = -negamax(board, kings, -side, depth - 1, -beta, -alpha, ply + 1, st, pst_o, pst_e,
                     quantize, ordering, -1, -1, alphabeta, mf, mt, keys, pv, pv_len,
                     ch, zob, zside, rep, hist, hlen)
        board[f] = piece
        board[t] = cap
        kings[ci] = saved
        kings[1 - ci] = osaved
        if st[3] == 1:
            return 0.0
        if v > best:
            best = v
            pv[ply, 0] = f * 90 + t
            cl = pv_len[ply + 1]
            for k in range(cl):
                pv[ply, k + 1] = pv[ply + 1, k]
            pv_len[ply] = cl + 1
            if alphabeta and v > alpha:
                alpha = v
                if alpha >= beta:
                    break
    return best


class FastSearcher:
    """Drop-in replacement for ``Searcher`` on MATL/LOC weight stores."""

    def __init__(
        self,
        ws: WeightStore,
        *,
        ordering: bool = False,
        quantize: bool = False,
        alphabeta: bool = True,
        repetition: bool = False,
    ):
        if not ws.is_table_evaluable():
            raise ValueError("FastSearcher needs a MATL/LOC-only layout")
        pst_o, pst_e = piece_square_tables(ws)
        self.pst_o = np.array(pst_o, dtype=np.float64)
        self.pst_e = np.array(pst_e, dtype=np.float64)
        self.ordering = ordering
        self.quantize = quantize
        self.alphabeta = alphabeta
        self.repetition = repetition
        self.nodes = 0
        self.budget = 0
        self.can_abort = False
        self._mf = np.zeros((MAXPLY, MAXMOVES), np.int64)
        self._mt = np.zeros((MAXPLY, MAXMOVES), np.int64)
        self._keys = np.zeros((MAXPLY, MAXMOVES), np.int64)
        self._pv = np.zeros((MAXPLY + 1, MAXPLY + 1), np.int64)
        self._pv_len = np.zeros(MAXPLY + 2, np.int64)

    def search(self, pos: Position, depth: int, first: Move | None = None) -> SearchResult:
        if depth >= MAXPLY:
            raise ValueError(f"depth must be below {MAXPLY}")
        board = np.array(pos.board, dtype=np.int64)
        kings = np.array([-1 if pos.kings[c] is None else pos.kings[c] for c in (B.RED, B.BLACK)], np.int64)
        st = np.array([0, self.budget, 1 if self.can_abort else 0, 0], np.int64)
        hlen = len(pos.history) if self.repetition else 0
        hist = np.zeros(hlen + MAXPLY + 1, np.int64)
        if hlen:
            hist[:hlen] = _signed(pos.history)
        score = negamax(
            board, kings, pos.side, depth, -np.inf, np.inf, 0, st, self.pst_o, self.pst_e,
            self.quantize, self.ordering,
            -1 if first is None else first.frm, -1 if first is None else first.to,
            self.alphabeta, self._mf, self._mt, self._keys, self._pv, self._pv_len,
            _signed([pos.hash])[0], ZOB, ZSIDE, self.repetition, hist, hlen,
        )
        self.nodes = int(st[0])
        if st[3]:
            raise SearchAborted
        pv = []
        b = list(pos.board)
        for k in range(self._pv_len[0]):
            code = int(self._pv[0, k])
            f, t = divmod(code, 90)
            pv.append(Move(f, t, b[t]))
            b[t], b[f] = b[f], 0
        return SearchResult(float(score), pv, self.nodes, depth)
