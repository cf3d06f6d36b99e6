"""Pure-Python/numpy implementation of the hot kernels.

This module defines the reference semantics; ``_ckernels.pyx`` mirrors it
operation for operation (same scan order, same tie-breaks, same float
expressions) so both backends produce identical tours.  Everything works
in place on ``order``/``pos`` int64 arrays and a dense distance matrix.

Candidate neighbours arrive as an ``(n, K)`` int64 array padded with -1.
Fixed edges arrive as an ``(n, 2)`` int64 array of partners (-1 = none).
"""
from __future__ import annotations

import math
import time
from collections import deque

import numpy as np

BACKEND = "python"


# --------------------------------------------------------------------------
# spanning trees


def prim_mst(D, pi, exclude=-1):
    """Prim's MST under ``D[i, j] + (pi[i] + pi[j])``, skipping ``exclude``.

    Ties are broken by the lexicographically smaller (min, max) endpoint
    pair, so the tree is the unique MST under that total order.

    Returns ``(parent, order, length)``: ``parent[root] == parent[exclude]
    == -1`` and ``order`` lists tree nodes in insertion order.
    """
    n = D.shape[0]
    pi = np.asarray(pi, dtype=np.float64)
    valid = np.ones(n, dtype=bool)
    if exclude >= 0:
        valid[exclude] = False
    root = int(np.flatnonzero(valid)[0])
    in_tree = np.zeros(n, dtype=bool)
    key = np.full(n, np.inf)
    keyp = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    idx = np.arange(n)
    order = [root]
    in_tree[root] = True
    length = 0.0
    v = root
    m = int(valid.sum())
    for _ in range(m - 1):
        c = D[v] + (pi[v] + pi)
        open_ = valid & ~in_tree
        new_lo = np.minimum(idx, v)
        new_hi = np.maximum(idx, v)
        old_lo = np.minimum(idx, keyp)
        old_hi = np.maximum(idx, keyp)
        lex = (new_lo < old_lo) | ((new_lo == old_lo) & (new_hi < old_hi))
        better = open_ & ((c < key) | ((c == key) & lex))
        key[better] = c[better]
        keyp[better] = v
        cand = np.flatnonzero(open_)
        kmin = key[cand].min()
        tied = cand[key[cand] == kmin]
        if tied.size > 1:
            lo = np.minimum(tied, keyp[tied])
            hi = np.maximum(tied, keyp[tied])
            tied = tied[np.lexsort((hi, lo))]
        v = int(tied[0])
        in_tree[v] = True
        parent[v] = keyp[v]
        length += float(key[v])
        order.append(v)
    return parent, np.array(order, dtype=np.int64), length


def path_max(D, pi, parent, order):
    """Largest adjusted edge weight on every tree path.

    ``M[u, v]`` for tree nodes ``u != v``; rows/columns of nodes outside
    the tree and the diagonal are ``-inf``.
    """
    n = D.shape[0]
    M = np.full((n, n), -np.inf)
    for idx in range(1, len(order)):
        v = order[idx]
        p = parent[v]
        w = D[v, p] + (pi[v] + pi[p])
        prev = order[:idx]
        col = np.maximum(M[prev, p], w)
        M[prev, v] = col
        M[v, prev] = col
    return M


# --------------------------------------------------------------------------
# tour helpers


def _reverse(order, pos, i, j):
    """Reverse the cyclic position range i..j (inclusive, going forward)."""
    n = order.shape[0]
    length = (j - i) % n + 1
    for _ in range(length // 2):
        a = order[i]
        b = order[j]
        order[i] = b
        pos[b] = i
        order[j] = a
        pos[a] = j
        i += 1
        if i == n:
            i = 0
        j -= 1
        if j < 0:
            j = n - 1


def _flip(order, pos, a_pos, b_pos):
    """Reverse range a_pos..b_pos or its complement, whichever is shorter."""
    n = order.shape[0]
    inner = (b_pos - a_pos) % n + 1
    if 2 * inner <= n:
        _reverse(order, pos, a_pos, b_pos)
    else:
        _reverse(order, pos, (b_pos + 1) % n, (a_pos - 1) % n)


def _is_fixed(fixed, a, b):
    return fixed[a, 0] == b or fixed[a, 1] == b


class _Queue:
    """FIFO of active cities; ``dont_look[c]`` is False exactly for queued c."""

    def __init__(self, dont_look):
        self.dl = dont_look
        self.q = deque(int(c) for c in np.flatnonzero(~dont_look))

    def push(self, c):
        if self.dl[c]:
            self.dl[c] = False
            self.q.append(c)

    def pop(self):
        c = self.q.popleft()
        self.dl[c] = True
        return c

    def refill(self):
        self.dl[:] = False
        self.q = deque(range(self.dl.shape[0]))


def _deadline_hit(deadline):
    return deadline != math.inf and time.monotonic() > deadline


# --------------------------------------------------------------------------
# 2-opt


def two_opt_descent(D, order, pos, neigh, sorted_neigh, dont_look, fixed, eps,
                    deadline=math.inf, trace=None):
    """Candidate-restricted 2-opt with don't-look bits, run to a verified fixpoint.

    From each active city ``a`` and each tour neighbour ``b`` the scan adds
    ``(a, c)`` for candidates ``c`` of ``a`` (first improvement); the
    closing edge ``(b, d)`` is unrestricted.  When the queue drains, every
    city is rescanned once; the descent stops after a rescan with no move.
    Returns the number of applied moves.
    """
    n = order.shape[0]
    K = neigh.shape[1]
    queue = _Queue(dont_look)
    moves = 0
    full_start = 0 if len(queue.q) == n else -1
    while True:
        while queue.q:
            a = queue.pop()
            moved = False
            for direction in (1, -1):
                pa = pos[a]
                b = order[(pa + direction) % n]
                if _is_fixed(fixed, a, b):
                    continue
                dab = D[a, b]
                for kk in range(K):
                    c = neigh[a, kk]
                    if c < 0:
                        break
                    g1 = dab - D[a, c]
                    if g1 <= 0.0:
                        if sorted_neigh:
                            break
                        continue
                    pc = pos[c]
                    if c == b or c == order[(pa - direction) % n]:
                        continue
                    d = order[(pc + direction) % n]
                    if _is_fixed(fixed, c, d):
                        continue
                    gain = g1 + D[c, d] - D[b, d]
                    if gain > eps:
                        if direction == 1:
                            _flip(order, pos, pos[b], pc)
                        else:
                            _flip(order, pos, pa, pos[d])
                        moves += 1
                        if trace is not None:
                            a_, b_, c_, d_ = int(a), int(b), int(c), int(d)
                            trace.append(("2opt", float(gain), [(a_, b_), (c_, d_)], [(a_, c_), (b_, d_)]))
                        for t in (a, b, c, d):
                            queue.push(t)
                        moved = True
                        break
                if moved:
                    break
            if moves and moves % 1000 == 0 and moved and _deadline_hit(deadline):
                return moves
        if full_start == moves:
            return moves
        full_start = moves
        queue.refill()


# --------------------------------------------------------------------------
# sequential 3-opt


def _slots_single_cycle(order, pos, ts, k):
    """Check that removing x_i = (t[2i], t[2i+1]) and adding
    (t[2i+1], t[2i+2]) plus closing (t[2k-1], t[0]) yields one cycle.

    Returns the segment bookkeeping needed to apply the move, or None.
    """
    n = order.shape[0]
    # orient each removed edge as (p, s) with s = succ(p)
    ps = []
    for i in range(k):
        u, v = ts[2 * i], ts[2 * i + 1]
        if order[(pos[u] + 1) % n] == v:
            ps.append((u, v))
        else:
            ps.append((v, u))
    base = pos[ps[0][0]]
    rel = [(pos[p] - base) % n for p, _ in ps]
    ranked = sorted(range(k), key=lambda i: rel[i])
    rank = [0] * k
    for r, i in enumerate(ranked):
        rank[i] = r

    def slot(node, i):
        # head slot of segment rank[i] if node is the succ side, else tail
        # slot of the previous segment
        if node == ps[i][1]:
            return 2 * rank[i]
        return 2 * ((rank[i] - 1) % k) + 1

    partner = [-1] * (2 * k)
    for i in range(k):
        a = slot(ts[2 * i + 1], i)
        if i + 1 < k:
            b = slot(ts[2 * i + 2], i + 1)
        else:
            b = slot(ts[0], 0)
        partner[a] = b
        partner[b] = a
    seen = 1
    nxt = partner[1]
    while nxt != 0:
        seen += 1
        if seen > k:
            return None
        nxt = partner[nxt ^ 1]
    if seen != k:
        return None
    heads = [ps[ranked[g]][1] for g in range(k)]
    tails = [ps[ranked[(g + 1) % k]][0] for g in range(k)]
    return heads, tails, partner


def _apply_segments(order, pos, heads, tails, partner):
    n = order.shape[0]
    out = np.empty(n, dtype=np.int64)
    w = 0

    def emit(g, forward):
        nonlocal w
        h = pos[heads[g]]
        t = pos[tails[g]]
        length = (t - h) % n + 1
        if forward:
            for s in range(length):
                out[w] = order[(h + s) % n]
                w += 1
        else:
            for s in range(length):
                out[w] = order[(t - s) % n]
                w += 1

    emit(0, True)
    nxt = partner[1]
    while nxt != 0:
        g = nxt >> 1
        if nxt & 1 == 0:
            emit(g, True)
            nxt = partner[nxt + 1]
        else:
            emit(g, False)
            nxt = partner[nxt - 1]
    order[:] = out
    pos[out] = np.arange(n)


def _best_move(D, order, pos, neigh, sorted_neigh, breadth, fixed, eps, t1):
    n = order.shape[0]
    K = neigh.shape[1]
    best_gain = eps
    best = None
    p1 = pos[t1]
    for t2 in (order[(p1 + 1) % n], order[(p1 - 1) % n]):
        if _is_fixed(fixed, t1, t2):
            continue
        G0 = D[t1, t2]
        p2 = pos[t2]
        s2 = order[(p2 + 1) % n]
        r2 = order[(p2 - 1) % n]
        tried3 = 0
        for k3 in range(K):
            if tried3 >= breadth:
                break
            t3 = neigh[t2, k3]
            if t3 < 0:
                break
            g1 = G0 - D[t2, t3]
            if g1 <= 0.0:
                if sorted_neigh:
                    break
                continue
            if t3 == t1 or t3 == s2 or t3 == r2:
                continue
            tried3 += 1
            p3 = pos[t3]
            for t4 in (order[(p3 + 1) % n], order[(p3 - 1) % n]):
                if t4 == t1 or t4 == t2:
                    continue
                if _is_fixed(fixed, t3, t4):
                    continue
                g2o = g1 + D[t3, t4]
                p4 = pos[t4]
                s4 = order[(p4 + 1) % n]
                r4 = order[(p4 - 1) % n]
                if t1 != s4 and t1 != r4:
                    gain = g2o - D[t4, t1]
                    if gain > best_gain:
                        ts = (t1, t2, t3, t4)
                        seg = _slots_single_cycle(order, pos, ts, 2)
                        if seg is not None:
                            best_gain, best = gain, (ts, seg)
                tried5 = 0
                for k5 in range(K):
                    if tried5 >= breadth:
                        break
                    t5 = neigh[t4, k5]
                    if t5 < 0:
                        break
                    g2 = g2o - D[t4, t5]
                    if g2 <= 0.0:
                        if sorted_neigh:
                            break
                        continue
                    if t5 == t1 or t5 == t2 or t5 == t3 or t5 == s4 or t5 == r4:
                        continue
                    tried5 += 1
                    p5 = pos[t5]
                    for t6 in (order[(p5 + 1) % n], order[(p5 - 1) % n]):
                        if t6 == t1 or t6 == t2 or t6 == t3 or t6 == t4:
                            continue
                        if _is_fixed(fixed, t5, t6):
                            continue
                        p6 = pos[t6]
                        if order[(p6 + 1) % n] == t1 or order[(p6 - 1) % n] == t1:
                            continue
                        gain = g2 + D[t5, t6] - D[t6, t1]
                        if gain > best_gain:
                            ts = (t1, t2, t3, t4, t5, t6)
                            seg = _slots_single_cycle(order, pos, ts, 3)
                            if seg is not None:
                                best_gain, best = gain, (ts, seg)
    if best is None:
        return 0.0, None
    return best_gain, best


def three_opt_descent(D, order, pos, neigh, sorted_neigh, breadth, dont_look, fixed, eps,
                      deadline=math.inf, max_moves=-1, trace=None):
    """Sequential 3-opt (depth <= 3) restricted to candidate lists.

    ``y1`` and ``y2`` must be candidate edges; the closing edge is free.
    For each active ``t1`` the best move over the breadth-limited search
    tree is applied.  Stops at a verified fixpoint or after ``max_moves``
    moves (``-1`` = unlimited).  Returns the number of applied moves.
    """
    n = order.shape[0]
    queue = _Queue(dont_look)
    moves = 0
    full_start = 0 if len(queue.q) == n else -1
    while True:
        while queue.q:
            t1 = queue.q[0]
            gain, best = _best_move(D, order, pos, neigh, sorted_neigh, breadth, fixed, eps, t1)
            if best is None:
                queue.pop()
                continue
            ts, (heads, tails, partner) = best
            _apply_segments(order, pos, heads, tails, partner)
            moves += 1
            if trace is not None:
                k = len(ts) // 2
                ts = tuple(int(t) for t in ts)
                removed = [(ts[2 * i], ts[2 * i + 1]) for i in range(k)]
                added = [(ts[2 * i + 1], ts[2 * i + 2]) for i in range(k - 1)] + [(ts[-1], ts[0])]
                trace.append((f"seq{k}", float(gain), removed, added))
            for t in ts:
                queue.push(t)
            if moves == max_moves:
                return moves
            if moves % 1000 == 0 and _deadline_hit(deadline):
                return moves
        if full_start == moves:
            return moves
        full_start = moves
        queue.refill()


# --------------------------------------------------------------------------
# exact DP


def held_karp(D):
    """Bitmask DP over subsets; returns ``(length, order)`` with order[0] == 0."""
    n = D.shape[0]
    m = n - 1
    full = (1 << m) - 1
    dp = np.full((1 << m, m), np.inf)
    par = np.full((1 << m, m), -1, dtype=np.int64)
    D1 = np.ascontiguousarray(D[1:, 1:])
    for j in range(m):
        dp[1 << j, j] = D[0, j + 1]
    bits = np.arange(m)
    for mask in range(1, full + 1):
        js = bits[(mask >> bits) & 1 == 1]
        if js.size < 2:
            continue
        prev = mask ^ (1 << js)
        vals = dp[prev] + D1[:, js].T
        arg = np.argmin(vals, axis=1)
        dp[mask, js] = vals[np.arange(js.size), arg]
        par[mask, js] = arg
    closing = dp[full] + D[1:, 0]
    last = int(np.argmin(closing))
    best = float(closing[last])
    tour = []
    mask = full
    j = last
    while j >= 0:
        tour.append(j + 1)
        pj = int(par[mask, j])
        mask ^= 1 << j
        j = pj
    tour.append(0)
    tour.reverse()
    return best, np.array(tour, dtype=np.int64)
