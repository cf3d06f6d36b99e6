# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.  Semantics are defined by ``_pykernels``; every scan
order, tie-break and float expression here mirrors that module exactly."""

import math
import time

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

BACKEND = "cython"

ctypedef cnp.int64_t i64


# --------------------------------------------------------------------------
# spanning trees

def prim_mst(const double[:, ::1] D, pi_in, Py_ssize_t exclude=-1):
    cdef Py_ssize_t n = D.shape[0]
    cdef const double[::1] pi = np.ascontiguousarray(pi_in, dtype=np.float64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] valid_a = np.ones(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] in_tree_a = np.zeros(n, dtype=np.uint8)
    cdef cnp.ndarray[double, ndim=1] key_a = np.full(n, INFINITY)
    cdef cnp.ndarray[i64, ndim=1] keyp_a = np.full(n, -1, dtype=np.int64)
    cdef cnp.ndarray[i64, ndim=1] parent_a = np.full(n, -1, dtype=np.int64)
    cdef cnp.uint8_t[::1] valid = valid_a
    cdef cnp.uint8_t[::1] in_tree = in_tree_a
    cdef double[::1] key = key_a
    cdef i64[::1] keyp = keyp_a
    cdef i64[::1] parent = parent_a
    cdef Py_ssize_t w, v, root = -1, m = 0, it, best_w
    cdef i64 nlo, nhi, olo, ohi, blo, bhi
    cdef double c, best, length = 0.0, piv
    if exclude >= 0:
        valid[exclude] = 0
    for w in range(n):
        if valid[w]:
            m += 1
            if root < 0:
                root = w
    order_a = np.empty(m, dtype=np.int64)
    cdef i64[::1] order = order_a
    order[0] = root
    in_tree[root] = 1
    v = root
    for it in range(1, m):
        piv = pi[v]
        for w in range(n):
            if not valid[w] or in_tree[w]:
                continue
            c = D[v, w] + (piv + pi[w])
            if c < key[w]:
                key[w] = c
                keyp[w] = v
            elif c == key[w]:
                nlo = w if w < v else v
                nhi = v if w < v else w
                olo = w if w < keyp[w] else keyp[w]
                ohi = keyp[w] if w < keyp[w] else w
                if nlo < olo or (nlo == olo and nhi < ohi):
                    keyp[w] = v
        best_w = -1
        best = INFINITY
        blo = 0
        bhi = 0
        for w in range(n):
            if not valid[w] or in_tree[w]:
                continue
            nlo = w if w < keyp[w] else keyp[w]
            nhi = keyp[w] if w < keyp[w] else w
            if best_w < 0 or key[w] < best or (key[w] == best and (nlo < blo or (nlo == blo and nhi < bhi))):
                best_w = w
                best = key[w]
                blo = nlo
                bhi = nhi
        v = best_w
        in_tree[v] = 1
        parent[v] = keyp[v]
        length += key[v]
        order[it] = v
    return parent_a, order_a, length


def path_max(const double[:, ::1] D, pi_in, const i64[::1] parent, const i64[::1] order):
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t m = order.shape[0]
    cdef const double[::1] pi = np.ascontiguousarray(pi_in, dtype=np.float64)
    M_a = np.full((n, n), -INFINITY)
    cdef double[:, ::1] M = M_a
    cdef Py_ssize_t idx, q, u
    cdef i64 v, p
    cdef double w, x
    for idx in range(1, m):
        v = order[idx]
        p = parent[v]
        w = D[v, p] + (pi[v] + pi[p])
        for q in range(idx):
            u = order[q]
            x = M[u, p]
            if w > x:
                x = w
            M[u, v] = x
            M[v, u] = x
    return M_a


# --------------------------------------------------------------------------
# tour helpers

cdef inline Py_ssize_t _wrap(Py_ssize_t i, Py_ssize_t n) nogil:
    if i >= n:
        return i - n
    if i < 0:
        return i + n
    return i


cdef void _reverse(i64[::1] order, i64[::1] pos, Py_ssize_t i, Py_ssize_t j) nogil:
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t length = ((j - i) % n + n) % n + 1
    cdef Py_ssize_t s
    cdef i64 a, b
    for s in range(length // 2):
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


cdef void _flip(i64[::1] order, i64[::1] pos, Py_ssize_t a_pos, Py_ssize_t b_pos) nogil:
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t inner = ((b_pos - a_pos) % n + n) % n + 1
    if 2 * inner <= n:
        _reverse(order, pos, a_pos, b_pos)
    else:
        _reverse(order, pos, _wrap(b_pos + 1, n), _wrap(a_pos - 1, n))


cdef inline bint _is_fixed(const i64[:, ::1] fixed, i64 a, i64 b) nogil:
    return fixed[a, 0] == b or fixed[a, 1] == b


cdef class _Queue:
    cdef i64[::1] buf
    cdef cnp.uint8_t[::1] dl
    cdef Py_ssize_t head, size, cap

    def __init__(self, cnp.uint8_t[::1] dont_look):
        cdef Py_ssize_t n = dont_look.shape[0], c
        self.cap = n + 1
        self.buf = np.empty(self.cap, dtype=np.int64)
        self.dl = dont_look
        self.head = 0
        self.size = 0
        for c in range(n):
            if not dont_look[c]:
                self.buf[self.size] = c
                self.size += 1

    cdef inline void push(self, i64 c):
        if self.dl[c]:
            self.dl[c] = 0
            self.buf[(self.head + self.size) % self.cap] = c
            self.size += 1

    cdef inline i64 pop(self):
        cdef i64 c = self.buf[self.head]
        self.head = (self.head + 1) % self.cap
        self.size -= 1
        self.dl[c] = 1
        return c

    cdef inline i64 peek(self):
        return self.buf[self.head]

    cdef void refill(self):
        cdef Py_ssize_t n = self.dl.shape[0], c
        self.head = 0
        self.size = n
        for c in range(n):
            self.dl[c] = 0
            self.buf[c] = c


cdef inline bint _deadline_hit(double deadline):
    return deadline != INFINITY and time.monotonic() > deadline


# --------------------------------------------------------------------------
# 2-opt

def two_opt_descent(const double[:, ::1] D, i64[::1] order, i64[::1] pos, const i64[:, ::1] neigh,
                    bint sorted_neigh, dont_look, const i64[:, ::1] fixed, double eps,
                    double deadline=INFINITY, trace=None):
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t K = neigh.shape[1]
    cdef cnp.uint8_t[::1] dl = dont_look.view(np.uint8)
    cdef _Queue queue = _Queue(dl)
    cdef long moves = 0
    cdef long full_start = 0 if queue.size == n else -1
    cdef i64 a, b, c, d, pa, pc
    cdef int direction, di
    cdef Py_ssize_t kk
    cdef double dab, g1, gain
    cdef bint moved
    while True:
        while queue.size > 0:
            a = queue.pop()
            moved = False
            for di in range(2):
                direction = 1 if di == 0 else -1
                pa = pos[a]
                b = order[_wrap(pa + direction, n)]
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
                    if c == b or c == order[_wrap(pa - direction, n)]:
                        continue
                    d = order[_wrap(pc + direction, n)]
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
                            trace.append(("2opt", gain, [(a, b), (c, d)], [(a, c), (b, d)]))
                        queue.push(a)
                        queue.push(b)
                        queue.push(c)
                        queue.push(d)
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

cdef struct Seg:
    i64 heads[3]
    i64 tails[3]
    int partner[6]


cdef bint _slots_single_cycle(i64[::1] order, i64[::1] pos, i64* ts, int k, Seg* out):
    cdef Py_ssize_t n = order.shape[0]
    cdef i64 P[3]
    cdef i64 S[3]
    cdef i64 rel[3]
    cdef int ranked[3]
    cdef int rank[3]
    cdef int i, j, r, tmp, a, b, seen, nxt
    cdef i64 u, v, base
    for i in range(k):
        u = ts[2 * i]
        v = ts[2 * i + 1]
        if order[_wrap(pos[u] + 1, n)] == v:
            P[i] = u
            S[i] = v
        else:
            P[i] = v
            S[i] = u
    base = pos[P[0]]
    for i in range(k):
        rel[i] = ((pos[P[i]] - base) % n + n) % n
        ranked[i] = i
    # stable insertion sort by rel (rel values are distinct)
    for i in range(1, k):
        j = i
        while j > 0 and rel[ranked[j - 1]] > rel[ranked[j]]:
            tmp = ranked[j - 1]
            ranked[j - 1] = ranked[j]
            ranked[j] = tmp
            j -= 1
    for r in range(k):
        rank[ranked[r]] = r
    for i in range(2 * k):
        out.partner[i] = -1
    for i in range(k):
        u = ts[2 * i + 1]
        if u == S[i]:
            a = 2 * rank[i]
        else:
            a = 2 * ((rank[i] - 1 + k) % k) + 1
        if i + 1 < k:
            v = ts[2 * i + 2]
            j = i + 1
        else:
            v = ts[0]
            j = 0
        if v == S[j]:
            b = 2 * rank[j]
        else:
            b = 2 * ((rank[j] - 1 + k) % k) + 1
        out.partner[a] = b
        out.partner[b] = a
    seen = 1
    nxt = out.partner[1]
    while nxt != 0:
        seen += 1
        if seen > k:
            return False
        nxt = out.partner[nxt ^ 1]
    if seen != k:
        return False
    for r in range(k):
        out.heads[r] = S[ranked[r]]
        out.tails[r] = P[ranked[(r + 1) % k]]
    return True


cdef void _apply_segments(i64[::1] order, i64[::1] pos, i64[::1] out, Seg* seg):
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t w = 0, s, length, h, t, i
    cdef int g, nxt
    cdef bint forward = True
    g = 0
    nxt = -1
    while True:
        h = pos[seg.heads[g]]
        t = pos[seg.tails[g]]
        length = ((t - h) % n + n) % n + 1
        if forward:
            for s in range(length):
                out[w] = order[_wrap(h + s, n)]
                w += 1
            nxt = seg.partner[2 * g + 1]
        else:
            for s in range(length):
                out[w] = order[_wrap(t - s, n)]
                w += 1
            nxt = seg.partner[2 * g]
        if nxt == 0:
            break
        g = nxt >> 1
        forward = (nxt & 1) == 0
    for i in range(n):
        order[i] = out[i]
        pos[out[i]] = i


cdef double _best_move(const double[:, ::1] D, i64[::1] order, i64[::1] pos, const i64[:, ::1] neigh,
                       bint sorted_neigh, int breadth, const i64[:, ::1] fixed, double eps, i64 t1,
                       i64* best_ts, int* best_k, Seg* best_seg):
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t K = neigh.shape[1]
    cdef double best_gain = eps, G0, g1, g2o, g2, gain
    cdef i64 ts[6]
    cdef Seg seg
    cdef i64 p1, p2, p3, p4, p5, p6, t2, t3, t4, t5, t6, s2, r2, s4, r4
    cdef int i2, i4, i6, tried3, tried5
    cdef Py_ssize_t k3, k5
    best_k[0] = 0
    p1 = pos[t1]
    for i2 in range(2):
        t2 = order[_wrap(p1 + 1, n)] if i2 == 0 else order[_wrap(p1 - 1, n)]
        if _is_fixed(fixed, t1, t2):
            continue
        G0 = D[t1, t2]
        p2 = pos[t2]
        s2 = order[_wrap(p2 + 1, n)]
        r2 = order[_wrap(p2 - 1, n)]
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
            for i4 in range(2):
                t4 = order[_wrap(p3 + 1, n)] if i4 == 0 else order[_wrap(p3 - 1, n)]
                if t4 == t1 or t4 == t2:
                    continue
                if _is_fixed(fixed, t3, t4):
                    continue
                g2o = g1 + D[t3, t4]
                p4 = pos[t4]
                s4 = order[_wrap(p4 + 1, n)]
                r4 = order[_wrap(p4 - 1, n)]
                if t1 != s4 and t1 != r4:
                    gain = g2o - D[t4, t1]
                    if gain > best_gain:
                        ts[0] = t1; ts[1] = t2; ts[2] = t3; ts[3] = t4
                        if _slots_single_cycle(order, pos, ts, 2, &seg):
                            best_gain = gain
                            best_k[0] = 2
                            best_ts[0] = t1; best_ts[1] = t2; best_ts[2] = t3; best_ts[3] = t4
                            best_seg[0] = seg
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
                    for i6 in range(2):
                        t6 = order[_wrap(p5 + 1, n)] if i6 == 0 else order[_wrap(p5 - 1, n)]
                        if t6 == t1 or t6 == t2 or t6 == t3 or t6 == t4:
                            continue
                        if _is_fixed(fixed, t5, t6):
                            continue
                        p6 = pos[t6]
                        if order[_wrap(p6 + 1, n)] == t1 or order[_wrap(p6 - 1, n)] == t1:
                            continue
                        gain = g2 + D[t5, t6] - D[t6, t1]
                        if gain > best_gain:
                            ts[0] = t1; ts[1] = t2; ts[2] = t3; ts[3] = t4; ts[4] = t5; ts[5] = t6
                            if _slots_single_cycle(order, pos, ts, 3, &seg):
                                best_gain = gain
                                best_k[0] = 3
                                best_ts[0] = t1; best_ts[1] = t2; best_ts[2] = t3
                                best_ts[3] = t4; best_ts[4] = t5; best_ts[5] = t6
                                best_seg[0] = seg
    return best_gain


def three_opt_descent(const double[:, ::1] D, i64[::1] order, i64[::1] pos, const i64[:, ::1] neigh,
                      bint sorted_neigh, int breadth, dont_look, const i64[:, ::1] fixed, double eps,
                      double deadline=INFINITY, long max_moves=-1, trace=None):
    cdef Py_ssize_t n = order.shape[0]
    cdef cnp.uint8_t[::1] dl = dont_look.view(np.uint8)
    cdef _Queue queue = _Queue(dl)
    cdef long moves = 0
    cdef long full_start = 0 if queue.size == n else -1
    cdef i64 best_ts[6]
    cdef int best_k, i
    cdef Seg best_seg
    cdef double gain
    cdef i64 t1
    out_a = np.empty(n, dtype=np.int64)
    cdef i64[::1] out = out_a
    while True:
        while queue.size > 0:
            t1 = queue.peek()
            gain = _best_move(D, order, pos, neigh, sorted_neigh, breadth, fixed, eps, t1,
                              best_ts, &best_k, &best_seg)
            if best_k == 0:
                queue.pop()
                continue
            _apply_segments(order, pos, out, &best_seg)
            moves += 1
            if trace is not None:
                removed = [(best_ts[2 * i], best_ts[2 * i + 1]) for i in range(best_k)]
                added = [(best_ts[2 * i + 1], best_ts[2 * i + 2]) for i in range(best_k - 1)]
                added.append((best_ts[2 * best_k - 1], best_ts[0]))
                trace.append((f"seq{best_k}", gain, removed, added))
            for i in range(2 * best_k):
                queue.push(best_ts[i])
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

def held_karp(const double[:, ::1] D):
    cdef Py_ssize_t n = D.shape[0]
    cdef Py_ssize_t m = n - 1
    cdef Py_ssize_t full = (1 << m) - 1
    dp_a = np.full(((1 << m), m), INFINITY)
    par_a = np.full(((1 << m), m), -1, dtype=np.int64)
    cdef double[:, ::1] dp = dp_a
    cdef i64[:, ::1] par = par_a
    cdef Py_ssize_t mask, prev, j, k, last
    cdef double best, v
    cdef int cnt
    for j in range(m):
        dp[1 << j, j] = D[0, j + 1]
    for mask in range(1, full + 1):
        cnt = 0
        for j in range(m):
            if (mask >> j) & 1:
                cnt += 1
        if cnt < 2:
            continue
        for j in range(m):
            if not (mask >> j) & 1:
                continue
            prev = mask ^ (1 << j)
            best = INFINITY
            last = -1
            for k in range(m):
                v = dp[prev, k] + D[k + 1, j + 1]
                if last < 0 or v < best:
                    best = v
                    last = k
            dp[mask, j] = best
            par[mask, j] = last
    best = INFINITY
    last = -1
    for j in range(m):
        v = dp[full, j] + D[j + 1, 0]
        if last < 0 or v < best:
            best = v
            last = j
    tour = []
    mask = full
    j = last
    while j >= 0:
        tour.append(j + 1)
        k = par[mask, j]
        mask ^= (1 << j)
        j = k
    tour.append(0)
    tour.reverse()
    return best, np.array(tour, dtype=np.int64)
