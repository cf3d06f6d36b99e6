"""Tour state, candidate-restricted 2-opt and sequential 3-opt descent, and kicks.

The tour is a flat order array plus its inverse (city -> slot).  The move
loops themselves live in :mod:`lkcand.kernels`; this module owns the state
and the bookkeeping around them.
"""
from __future__ import annotations

import itertools
import math
import time
import weakref
from typing import Iterable

import numpy as np

from . import kernels
from .candidates import CandidateSet, nearest_candidates
from .instance import Instance, Tour, tour_edges, tour_length


class SearchState:
    """Mutable tour under local search.

    ``fixed_edges`` are never removed by a descent.  When ``trace`` is a
    list, every accepted move appends ``(kind, gain, removed, added)``; for
    sequential moves the closing edge is the last entry of ``added``.
    """

    def __init__(self, order, rng: np.random.Generator | None = None,
                 fixed_edges: Iterable[tuple[int, int]] | None = None, trace: list | None = None):
        order = np.array(order, dtype=np.int64)
        n = order.size
        if n < 3 or not np.array_equal(np.sort(order), np.arange(n)):
            raise ValueError("order must be a permutation of 0..n-1 with n >= 3")
        self.order = order
        self.pos = np.empty(n, dtype=np.int64)
        self.pos[order] = np.arange(n)
        self.dont_look = np.zeros(n, dtype=bool)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.trace = trace
        self.set_fixed(fixed_edges or ())

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, **kw) -> "SearchState":
        return cls(random_tour(n, rng), rng, **kw)

    @property
    def n(self) -> int:
        return self.order.size

    def set_fixed(self, edges: Iterable[tuple[int, int]]) -> None:
        fixed = np.full((self.n, 2), -1, dtype=np.int64)
        kept = set()
        for a, b in edges:
            a, b = int(a), int(b)
            for u, v in ((a, b), (b, a)):
                slot = 0 if fixed[u, 0] < 0 else 1
                if fixed[u, slot] >= 0:
                    raise ValueError(f"city {u} has more than two fixed edges")
                fixed[u, slot] = v
            kept.add((min(a, b), max(a, b)))
        self._fixed = fixed
        self.fixed_edges = frozenset(kept)

    def length(self, inst: Instance) -> float:
        return tour_length(inst, self.order)

    def tour(self, inst: Instance) -> Tour:
        return Tour.from_order(inst, self.order)

    def edges(self) -> set[tuple[int, int]]:
        return tour_edges(self.order)

    def check(self) -> None:
        if not np.array_equal(self.pos[self.order], np.arange(self.n)):
            raise AssertionError("order and position arrays disagree")

    def copy(self) -> "SearchState":
        new = SearchState.__new__(SearchState)
        new.order = self.order.copy()
        new.pos = self.pos.copy()
        new.dont_look = self.dont_look.copy()
        new.rng = self.rng
        new.trace = self.trace
        new._fixed = self._fixed
        new.fixed_edges = self.fixed_edges
        return new


def random_tour(n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 3:
        raise ValueError("a tour needs at least 3 cities")
    return rng.permutation(n).astype(np.int64)


_complete: "weakref.WeakKeyDictionary[Instance, CandidateSet]" = weakref.WeakKeyDictionary()


def _scan_lists(inst: Instance, cand: CandidateSet | None) -> tuple[np.ndarray, bool]:
    if cand is None:
        cand = _complete.get(inst)
        if cand is None:
            cand = _complete[inst] = nearest_candidates(inst, inst.n - 1)
    if cand.n != inst.n:
        raise ValueError("candidate set and instance disagree on n")
    return cand.neighbor_array, cand.distance_sorted


def _dmat(inst: Instance) -> np.ndarray:
    return np.ascontiguousarray(inst.matrix)


def two_opt_moves(inst: Instance, state: SearchState, cand: CandidateSet | None = None,
                  deadline: float = math.inf) -> int:
    """Run 2-opt to a fixpoint; returns the number of applied moves."""
    neigh, srt = _scan_lists(inst, cand)
    return kernels.two_opt_descent(_dmat(inst), state.order, state.pos, neigh, srt, state.dont_look,
                                   state._fixed, inst.metric.gain_epsilon, deadline, state.trace)


def two_opt_descent(inst: Instance, state: SearchState, cand: CandidateSet | None = None,
                    deadline: float = math.inf) -> SearchState:
    """2-opt until no improving exchange remains among the scanned neighbours.

    Without ``cand`` every city is scanned, so on exact Euclidean instances
    the result has no crossing edges.
    """
    two_opt_moves(inst, state, cand, deadline)
    return state


def three_opt_moves(inst: Instance, state: SearchState, cand: CandidateSet | None,
                    breadth: int = 5, deadline: float = math.inf, max_moves: int = -1) -> int:
    neigh, srt = _scan_lists(inst, cand)
    return kernels.three_opt_descent(_dmat(inst), state.order, state.pos, neigh, srt, breadth,
                                     state.dont_look, state._fixed, inst.metric.gain_epsilon,
                                     deadline, max_moves, state.trace)


def sequential_three_opt_step(inst: Instance, state: SearchState, cand: CandidateSet | None,
                              breadth: int = 5) -> bool:
    """Apply one improving sequential move of depth <= 3, if any exists.

    Every added edge but the closing one comes from ``cand``.  Scans cities
    in index order and applies the best move found from the first city that
    has one.
    """
    state.dont_look[:] = False
    return three_opt_moves(inst, state, cand, breadth, max_moves=1) == 1


def local_descent(inst: Instance, state: SearchState, cand: CandidateSet | None,
                  breadth: int = 5, deadline: float = math.inf) -> int:
    """Alternate 2-opt and sequential 3-opt until neither improves."""
    total = 0
    while True:
        total += two_opt_moves(inst, state, cand, deadline)
        m3 = three_opt_moves(inst, state, cand, breadth, deadline)
        total += m3
        if m3 == 0 or (deadline != math.inf and time.monotonic() > deadline):
            return total


# --------------------------------------------------------------------------
# kicks


def _reset_from(state: SearchState, new_order: np.ndarray) -> None:
    old = state.edges()
    state.order[:] = new_order
    state.pos[new_order] = np.arange(state.n)
    changed = old ^ tour_edges(new_order)
    state.dont_look[:] = True
    for e in changed:
        state.dont_look[list(e)] = False


def _double_bridge_order(order: np.ndarray, cuts: tuple[int, int, int]) -> np.ndarray:
    i, j, k = cuts
    return np.concatenate([order[:i], order[k:], order[j:k], order[i:j]])


def _small_exchange(order: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform choice among tours whose edge set differs from ``order``'s in
    exactly four edges.  On five or fewer cities no such tour exists and the
    tour is returned unchanged."""
    n = order.size
    base = tour_edges(order)
    choices = []
    for rest in itertools.permutations(range(1, n)):
        if rest[0] > rest[-1]:
            continue
        cand = (0,) + rest
        if len(base - tour_edges(cand)) == 4:
            choices.append(cand)
    if not choices:
        return order.copy()
    return np.array(choices[rng.integers(len(choices))], dtype=np.int64)


def double_bridge(state: SearchState, cuts: tuple[int, int, int] | None = None) -> SearchState:
    """Double bridge kick: split the tour into A B C D and reconnect as A D C B.

    All four junction edges change.  Random cuts are taken after rotating the
    tour by a random offset, with every segment at least two cities long.
    Below eight cities a random tour differing in exactly four edges is used;
    on five or fewer cities none exists and the kick leaves the tour as is.
    """
    n = state.n
    order = state.order
    if cuts is not None:
        i, j, k = cuts
        if not 0 < i < j < k < n:
            raise ValueError("cuts must satisfy 0 < i < j < k < n")
        new = _double_bridge_order(order, (i, j, k))
    elif n < 8:
        new = _small_exchange(order, state.rng)
    else:
        rng = state.rng
        rotated = np.roll(order, -int(rng.integers(n)))
        while True:
            i, j, k = np.sort(rng.choice(np.arange(2, n - 1), size=3, replace=False))
            if j - i >= 2 and k - j >= 2 and n - k >= 2:
                break
        new = _double_bridge_order(rotated, (int(i), int(j), int(k)))
    _reset_from(state, new)
    return state


def constrained_restart_kick(state: SearchState, best: Tour) -> SearchState:
    """Fresh random tour; the edges of ``best`` may not be removed afterwards."""
    state.set_fixed(best.edges())
    new = random_tour(state.n, state.rng)
    state.order[:] = new
    state.pos[new] = np.arange(state.n)
    state.dont_look[:] = False
    return state


# --------------------------------------------------------------------------
# geometry


def crossing_count(inst: Instance, tour) -> int:
    """Number of tour-edge pairs that properly cross (shared endpoints excluded)."""
    order = np.asarray(tour.order if isinstance(tour, Tour) else tour)
    n = order.size
    P = inst.coords[order]
    Q = inst.coords[np.roll(order, -1)]

    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    A, B = P[:, None, :], Q[:, None, :]
    C, D = P[None, :, :], Q[None, :, :]
    d1 = orient(A, B, C)
    d2 = orient(A, B, D)
    d3 = orient(C, D, A)
    d4 = orient(C, D, B)
    cross = (d1 * d2 < 0) & (d3 * d4 < 0)
    idx = np.arange(n)
    adjacent = (np.abs(idx[:, None] - idx[None, :]) <= 1) | (np.abs(idx[:, None] - idx[None, :]) == n - 1)
    cross &= ~adjacent
    return int(np.triu(cross, 1).sum())
