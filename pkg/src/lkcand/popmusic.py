"""POPMUSIC-style tour construction and the candidate sets built from it.

A run optimises a tour on a random subsample, inserts the remaining cities
one at a time (nearest to the tour first, at the cheapest position),
polishes the window around each insertion with 2-opt, and then slides a
window of ``subpath_len`` cities around the tour re-optimising each
sub-path (2-opt and sequential 3-opt, endpoints held fixed) until a full
pass finds nothing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .candidates import CandidateSet, Generator, union_from_tours
from .instance import Instance, Tour
from .localsearch import SearchState, local_descent


@dataclass(frozen=True)
class PopmusicParams:
    sample_fraction: float = 0.1
    subpath_len: int = 12
    rebuild_rounds: int = 50
    runs_for_candidates: int = 10
    min_sample: int = 10

    def __post_init__(self):
        if not 0 < self.sample_fraction <= 1:
            raise ValueError("sample_fraction must be in (0, 1]")
        if self.subpath_len < 3:
            raise ValueError("subpath_len must be at least 3")
        if self.rebuild_rounds < 1 or self.runs_for_candidates < 1:
            raise ValueError("rebuild_rounds and runs_for_candidates must be positive")

    def sample_size(self, n: int) -> int:
        return min(n, max(3, self.min_sample, math.ceil(self.sample_fraction * n)))


def _path_descent(D: np.ndarray, path: np.ndarray, eps: float, three_opt: bool) -> np.ndarray | None:
    """Re-optimise the interior of ``path`` with both endpoints fixed.

    Returns the improved path or None.  Runs the 2-opt kernel (and then the
    sequential 3-opt kernel if ``three_opt``) on the sub-instance with the
    edge (last, first) fixed, which turns the cycle into the path.
    """
    r = path.size
    if r < 4:
        return None
    sub = np.ascontiguousarray(D[np.ix_(path, path)])
    neigh = np.argsort(sub + np.diag(np.full(r, np.inf)), axis=1, kind="stable")[:, : r - 1]
    neigh = np.ascontiguousarray(neigh, dtype=np.int64)
    fixed = np.full((r, 2), -1, dtype=np.int64)
    fixed[0, 0], fixed[r - 1, 0] = r - 1, 0
    order = np.arange(r, dtype=np.int64)
    pos = order.copy()
    dl = np.zeros(r, dtype=bool)
    moves = kernels.two_opt_descent(sub, order, pos, neigh, True, dl, fixed, eps)
    while three_opt:
        m3 = kernels.three_opt_descent(sub, order, pos, neigh, True, 5, dl, fixed, eps)
        if m3 == 0:
            break
        moves += m3 + kernels.two_opt_descent(sub, order, pos, neigh, True, dl, fixed, eps)
    if moves == 0:
        return None
    order = np.roll(order, -int(pos[0]))
    if order[1] == r - 1:
        order = np.concatenate([order[:1], order[1:][::-1]])
    old = sub[np.arange(r - 1), np.arange(1, r)].sum()
    new = sub[order[:-1], order[1:]].sum()
    if not new < old - eps:
        return None
    return path[order]


def _optimize_window(D, tour: np.ndarray, start: int, r: int, eps: float,
                     three_opt: bool = False) -> bool:
    m = tour.size
    idx = (start + np.arange(r)) % m
    better = _path_descent(D, tour[idx], eps, three_opt)
    if better is None:
        return False
    tour[idx] = better
    return True


def _check_cycle(tour: np.ndarray, members: np.ndarray) -> None:
    if tour.size != members.sum() or not members[tour].all() or np.unique(tour).size != tour.size:
        raise AssertionError("intermediate tour is not a cycle over its cities")


def popmusic_tour(inst: Instance, seed: int, p: PopmusicParams | None = None) -> Tour:
    p = p or PopmusicParams()
    n = inst.n
    if n < 4:
        raise ValueError("popmusic needs at least 4 cities")
    rng = np.random.default_rng(seed)
    D = np.ascontiguousarray(inst.matrix)
    eps = inst.metric.gain_epsilon
    r = min(p.subpath_len, n)

    # 1. optimised tour on a random subsample
    s = p.sample_size(n)
    sample = np.sort(rng.choice(n, size=s, replace=False))
    if s >= 4:
        sub = Instance(f"{inst.name}-sample", inst.coords[sample], inst.metric)
        state = SearchState.random(s, rng)
        local_descent(sub, state, None)
        tour = sample[state.order]
    else:
        tour = sample[rng.permutation(s)]
    members = np.zeros(n, dtype=bool)
    members[tour] = True
    _check_cycle(tour, members)

    # 2-3. greedy insertion of the remaining cities, each followed by a local polish
    gap = D[tour].min(axis=0)
    gap[members] = np.inf
    while tour.size < n:
        c = int(np.argmin(gap))
        nxt = np.roll(tour, -1)
        k = int(np.argmin(D[tour, c] + D[c, nxt] - D[tour, nxt]))
        tour = np.insert(tour, k + 1, c)
        members[c] = True
        gap = np.minimum(gap, D[c])
        gap[members] = np.inf
        w = min(r, tour.size)
        _optimize_window(D, tour, k + 1 - w // 2, w, eps)
    _check_cycle(tour, members)

    # 4. sliding sub-path optimisation until a full pass is quiet
    if n <= r:
        state = SearchState(tour, rng)
        local_descent(inst, state, None)
        tour = state.order.copy()
    else:
        for _ in range(p.rebuild_rounds):
            improved = False
            for start in range(n):
                improved |= _optimize_window(D, tour, start, r, eps, three_opt=True)
            if not improved:
                break
    _check_cycle(tour, members)
    return Tour.from_order(inst, tour)


def popmusic_candidates(inst: Instance, seed: int, p: PopmusicParams | None = None,
                        max_per_city: int | None = None) -> CandidateSet:
    """Frequency-ordered union of ``p.runs_for_candidates`` runs with seeds ``seed, seed+1, ...``."""
    p = p or PopmusicParams()
    tours = [popmusic_tour(inst, seed + i, p) for i in range(p.runs_for_candidates)]
    return union_from_tours(inst, tours, max_per_city, generator=Generator.POPMUSIC)
