"""Exact optima for small instances: bitmask DP and plain enumeration."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import kernels
from .instance import Instance, Tour

DP_LIMIT = 15
BRUTE_LIMIT = 10


@dataclass(frozen=True)
class ExactResult:
    tour: Tour
    length: float
    within_limit: bool = True


def held_karp_dp(inst: Instance) -> ExactResult:
    """Optimal tour by dynamic programming over subsets (n <= 15)."""
    if inst.n > DP_LIMIT:
        raise ValueError(f"held_karp_dp supports at most {DP_LIMIT} cities, got {inst.n}")
    length, order = kernels.held_karp(np.ascontiguousarray(inst.matrix))
    tour = Tour.from_order(inst, order)
    return ExactResult(tour, tour.length)


def brute_force(inst: Instance) -> ExactResult:
    """Optimal tour by enumerating the (n-1)!/2 distinct tours (n <= 10)."""
    n = inst.n
    if n > BRUTE_LIMIT:
        raise ValueError(f"brute_force supports at most {BRUTE_LIMIT} cities, got {n}")
    D = inst.matrix
    best, best_order = np.inf, None
    for rest in itertools.permutations(range(1, n)):
        if rest[0] > rest[-1]:
            continue
        order = (0,) + rest
        length = D[order, order[1:] + order[:1]].sum()
        if length < best:
            best, best_order = length, order
    tour = Tour.from_order(inst, best_order)
    return ExactResult(tour, tour.length)
