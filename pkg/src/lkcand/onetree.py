"""Minimum spanning trees, minimum 1-trees, alpha-nearness and the
Held-Karp subgradient ascent.

All weights live in "pi space": the adjusted distance between ``i`` and
``j`` is ``d(i, j) + (pi[i] + pi[j])``.  Tour lengths under the adjusted
distances differ from the true ones by ``2 * sum(pi)``, so the optimal tour
is unchanged and ``length - 2 * sum(pi)`` of any minimum 1-tree is a lower
bound on the optimum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .instance import Instance


def _pi(inst: Instance, pi) -> np.ndarray:
    if pi is None:
        return np.zeros(inst.n)
    arr = np.ascontiguousarray(pi, dtype=np.float64)
    if arr.shape != (inst.n,):
        raise ValueError(f"pi must have length {inst.n}")
    return arr


def _dmat(inst: Instance) -> np.ndarray:
    return np.ascontiguousarray(inst.matrix)


def adjusted_matrix(inst: Instance, pi=None) -> np.ndarray:
    pi = _pi(inst, pi)
    return inst.matrix + (pi[:, None] + pi[None, :])


def minimum_spanning_tree(inst: Instance, pi=None, exclude: int | None = None):
    """Prim MST over all cities except ``exclude``.

    Returns ``(parent, length)``; ``parent[v] == -1`` for the root (the
    lowest-index included city) and for ``exclude``.
    """
    need = 4 if exclude is not None else 3
    if inst.n < need:
        raise ValueError(f"need at least {need} cities")
    parent, _, length = kernels.prim_mst(_dmat(inst), _pi(inst, pi), -1 if exclude is None else exclude)
    return parent, length


def default_special(inst: Instance, pi=None) -> int:
    """City whose second-nearest neighbour (adjusted) is farthest; ties -> lowest index."""
    dpi = adjusted_matrix(inst, pi)
    np.fill_diagonal(dpi, np.inf)
    second = np.partition(dpi, 1, axis=1)[:, 1]
    return int(np.argmax(second))


@dataclass(frozen=True, eq=False)
class OneTree:
    """A minimum 1-tree at a given pi.

    ``parent`` holds the spanning tree over all cities but ``special``;
    ``parent[root] == parent[special] == -1``.  ``extra_edges`` joins
    ``special`` to its nearest and second-nearest neighbour, in that order.
    """

    parent: np.ndarray
    tree_order: np.ndarray
    root: int
    special: int
    extra_edges: tuple[tuple[int, int], tuple[int, int]]
    degree: np.ndarray
    length: float
    pi: np.ndarray

    @property
    def n(self) -> int:
        return self.parent.size

    @property
    def lower_bound(self) -> float:
        return self.length - 2.0 * float(self.pi.sum())

    @property
    def is_tour(self) -> bool:
        return bool(np.all(self.degree == 2))

    @property
    def dad(self) -> np.ndarray:
        """Tree parent per city, with ``special`` hanging off its nearest neighbour."""
        dad = self.parent.copy()
        dad[self.special] = self.extra_edges[0][1]
        return dad

    def edges(self) -> list[tuple[int, int]]:
        out = [(min(v, int(p)), max(v, int(p))) for v, p in enumerate(self.parent) if p >= 0]
        out += [(min(a, b), max(a, b)) for a, b in self.extra_edges]
        return out

    def edge_list_text(self, inst: Instance) -> str:
        """Debug dump: one ``i j weight`` line per edge (adjusted weights)."""
        lines = []
        for a, b in self.edges():
            w = float(inst.matrix[a, b] + (self.pi[a] + self.pi[b]))
            lines.append(f"{a} {b} {w!r}")
        return "\n".join(lines) + "\n"


def minimum_one_tree(inst: Instance, pi=None, special: int | None = None) -> OneTree:
    if inst.n < 4:
        raise ValueError("a minimum 1-tree needs at least 4 cities")
    pi = _pi(inst, pi)
    D = _dmat(inst)
    if special is None:
        special = default_special(inst, pi)
    parent, order, length = kernels.prim_mst(D, pi, special)
    row = D[special] + (pi[special] + pi)
    row[special] = np.inf
    near = np.argsort(row, kind="stable")[:2]
    a, b = int(near[0]), int(near[1])
    degree = np.zeros(inst.n, dtype=np.int64)
    for v, p in enumerate(parent):
        if p >= 0:
            degree[v] += 1
            degree[p] += 1
    degree[special] += 2
    degree[a] += 1
    degree[b] += 1
    total = length + float(row[a]) + float(row[b])
    pi = pi.copy()
    pi.setflags(write=False)
    return OneTree(parent, order, int(order[0]), int(special), ((special, a), (special, b)),
                   degree, total, pi)


# --------------------------------------------------------------------------
# alpha-nearness


@dataclass(frozen=True, eq=False)
class AlphaTable:
    """Alpha values for every pair plus the per-city candidate ranking.

    Ranking key per city ``i``: alpha, then ``i``'s tree parent first, then
    adjusted distance, then true distance, then index.
    """

    alpha: np.ndarray
    adjusted: np.ndarray
    dist: np.ndarray
    dad: np.ndarray

    @property
    def n(self) -> int:
        return self.alpha.shape[0]

    def ranking(self, i: int) -> np.ndarray:
        others = np.delete(np.arange(self.n), i)
        not_dad = (others != self.dad[i]).astype(np.int8)
        keys = (others, self.dist[i, others], self.adjusted[i, others], not_dad, self.alpha[i, others])
        return others[np.lexsort(keys)]

    def rank_matrix(self) -> np.ndarray:
        """``R[i, j]`` is the 1-based position of ``j`` in ``ranking(i)``; 0 on the diagonal."""
        R = np.zeros((self.n, self.n), dtype=np.int64)
        for i in range(self.n):
            R[i, self.ranking(i)] = np.arange(1, self.n)
        return R


def alpha_values(inst: Instance, t: OneTree) -> AlphaTable:
    """Alpha-nearness of every pair with respect to the 1-tree ``t``.

    For pairs avoiding the special node, alpha is the adjusted edge weight
    minus the largest weight on the tree path between the endpoints.  For
    pairs at the special node it is the weight minus the special node's
    second extra edge (zero for both extra edges).
    """
    D = _dmat(inst)
    pi = np.ascontiguousarray(t.pi)
    dpi = D + (pi[:, None] + pi[None, :])
    M = kernels.path_max(D, pi, t.parent, t.tree_order)
    alpha = dpi - M
    s = t.special
    (_, a), (_, b) = t.extra_edges
    row = dpi[s] - dpi[s, b]
    row[a] = row[b] = 0.0
    alpha[s, :] = row
    alpha[:, s] = row
    np.fill_diagonal(alpha, np.inf)
    return AlphaTable(alpha, dpi, np.asarray(inst.matrix), t.dad)


# --------------------------------------------------------------------------
# subgradient ascent


class AscentResult(NamedTuple):
    pi: np.ndarray
    best_bound: float
    tree: OneTree
    iterations: int


def subgradient_ascent(
    inst: Instance,
    max_stale: int | None = None,
    initial_step: float | None = None,
    initial_period: int | None = None,
    special: int | None = None,
) -> AscentResult:
    """Raise the 1-tree lower bound by moving pi along ``degree - 2``.

    Schedule: step starts at ``initial_step`` (default 1% of the mean edge
    of the pi = 0 1-tree, about one distance unit on a 1000-wide box with a
    hundred cities) and is doubled after every
    improving iteration of the first period; period starts at ``n // 2``.
    At the end of each period the period is halved, and the step doubled if
    every iteration of that period improved the bound, halved otherwise.
    Stops when the 1-tree is a tour, the period drops below one, the step
    below 1e-7, or after ``max_stale`` (default ``10 n``) consecutive
    non-improving 1-trees.  The special node stays fixed throughout.
    """
    n = inst.n
    if n < 4:
        raise ValueError("subgradient ascent needs at least 4 cities")
    if max_stale is None:
        max_stale = 10 * n
    if special is None:
        special = default_special(inst)
    pi = np.zeros(n)
    tree = minimum_one_tree(inst, pi, special)
    best_tree, best = tree, tree.lower_bound
    iterations = 0
    if tree.is_tour:
        return AscentResult(best_tree.pi, best, best_tree, iterations)
    step = float(initial_step) if initial_step is not None else 0.01 * tree.length / n
    period = initial_period if initial_period is not None else max(1, n // 2)
    stale = 0
    first = True
    while period >= 1 and step >= 1e-7:
        all_improved = True
        for _ in range(period):
            pi = pi + step * (tree.degree - 2)
            tree = minimum_one_tree(inst, pi, special)
            iterations += 1
            bound = tree.lower_bound
            if bound > best:
                best_tree, best = tree, bound
                stale = 0
                if first:
                    step *= 2.0
            else:
                stale += 1
                all_improved = False
            if tree.is_tour or stale >= max_stale:
                return AscentResult(best_tree.pi, best, best_tree, iterations)
        first = False
        step = step * 2.0 if all_improved else step / 2.0
        period //= 2
    return AscentResult(best_tree.pi, best, best_tree, iterations)
