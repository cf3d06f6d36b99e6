"""Candidate sets: per-city neighbour lists that restrict the local search.

A set is immutable once built.  Scores are ascending for NEAREST (distance)
and ALPHA (alpha value) sets and descending for union sets (edge frequency).
"""
from __future__ import annotations

import enum
import io
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .instance import Instance, Tour


class Generator(str, enum.Enum):
    NEAREST = "nearest"
    ALPHA = "alpha"
    TWO_OPT_UNION = "two_opt_union"
    POPMUSIC = "popmusic"


Entry = tuple[int, float]


@dataclass(frozen=True, eq=False)
class CandidateSet:
    lists: tuple[tuple[Entry, ...], ...]
    generator: Generator
    symmetric: bool = False
    dad: tuple[int, ...] | None = None
    distance_sorted: bool = field(default=False, compare=False)

    def __post_init__(self):
        lists = tuple(tuple((int(j), float(s)) for j, s in row) for row in self.lists)
        object.__setattr__(self, "lists", lists)
        object.__setattr__(self, "generator", Generator(self.generator))
        n = len(lists)
        for i, row in enumerate(lists):
            seen = set()
            for j, _ in row:
                if j == i:
                    raise ValueError(f"self-loop at city {i}")
                if not 0 <= j < n:
                    raise ValueError(f"neighbour {j} of city {i} out of range")
                if j in seen:
                    raise ValueError(f"duplicate neighbour {j} of city {i}")
                seen.add(j)
        if self.dad is not None:
            if len(self.dad) != n:
                raise ValueError("dad must have one entry per city")
            object.__setattr__(self, "dad", tuple(int(d) for d in self.dad))

    @property
    def n(self) -> int:
        return len(self.lists)

    def neighbors(self, i: int) -> list[int]:
        return [j for j, _ in self.lists[i]]

    def scores(self, i: int) -> list[float]:
        return [s for _, s in self.lists[i]]

    @cached_property
    def _members(self) -> tuple[frozenset, ...]:
        return tuple(frozenset(j for j, _ in row) for row in self.lists)

    def contains(self, i: int, j: int) -> bool:
        """True if ``j`` is in ``i``'s list."""
        return j in self._members[i]

    def has_edge(self, i: int, j: int) -> bool:
        """True if either endpoint lists the other."""
        return j in self._members[i] or i in self._members[j]

    def edges(self) -> set[tuple[int, int]]:
        return {(min(i, j), max(i, j)) for i, row in enumerate(self.lists) for j, _ in row}

    @property
    def edge_count(self) -> int:
        return len(self.edges())

    def is_membership_symmetric(self) -> bool:
        return all(i in self._members[j] for i, row in enumerate(self.lists) for j, _ in row)

    @cached_property
    def neighbor_array(self) -> np.ndarray:
        """``n x K`` int64 array of the lists padded with -1 (what the kernels take)."""
        K = max(1, max(len(r) for r in self.lists))
        arr = np.full((self.n, K), -1, dtype=np.int64)
        for i, row in enumerate(self.lists):
            arr[i, : len(row)] = [j for j, _ in row]
        arr.setflags(write=False)
        return arr

    def __eq__(self, other):
        if not isinstance(other, CandidateSet):
            return NotImplemented
        return (self.lists == other.lists and self.generator == other.generator
                and self.symmetric == other.symmetric and self.dad == other.dad)

    def __hash__(self):
        return hash(self.lists)


def _check_k(inst: Instance, k: int) -> None:
    if not 1 <= k < inst.n:
        raise ValueError(f"k must be in [1, {inst.n - 1}], got {k}")


def nearest_order(inst: Instance) -> np.ndarray:
    """Every other city per row, by ascending distance then index (``n x (n-1)``)."""
    D = inst.matrix
    n = inst.n
    idx = np.broadcast_to(np.arange(n), (n, n))
    order = np.lexsort((idx, D), axis=1)
    # duplicate points can put another city ahead of i itself, so mask rather than slice
    return order[order != np.arange(n)[:, None]].reshape(n, n - 1)


def nearest_candidates(inst: Instance, k: int) -> CandidateSet:
    _check_k(inst, k)
    D = inst.matrix
    order = nearest_order(inst)[:, :k]
    lists = [[(int(j), float(D[i, j])) for j in row] for i, row in enumerate(order)]
    return CandidateSet(tuple(map(tuple, lists)), Generator.NEAREST, False, distance_sorted=True)


def alpha_candidates(inst: Instance, k: int, use_subgradient: bool = True,
                     max_stale: int | None = None) -> CandidateSet:
    """The ``k`` smallest-alpha neighbours per city.

    With ``use_subgradient`` the alpha values are taken at the pi found by
    the ascent, otherwise at pi = 0.  Independent of any solver seed.
    """
    from .onetree import alpha_values, minimum_one_tree, subgradient_ascent

    _check_k(inst, k)
    if use_subgradient:
        tree = subgradient_ascent(inst, max_stale=max_stale).tree
    else:
        tree = minimum_one_tree(inst)
    table = alpha_values(inst, tree)
    lists = []
    for i in range(inst.n):
        row = table.ranking(i)[:k]
        lists.append(tuple((int(j), float(table.alpha[i, j])) for j in row))
    return CandidateSet(tuple(lists), Generator.ALPHA, False, dad=tuple(int(d) for d in tree.dad))


def union_from_tours(inst: Instance, tours: Sequence, max_per_city: int | None = None,
                     generator: Generator = Generator.TWO_OPT_UNION) -> CandidateSet:
    """Unique edges of ``tours`` with their frequencies, most frequent first.

    Ties break by ascending distance, then index.  With ``max_per_city`` the
    lists are truncated first and symmetric partners re-added afterwards,
    so a list may end up longer than the cap.
    """
    n = inst.n
    counts: Counter = Counter()
    for t in tours:
        order = np.asarray(t.order if isinstance(t, Tour) else t)
        if order.size != n:
            raise ValueError(f"tour over {order.size} cities, instance has {n}")
        a = order
        b = np.roll(order, -1)
        lo = np.minimum(a, b)
        hi = np.maximum(a, b)
        counts.update(zip(lo.tolist(), hi.tolist()))
    freq: list[dict[int, int]] = [dict() for _ in range(n)]
    for (i, j), c in counts.items():
        freq[i][j] = c
        freq[j][i] = c
    D = inst.matrix

    def ordered(i, members):
        return sorted(members, key=lambda j: (-freq[i][j], D[i, j], j))

    rows = [ordered(i, freq[i]) for i in range(n)]
    if max_per_city is not None:
        if max_per_city < 1:
            raise ValueError("max_per_city must be positive")
        kept = [set(r[:max_per_city]) for r in rows]
        for i in range(n):
            for j in list(kept[i]):
                kept[j].add(i)
        rows = [ordered(i, kept[i]) for i in range(n)]
    lists = tuple(tuple((j, float(freq[i][j])) for j in row) for i, row in enumerate(rows))
    return CandidateSet(lists, generator, True)


def two_opt_union(inst: Instance, m: int, seed: int, neighbors: int | None = 10,
                  max_per_city: int | None = None) -> CandidateSet:
    """Union of ``m`` 2-opt local optima from random starts (seeds ``seed .. seed+m-1``).

    ``neighbors`` limits each descent to that many nearest neighbours per
    city; ``None`` scans every city.
    """
    from .localsearch import SearchState, two_opt_descent

    if m < 1:
        raise ValueError("m must be at least 1")
    if neighbors is None or neighbors >= inst.n - 1:
        cand = nearest_candidates(inst, inst.n - 1)
    else:
        cand = nearest_candidates(inst, neighbors)
    tours = []
    for r in range(m):
        state = SearchState.random(inst.n, np.random.default_rng(seed + r))
        two_opt_descent(inst, state, cand)
        tours.append(state.order.copy())
    return union_from_tours(inst, tours, max_per_city)


def missing_optimal_edges(cand: CandidateSet, optimal) -> tuple[int, list[tuple[int, int]]]:
    """Optimal-tour edges that neither endpoint lists, sorted."""
    order = np.asarray(optimal.order if isinstance(optimal, Tour) else optimal)
    if order.size != cand.n:
        raise ValueError(f"tour over {order.size} cities, candidate set over {cand.n}")
    n = order.size
    missing = []
    for k in range(n):
        a, b = int(order[k]), int(order[(k + 1) % n])
        if not cand.has_edge(a, b):
            missing.append((min(a, b), max(a, b)))
    missing.sort()
    return len(missing), missing


# --------------------------------------------------------------------------
# candidate files (LKH layout)


def _int_scores(cand: CandidateSet, alpha_like_scores: bool) -> list[list[int]]:
    if cand.generator in (Generator.TWO_OPT_UNION, Generator.POPMUSIC) and alpha_like_scores:
        top = max((s for row in cand.lists for _, s in row), default=0.0)
        return [[int(round(top - s)) for _, s in row] for row in cand.lists]
    return [[int(round(s)) for _, s in row] for row in cand.lists]


def write_candidate_file(cand: CandidateSet, alpha_like_scores: bool = True) -> str:
    """LKH candidate file text.

    First line ``n``, then ``id dad count c1 s1 c2 s2 ...`` per city with
    1-based ids (dad 0 when unknown), then ``-1``.  With
    ``alpha_like_scores`` frequency scores are flipped to ``max - freq`` so
    that smaller is better, as LKH expects.
    """
    out = io.StringIO()
    out.write(f"{cand.n}\n")
    scores = _int_scores(cand, alpha_like_scores)
    for i, row in enumerate(cand.lists):
        dad = 0 if cand.dad is None or cand.dad[i] < 0 else cand.dad[i] + 1
        parts = [str(i + 1), str(dad), str(len(row))]
        for (j, _), s in zip(row, scores[i]):
            parts += [str(j + 1), str(s)]
        out.write(" ".join(parts) + "\n")
    out.write("-1\n")
    return out.getvalue()


def parse_candidate_file(text, generator: Generator = Generator.ALPHA) -> CandidateSet:
    if not isinstance(text, str):
        text = text.read()
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty candidate file")
    try:
        n = int(lines[0])
    except ValueError:
        raise ValueError(f"line 1: expected city count, got {lines[0]!r}") from None
    if n < 1:
        raise ValueError("line 1: city count must be positive")
    rows: list = [None] * n
    dad = [-1] * n
    any_dad = False
    lineno = 1
    for ln in lines[1:]:
        lineno += 1
        if ln in ("-1", "EOF"):
            break
        try:
            fields = [int(x) for x in ln.split()]
        except ValueError:
            raise ValueError(f"line {lineno}: malformed candidate line") from None
        if len(fields) < 3:
            raise ValueError(f"line {lineno}: malformed candidate line")
        cid, d, count = fields[:3]
        if not 1 <= cid <= n:
            raise ValueError(f"line {lineno}: id {cid} out of range")
        if not 0 <= d <= n:
            raise ValueError(f"line {lineno}: dad {d} out of range")
        rest = fields[3:]
        if len(rest) != 2 * count:
            raise ValueError(f"line {lineno}: count {count} does not match {len(rest) // 2} listed candidates")
        if rows[cid - 1] is not None:
            raise ValueError(f"line {lineno}: duplicate id {cid}")
        row = []
        for c, s in zip(rest[0::2], rest[1::2]):
            if not 1 <= c <= n:
                raise ValueError(f"line {lineno}: candidate {c} out of range")
            row.append((c - 1, float(s)))
        rows[cid - 1] = tuple(row)
        if d:
            dad[cid - 1] = d - 1
            any_dad = True
    else:
        raise ValueError("missing -1 terminator")
    missing = [i + 1 for i, r in enumerate(rows) if r is None]
    if missing:
        raise ValueError(f"no candidate line for city {missing[0]}")
    cs = CandidateSet(tuple(rows), generator, False, dad=tuple(dad) if any_dad else None)
    if cs.is_membership_symmetric():
        cs = CandidateSet(cs.lists, generator, True, dad=cs.dad)
    return cs


def missing_edges_csv(rows: Iterable[tuple[str, str, int]]) -> str:
    """Diagnostic CSV with header ``instance,generator,missing_count``."""
    out = io.StringIO()
    out.write("instance,generator,missing_count\n")
    for name, gen, count in sorted(rows):
        gen = gen.value if isinstance(gen, Generator) else gen
        out.write(f"{name},{gen},{int(count)}\n")
    return out.getvalue()
