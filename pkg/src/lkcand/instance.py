"""Euclidean TSP instances, tours, and the TSPLIB file formats.

All distance computation in the package goes through :class:`Instance`.
Cities are 0-based internally; the 1-based TSPLIB ids only exist at the
file boundary (:func:`parse_tsplib`, :func:`parse_tour_file` and the
matching writers).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

#: Above this size the full distance matrix is rebuilt on request, not cached.
MATRIX_CACHE_LIMIT = 4096


class Metric(str, enum.Enum):
    EUC_2D_ROUNDED = "EUC_2D_ROUNDED"
    EUC_2D_EXACT = "EUC_2D_EXACT"
    CEIL_2D = "CEIL_2D"

    @property
    def integral(self) -> bool:
        return self is not Metric.EUC_2D_EXACT

    @property
    def gain_epsilon(self) -> float:
        """Smallest gain that counts as an improvement under this metric."""
        return 0.5 if self.integral else 1e-10


# TSPLIB EDGE_WEIGHT_TYPE keyword <-> metric.  EXACT_2D is the LKH extension.
_TSPLIB_TYPES = {
    "EUC_2D": Metric.EUC_2D_ROUNDED,
    "CEIL_2D": Metric.CEIL_2D,
    "EXACT_2D": Metric.EUC_2D_EXACT,
}
_TSPLIB_NAMES = {v: k for k, v in _TSPLIB_TYPES.items()}


class TSPLIBError(ValueError):
    """Malformed or unsupported TSPLIB input; carries the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _apply_metric(raw: np.ndarray, metric: Metric) -> np.ndarray:
    if metric is Metric.EUC_2D_ROUNDED:
        return np.floor(raw + 0.5)
    if metric is Metric.CEIL_2D:
        return np.ceil(raw)
    return raw


@dataclass(frozen=True, eq=False)
class Instance:
    """A symmetric 2D Euclidean TSP instance.

    Instances are immutable and can be shared between workers.  The full
    distance matrix is built lazily and cached for ``n <= MATRIX_CACHE_LIMIT``.
    """

    name: str
    coords: np.ndarray
    metric: Metric = Metric.EUC_2D_EXACT
    optimum_length: float | None = None

    def __post_init__(self):
        coords = np.array(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError("coords must be an (n, 2) array")
        if coords.shape[0] < 3:
            raise ValueError(f"an instance needs at least 3 cities, got {coords.shape[0]}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        if self.optimum_length is not None and self.optimum_length < 0:
            raise ValueError("optimum_length must be nonnegative")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "metric", Metric(self.metric))

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def dist(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        if self.n <= MATRIX_CACHE_LIMIT:
            return float(self.matrix[i, j])
        dx, dy = self.coords[i] - self.coords[j]
        return float(_apply_metric(np.array(math.hypot(dx, dy)), self.metric))

    @cached_property
    def _cached_matrix(self) -> np.ndarray:
        return self._build_matrix()

    @property
    def matrix(self) -> np.ndarray:
        """Dense ``n x n`` float64 distance matrix (read-only)."""
        if self.n <= MATRIX_CACHE_LIMIT:
            return self._cached_matrix
        return self._build_matrix()

    def _build_matrix(self) -> np.ndarray:
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        raw = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        mat = _apply_metric(raw, self.metric)
        np.fill_diagonal(mat, 0.0)
        mat.setflags(write=False)
        return mat

    def with_metric(self, metric: Metric) -> "Instance":
        return Instance(self.name, self.coords, metric, None)

    def tour(self, order: Iterable[int]) -> "Tour":
        return Tour.from_order(self, order)


def distance(inst: Instance, i: int, j: int) -> float:
    return inst.dist(i, j)


def _check_permutation(order: np.ndarray, n: int) -> None:
    if order.shape != (n,):
        raise ValueError(f"tour has {order.size} entries, instance has {n} cities")
    seen = np.zeros(n, dtype=bool)
    if order.min(initial=0) < 0 or order.max(initial=0) >= n:
        raise ValueError("tour contains a city index out of range")
    seen[order] = True
    if not seen.all():
        raise ValueError("tour is not a permutation (duplicate cities)")


def tour_length(inst: Instance, order: Sequence[int]) -> float:
    """Cyclic length of ``order``; raises for non-permutations."""
    arr = np.asarray(order, dtype=np.int64)
    _check_permutation(arr, inst.n)
    nxt = np.roll(arr, -1)
    if inst.n <= MATRIX_CACHE_LIMIT:
        return float(inst.matrix[arr, nxt].sum())
    diff = inst.coords[arr] - inst.coords[nxt]
    return float(_apply_metric(np.hypot(diff[:, 0], diff[:, 1]), inst.metric).sum())


def tour_edges(order: Sequence[int]) -> set[tuple[int, int]]:
    """Undirected edge set of a cyclic order, as ``(min, max)`` pairs."""
    arr = [int(c) for c in order]
    return {(min(a, b), max(a, b)) for a, b in zip(arr, arr[1:] + arr[:1])}


@dataclass(frozen=True, eq=False)
class Tour:
    """A Hamiltonian circuit: a validated permutation plus its length."""

    order: np.ndarray
    length: float = field(default=float("nan"))

    @classmethod
    def from_order(cls, inst: Instance, order: Iterable[int]) -> "Tour":
        arr = np.array(list(order) if not isinstance(order, np.ndarray) else order, dtype=np.int64)
        length = tour_length(inst, arr)
        arr.setflags(write=False)
        return cls(arr, length)

    @property
    def n(self) -> int:
        return self.order.size

    def edges(self) -> set[tuple[int, int]]:
        return tour_edges(self.order)

    def __eq__(self, other):
        return isinstance(other, Tour) and np.array_equal(self.order, other.order)

    def __hash__(self):
        return hash(self.order.tobytes())


# --------------------------------------------------------------------------
# TSPLIB I/O


def _split_keyword(line: str) -> tuple[str, str]:
    if ":" in line:
        key, _, value = line.partition(":")
    else:
        key, _, value = line.partition(" ")
    return key.strip().upper(), value.strip()


def _lines(text) -> list[str]:
    if not isinstance(text, str):
        text = text.read()
    return text.splitlines()


def parse_tsplib(text) -> Instance:
    """Parse a TSPLIB ``.tsp`` file (string or text stream).

    Supports ``EUC_2D``, ``CEIL_2D`` and the ``EXACT_2D`` extension with a
    ``NODE_COORD_SECTION``.  Every error names the line it was found on.
    """
    lines = _lines(text)
    header: dict[str, str] = {}
    dim_line = None
    coords: dict[int, tuple[float, float]] = {}
    in_coords = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if upper.startswith("EOF"):
            break
        if upper.startswith("NODE_COORD_SECTION"):
            in_coords = True
            continue
        if in_coords and (line[0].isdigit() or line[0] in "+-."):
            parts = line.split()
            if len(parts) < 3:
                raise TSPLIBError(f"expected 'id x y', got {line!r}", lineno)
            try:
                node = int(parts[0])
                x, y = float(parts[1]), float(parts[2])
            except ValueError:
                raise TSPLIBError(f"malformed numeric field in {line!r}", lineno) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise TSPLIBError("non-finite coordinate", lineno)
            if node in coords:
                raise TSPLIBError(f"duplicate node id {node}", lineno)
            coords[node] = (x, y)
            continue
        if upper.endswith("_SECTION"):
            raise TSPLIBError(f"unsupported section {line!r}", lineno)
        in_coords = False
        key, value = _split_keyword(line)
        if key == "EDGE_WEIGHT_TYPE" and value.upper() not in _TSPLIB_TYPES:
            raise TSPLIBError(f"unsupported EDGE_WEIGHT_TYPE {value!r}", lineno)
        if key == "TYPE" and value.upper() not in ("TSP",):
            raise TSPLIBError(f"unsupported TYPE {value!r}", lineno)
        if key == "DIMENSION":
            dim_line = lineno
            try:
                int(value)
            except ValueError:
                raise TSPLIBError(f"malformed DIMENSION {value!r}", lineno) from None
        header[key] = value

    if "EDGE_WEIGHT_TYPE" not in header:
        raise TSPLIBError("missing EDGE_WEIGHT_TYPE")
    if "DIMENSION" not in header:
        raise TSPLIBError("missing DIMENSION")
    n = int(header["DIMENSION"])
    if len(coords) != n:
        raise TSPLIBError(f"DIMENSION is {n} but {len(coords)} coordinates were given", dim_line)
    if sorted(coords) != list(range(1, n + 1)):
        raise TSPLIBError(f"node ids must be exactly 1..{n}")
    xy = np.array([coords[i] for i in range(1, n + 1)], dtype=np.float64)
    metric = _TSPLIB_TYPES[header["EDGE_WEIGHT_TYPE"].upper()]
    optimum = None
    if "OPTIMUM" in header:
        try:
            optimum = float(header["OPTIMUM"])
        except ValueError:
            raise TSPLIBError(f"malformed OPTIMUM {header['OPTIMUM']!r}") from None
    return Instance(header.get("NAME", "unnamed"), xy, metric, optimum)


def write_tsplib(inst: Instance, comment: str | None = None) -> str:
    out = [f"NAME : {inst.name}"]
    if comment:
        out.append(f"COMMENT : {comment}")
    out += [
        "TYPE : TSP",
        f"DIMENSION : {inst.n}",
        f"EDGE_WEIGHT_TYPE : {_TSPLIB_NAMES[inst.metric]}",
    ]
    if inst.optimum_length is not None:
        out.append(f"OPTIMUM : {inst.optimum_length!r}")
    out.append("NODE_COORD_SECTION")
    out += [f"{i + 1} {x!r} {y!r}" for i, (x, y) in enumerate(inst.coords.tolist())]
    out.append("EOF")
    return "\n".join(out) + "\n"


def parse_tour_file(text, inst: Instance) -> Tour:
    """Parse a TSPLIB ``.tour`` file for ``inst``."""
    return Tour.from_order(inst, read_tour_order(text, inst.n))


def read_tour_order(text, n: int) -> np.ndarray:
    """0-based city order from a ``.tour`` file over ``n`` cities."""
    lines = _lines(text)
    ids: list[int] = []
    seen: set[int] = set()
    in_section = False
    terminated = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if not in_section:
            upper = line.upper()
            if upper.startswith("TOUR_SECTION"):
                in_section = True
            elif upper.startswith("DIMENSION"):
                _, value = _split_keyword(line)
                if int(value) != n:
                    raise TSPLIBError(f"tour DIMENSION {value} does not match n={n}", lineno)
            elif upper.startswith("EOF"):
                break
            continue
        for tok in line.split():
            if tok.upper() == "EOF":
                break
            try:
                city = int(tok)
            except ValueError:
                raise TSPLIBError(f"malformed tour entry {tok!r}", lineno) from None
            if city == -1:
                terminated = True
                break
            if not 1 <= city <= n:
                raise TSPLIBError(f"city id {city} out of range 1..{n}", lineno)
            if city in seen:
                raise TSPLIBError(f"duplicate city {city}", lineno)
            seen.add(city)
            ids.append(city)
        if terminated:
            break
    if not in_section:
        raise TSPLIBError("missing TOUR_SECTION")
    if not terminated:
        raise TSPLIBError("TOUR_SECTION is not terminated by -1")
    if len(ids) != n:
        raise TSPLIBError(f"tour lists {len(ids)} cities, instance has {n}")
    return np.array(ids, dtype=np.int64) - 1


def write_tour_file(tour: Tour, name: str = "tour", comment: str | None = None) -> str:
    out = [f"NAME : {name}"]
    if comment:
        out.append(f"COMMENT : {comment}")
    out += ["TYPE : TOUR", f"DIMENSION : {tour.n}", "TOUR_SECTION"]
    out += [str(int(c) + 1) for c in tour.order]
    out += ["-1", "EOF"]
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# generators


def gen_random_uniform(
    n: int, seed: int, box: float = 1000.0, metric: Metric = Metric.EUC_2D_EXACT
) -> Instance:
    if n < 3:
        raise ValueError(f"n must be at least 3, got {n}")
    rng = np.random.default_rng(seed)
    return Instance(f"uniform-{n}-s{seed}", rng.uniform(0.0, box, size=(n, 2)), metric)


def gen_clustered(
    n: int,
    k_clusters: int,
    spread: float,
    seed: int,
    box: float = 1000.0,
    metric: Metric = Metric.EUC_2D_EXACT,
) -> Instance:
    """Gaussian clusters around ``k_clusters`` uniform centres.

    City ``i`` belongs to cluster ``i % k_clusters``.
    """
    if k_clusters < 1 or n < k_clusters or n < 3:
        raise ValueError(f"need n >= k_clusters >= 1 and n >= 3, got n={n}, k={k_clusters}")
    if spread < 0:
        raise ValueError("spread must be nonnegative")
    rng = np.random.default_rng(seed)
    centres = rng.uniform(0.0, box, size=(k_clusters, 2))
    labels = np.arange(n) % k_clusters
    pts = centres[labels] + rng.normal(0.0, 1.0, size=(n, 2)) * spread
    return Instance(f"clustered-{n}-k{k_clusters}-s{seed}", pts, metric)
