"""Both kernel backends must agree move for move."""
import numpy as np
import pytest

from lkcand import kernels
from lkcand.candidates import nearest_candidates
from lkcand.instance import gen_random_uniform

BACKENDS = kernels.available_backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled kernels not built")


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@needs_both
@pytest.mark.parametrize("seed", range(5))
def test_mst_and_path_max_parity(seed):
    inst = gen_random_uniform(30, seed)
    D = np.ascontiguousarray(inst.matrix)
    pi = np.random.default_rng(seed).normal(0, 20, 30)
    py, cy = BACKENDS["python"], BACKENDS["cython"]
    for exclude in (-1, seed):
        p1, o1, l1 = py.prim_mst(D, pi, exclude)
        p2, o2, l2 = cy.prim_mst(D, pi, exclude)
        assert np.array_equal(p1, p2) and np.array_equal(o1, o2) and l1 == l2
        assert np.array_equal(py.path_max(D, pi, p1, o1), cy.path_max(D, pi, p2, o2))


def _descent_args(seed, n=60, k=8):
    inst = gen_random_uniform(n, seed)
    D = np.ascontiguousarray(inst.matrix)
    neigh = np.ascontiguousarray(nearest_candidates(inst, k).neighbor_array)
    order = np.random.default_rng(seed).permutation(n).astype(np.int64)
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    fixed = np.full((n, 2), -1, dtype=np.int64)
    fixed[order[0], 0], fixed[order[1], 0] = order[1], order[0]
    return D, order, pos, neigh, fixed


@needs_both
@pytest.mark.parametrize("seed", range(4))
def test_descent_parity(seed):
    out = {}
    for name, mod in BACKENDS.items():
        D, order, pos, neigh, fixed = _descent_args(seed)
        dl = np.zeros(order.size, dtype=bool)
        trace = []
        m2 = mod.two_opt_descent(D, order, pos, neigh, True, dl, fixed, 1e-10, trace=trace)
        m3 = mod.three_opt_descent(D, order, pos, neigh, True, 5, dl, fixed, 1e-10, trace=trace)
        out[name] = (m2, m3, order.copy(), trace)
    (a2, a3, ao, at), (b2, b3, bo, bt) = out.values()
    assert (a2, a3) == (b2, b3)
    assert np.array_equal(ao, bo)
    assert at == bt


@needs_both
@pytest.mark.parametrize("n", [5, 9, 11])
def test_held_karp_parity(n):
    D = np.ascontiguousarray(gen_random_uniform(n, n).matrix)
    l1, o1 = BACKENDS["python"].held_karp(D)
    l2, o2 = BACKENDS["cython"].held_karp(D)
    assert l1 == pytest.approx(l2, abs=1e-9)
    assert np.array_equal(o1, o2)


def test_fixed_edge_survives_descent():
    D, order, pos, neigh, fixed = _descent_args(3)
    a, b = int(order[0]), int(order[1])
    dl = np.zeros(order.size, dtype=bool)
    kernels.two_opt_descent(D, order, pos, neigh, True, dl, fixed, 1e-10)
    kernels.three_opt_descent(D, order, pos, neigh, True, 5, dl, fixed, 1e-10)
    n = order.size
    assert abs(int(pos[a]) - int(pos[b])) in (1, n - 1)
