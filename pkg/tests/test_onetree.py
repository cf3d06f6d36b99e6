import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lkcand.exact import held_karp_dp
from lkcand.instance import Instance, gen_random_uniform
from lkcand.onetree import (adjusted_matrix, alpha_values, default_special, minimum_one_tree,
                            minimum_spanning_tree, subgradient_ascent)

import oracles
from conftest import FIVE_COORDS, A, B, C, D, E

T = oracles.dist_table(FIVE_COORDS)


def test_five_city_mst(five_city):
    parent, length = minimum_spanning_tree(five_city)
    edges = {(min(v, int(p)), max(v, int(p))) for v, p in enumerate(parent) if p >= 0}
    assert edges == {(A, D), (A, E), (A, B), (B, C)}
    assert length == pytest.approx(T[A][D] + T[A][E] + T[A][B] + T[B][C], abs=1e-12)
    assert length == pytest.approx(2.52361, abs=1e-5)


def test_five_city_default_special_and_bound(five_city):
    assert default_special(five_city) == D  # D and E tie; lowest index wins
    t = minimum_one_tree(five_city)
    assert t.special == D
    expected = oracles.one_tree_length(5, lambda i, j: T[i][j], D)
    assert t.length == pytest.approx(expected, abs=1e-12)
    assert t.length == pytest.approx(3.66378, abs=1e-5)
    assert sorted(e[1] for e in t.extra_edges) == [A, B]
    assert t.degree.sum() == 10


def test_five_city_special_c(five_city):
    t = minimum_one_tree(five_city, special=C)
    assert t.length == pytest.approx(oracles.one_tree_length(5, lambda i, j: T[i][j], C), abs=1e-12)
    assert t.length == pytest.approx(3.62814, abs=1e-5)


def test_five_city_alpha_dc(five_city):
    table = alpha_values(five_city, minimum_one_tree(five_city))
    assert table.alpha[D, C] == pytest.approx(T[D][C] - T[D][B], abs=1e-12)
    assert table.alpha[D, C] == pytest.approx(0.11282, abs=1e-5)
    assert np.array_equal(table.alpha, table.alpha.T)


def test_alpha_zero_on_tree_edges(five_city):
    t = minimum_one_tree(five_city)
    table = alpha_values(five_city, t)
    for a, b in t.edges():
        assert table.alpha[a, b] == 0.0


def test_five_city_alpha_ranking_k1(five_city):
    table = alpha_values(five_city, minimum_one_tree(five_city))
    firsts = {tuple(sorted((i, int(table.ranking(i)[0])))) for i in range(5)}
    assert firsts == {(A, D), (A, E), (A, B), (B, C)}


def test_unit_square_ascent_stops_at_once(square):
    res = subgradient_ascent(square)
    assert res.iterations == 0
    assert res.best_bound == pytest.approx(4.0)
    assert np.all(res.pi == 0)
    assert res.tree.is_tour


def test_five_city_ascent_improves(five_city):
    base = minimum_one_tree(five_city).lower_bound
    res = subgradient_ascent(five_city)
    assert base < res.best_bound <= held_karp_dp(five_city).length + 1e-9
    assert res.tree.lower_bound == pytest.approx(res.best_bound)


def test_ascent_returns_pi_of_best_tree():
    inst = gen_random_uniform(12, 4)
    res = subgradient_ascent(inst)
    again = minimum_one_tree(inst, res.pi, res.tree.special)
    assert again.lower_bound == pytest.approx(res.best_bound, abs=1e-9)


def _alpha_brute(inst, pi, special):
    Dm = inst.matrix
    w = lambda i, j: Dm[i, j] + (pi[i] + pi[j])
    base = oracles.one_tree_length(inst.n, w, special)
    out = np.full((inst.n, inst.n), np.inf)
    for i in range(inst.n):
        for j in range(i + 1, inst.n):
            out[i, j] = out[j, i] = oracles.one_tree_length(inst.n, w, special, (i, j)) - base
    return out


@pytest.mark.parametrize("seed", range(6))
def test_alpha_matches_forced_tree_oracle(seed):
    n = 8 + seed % 4
    inst = gen_random_uniform(n, 100 + seed)
    pi = np.random.default_rng(seed).normal(0, 30, n) if seed % 2 else np.zeros(n)
    t = minimum_one_tree(inst, pi)
    got = alpha_values(inst, t).alpha
    want = _alpha_brute(inst, pi, t.special)
    off = ~np.eye(n, dtype=bool)
    assert np.allclose(got[off], want[off], atol=1e-9, rtol=0)


@settings(max_examples=25, deadline=None)
@given(st.integers(4, 11), st.integers(0, 10_000))
def test_bound_below_optimum_and_degree_sum(n, seed):
    inst = gen_random_uniform(n, seed)
    opt = held_karp_dp(inst).length
    pi = np.random.default_rng(seed).normal(0, 50, n)
    for p in (None, pi):
        t = minimum_one_tree(inst, p)
        assert t.degree.sum() == 2 * n
        assert t.lower_bound <= opt + 1e-7
    res = subgradient_ascent(inst)
    assert minimum_one_tree(inst).lower_bound <= res.best_bound <= opt + 1e-7


def test_adjusted_matrix_symmetric():
    inst = gen_random_uniform(20, 1)
    pi = np.random.default_rng(0).normal(0, 10, 20)
    M = adjusted_matrix(inst, pi)
    assert np.array_equal(M, M.T)


def test_edge_list_dump(five_city):
    t = minimum_one_tree(five_city)
    lines = t.edge_list_text(five_city).strip().splitlines()
    assert len(lines) == 5
    i, j, w = lines[0].split()
    assert float(w) == pytest.approx(five_city.dist(int(i), int(j)))


def test_needs_four_cities():
    tri = Instance("t", np.array([[0, 0], [1, 0], [0, 1.0]]))
    with pytest.raises(ValueError):
        minimum_one_tree(tri)
    with pytest.raises(ValueError):
        subgradient_ascent(tri)
