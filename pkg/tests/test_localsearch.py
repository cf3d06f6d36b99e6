import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lkcand.candidates import alpha_candidates, nearest_candidates
from lkcand.exact import brute_force
from lkcand.instance import Tour, gen_random_uniform, tour_edges, tour_length
from lkcand.localsearch import (SearchState, constrained_restart_kick, crossing_count, double_bridge,
                                local_descent, random_tour, sequential_three_opt_step, two_opt_descent)

import oracles
from conftest import FIVE_COORDS, FIVE_OPT, FIVE_START, cycle_len


def test_random_tour_valid_and_deterministic():
    for n in (3, 10):
        t = random_tour(n, np.random.default_rng(4))
        assert sorted(t) == list(range(n))
        assert np.array_equal(t, random_tour(n, np.random.default_rng(4)))
    with pytest.raises(ValueError):
        random_tour(2, np.random.default_rng(0))


def test_random_tour_uniform_n3():
    rng = np.random.default_rng(12)
    counts = Counter(tuple(random_tour(3, rng)) for _ in range(6000))
    assert len(counts) == 6
    assert all(850 <= c <= 1150 for c in counts.values())


def test_two_opt_uncrosses_square(square):
    s = two_opt_descent(square, SearchState([0, 2, 1, 3]))
    assert s.length(square) == pytest.approx(4.0)
    s.check()


def test_two_opt_five_city_any_start(five_city):
    for perm in itertools.permutations(range(5)):
        s = SearchState(perm)
        before = s.length(five_city)
        two_opt_descent(five_city, s)
        assert s.length(five_city) <= before
        assert crossing_count(five_city, s.order) == 0


def test_two_opt_fixpoint_unchanged(five_city):
    s = SearchState(FIVE_OPT)
    two_opt_descent(five_city, s)
    assert list(s.order) == FIVE_OPT


def test_three_opt_step_at_optimum_is_false(five_city):
    cand = nearest_candidates(five_city, 4)
    s = SearchState(FIVE_OPT)
    assert not sequential_three_opt_step(five_city, s, cand)
    assert list(s.order) == FIVE_OPT


def test_three_opt_five_city_full_set_from_start(five_city):
    cand = nearest_candidates(five_city, 4)
    s = SearchState(FIVE_START)
    steps = 0
    while sequential_three_opt_step(five_city, s, cand):
        steps += 1
        assert steps < 10
    assert s.length(five_city) == pytest.approx(cycle_len(FIVE_COORDS, FIVE_OPT), abs=1e-12)
    assert s.length(five_city) == pytest.approx(brute_force(five_city).length)


@settings(max_examples=25, deadline=None)
@given(st.integers(8, 60), st.integers(0, 10_000))
def test_three_opt_steps_strictly_improve(n, seed):
    inst = gen_random_uniform(n, seed)
    cand = nearest_candidates(inst, min(5, n - 1))
    s = SearchState.random(n, np.random.default_rng(seed))
    prev = s.length(inst)
    for _ in range(5):
        if not sequential_three_opt_step(inst, s, cand):
            break
        cur = s.length(inst)
        assert cur < prev
        prev = cur
        s.check()


def test_double_bridge_explicit_cuts():
    s = SearchState(range(8))
    double_bridge(s, cuts=(2, 4, 6))
    assert list(s.order) == [0, 1, 6, 7, 4, 5, 2, 3]
    assert len(tour_edges(range(8)) - tour_edges(s.order)) == 4
    s.check()


def test_double_bridge_changes_four_edges_always():
    rng = np.random.default_rng(0)
    for it in range(10_000):
        n = int(rng.integers(6, 40))
        s = SearchState(rng.permutation(n), rng)
        before = s.edges()
        double_bridge(s)
        after = s.edges()
        assert sorted(s.order) == list(range(n))
        assert len(before - after) == 4 and len(after - before) == 4
        s.check()


def test_double_bridge_five_cities_degenerates():
    # no two 5-city tours differ in exactly four edges
    s = SearchState([0, 3, 1, 2, 4], np.random.default_rng(1))
    double_bridge(s)
    assert list(s.order) == [0, 3, 1, 2, 4]


def test_double_bridge_clears_dont_look_at_junctions():
    s = SearchState(range(12))
    s.dont_look[:] = True
    double_bridge(s, cuts=(3, 6, 9))
    assert sorted(np.flatnonzero(~s.dont_look)) == [0, 2, 3, 5, 6, 8, 9, 11]


def test_constrained_kick_fixes_best_edges():
    inst = gen_random_uniform(30, 2)
    best = Tour.from_order(inst, np.random.default_rng(1).permutation(30))
    s = SearchState.random(30, np.random.default_rng(3))
    constrained_restart_kick(s, best)
    assert len(s.fixed_edges) == 30
    assert s.fixed_edges == best.edges()


@pytest.mark.parametrize("seed", range(8))
def test_descent_after_kick_keeps_fixed_edges(seed):
    inst = gen_random_uniform(40, seed)
    cand = nearest_candidates(inst, 6)
    rng = np.random.default_rng(seed)
    s = SearchState.random(40, rng)
    local_descent(inst, s, cand)
    best = s.tour(inst)
    s.trace = []
    constrained_restart_kick(s, best)
    start = s.edges()
    local_descent(inst, s, cand)
    for _, gain, removed, added in s.trace:
        assert gain > 0
        for a, b in removed:
            assert (min(a, b), max(a, b)) not in best.edges()
    assert (start & best.edges()) <= s.edges()


@pytest.mark.parametrize("seed", range(10))
def test_kick_with_optimum_keeps_optimal_edges(seed):
    n = 6 + seed % 5
    inst = gen_random_uniform(n, seed)
    opt = brute_force(inst).tour
    s = SearchState.random(n, np.random.default_rng(seed))
    constrained_restart_kick(s, opt)
    s.trace = []
    local_descent(inst, s, None)
    present = s.edges() & opt.edges()
    introduced = set()
    for _, _, _, added in s.trace:
        introduced |= {(min(a, b), max(a, b)) for a, b in added}
    # every optimal edge that was ever in the tour is still there
    assert (introduced & opt.edges()) <= present


@settings(max_examples=20, deadline=None)
@given(st.integers(6, 50), st.integers(0, 10_000), st.integers(2, 6))
def test_only_closing_edge_may_leave_candidates(n, seed, k):
    inst = gen_random_uniform(n, seed)
    cand = alpha_candidates(inst, min(k, n - 1), use_subgradient=False)
    s = SearchState.random(n, np.random.default_rng(seed), trace=[])
    local_descent(inst, s, cand)
    for kind, gain, removed, added in s.trace:
        assert gain > 0
        for a, b in added[:-1]:
            assert cand.contains(a, b), (kind, added)


def test_crossing_count_square(square):
    assert crossing_count(square, [0, 1, 2, 3]) == 0
    assert crossing_count(square, [0, 2, 1, 3]) == 1


@pytest.mark.parametrize("seed", range(5))
def test_crossing_count_matches_oracle(seed):
    inst = gen_random_uniform(25, seed)
    order = np.random.default_rng(seed).permutation(25)
    assert crossing_count(inst, order) == oracles.crossings(inst.coords.tolist(), list(order))


def test_state_rejects_bad_order():
    with pytest.raises(ValueError):
        SearchState([0, 1, 1, 2])
    with pytest.raises(ValueError):
        SearchState([0, 1])


def test_two_opt_length_matches_recomputed():
    inst = gen_random_uniform(80, 3)
    s = SearchState.random(80, np.random.default_rng(1))
    two_opt_descent(inst, s, nearest_candidates(inst, 8))
    assert s.length(inst) == pytest.approx(tour_length(inst, s.order))
    s.check()
