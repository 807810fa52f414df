import random

import pytest
from hypothesis import given, settings, strategies as st

from torsion_growth.group_core import FreeAbelian, Heisenberg, Lamplighter
from torsion_growth.quotients import build_chain, congruence_chain
from torsion_growth.transversal import (
    boundary_count,
    connect_repair,
    is_true_transversal,
    local_search_boundary_min,
    make_transversal,
    random_transversal,
    reroot,
    schreier_tree_transversal,
    weiss_tiling,
)

Z2_CHAIN = congruence_chain(FreeAbelian(2), 4)
HEIS_CHAIN = congruence_chain(Heisenberg(), 2)


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_tree_transversal_is_square(level):
    fam = Z2_CHAIN.family
    act = Z2_CHAIN.levels[level - 1]
    t = schreier_tree_transversal(act, fam)
    L = 2**level
    assert set(t.elements) == {(a, b) for a in range(L) for b in range(L)}
    assert t.boundary_edges == 4 * L
    assert t.is_connected and is_true_transversal(t, act)


@pytest.mark.parametrize("tile_level", [1, 2])
def test_weiss_square_tiling(tile_level):
    for level in range(tile_level, 5):
        t = weiss_tiling(Z2_CHAIN, tile_level, level)
        assert t.boundary_ratio == 2 * 2 / 2**level
        assert t.patch.get("removed", 0) == 0 and t.patch.get("added", 0) == 0


def test_weiss_heisenberg_improves_on_tree():
    fam = HEIS_CHAIN.family
    tree = schreier_tree_transversal(HEIS_CHAIN.levels[1], fam)
    tiled = weiss_tiling(HEIS_CHAIN, 1, 2)
    assert is_true_transversal(tiled, HEIS_CHAIN.levels[1])
    assert tiled.boundary_edges == 130  # 130/64 = 2.03125
    assert tree.boundary_edges == 132
    assert tiled.patch["tiles"] == 8


def test_weiss_errors():
    seq = build_chain(Lamplighter(2), "cyclic_sequence", 3)
    with pytest.raises(ValueError):
        weiss_tiling(seq, 1, 2)
    with pytest.raises(ValueError):
        weiss_tiling(Z2_CHAIN, 3, 2)


def test_make_transversal_validation():
    fam = FreeAbelian(2)
    act = Z2_CHAIN.levels[0]
    t = schreier_tree_transversal(act, fam)
    with pytest.raises(ValueError):
        make_transversal(t.reps[1:], act, fam)
    with pytest.raises(ValueError):
        make_transversal(((1, -1),) + t.reps[1:], act, fam)
    bad = list(t.reps)
    bad[1], bad[2] = bad[2], bad[1]
    with pytest.raises(ValueError):
        make_transversal(bad, act, fam)


def test_boundary_count_hand_values():
    fam = FreeAbelian(2)
    assert boundary_count([(0, 0)], fam) == 4
    assert boundary_count([(0, 0), (1, 0)], fam) == 6
    assert boundary_count([(0, 0), (5, 5)], fam) == 8


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from([1, 2, 3]))
def test_connect_repair_properties(seed, level):
    fam = Z2_CHAIN.family
    act = Z2_CHAIN.levels[level - 1]
    t = random_transversal(act, fam, random.Random(seed))
    assert is_true_transversal(t, act)
    r = connect_repair(t, act, fam)
    assert r.is_connected
    assert r.boundary_edges <= t.boundary_edges
    assert is_true_transversal(r, act)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_local_search_never_increases(seed):
    fam = HEIS_CHAIN.family
    act = HEIS_CHAIN.levels[0]
    t = random_transversal(act, fam, random.Random(seed))
    s = local_search_boundary_min(t, act, fam, budget=50)
    assert s.boundary_edges <= t.boundary_edges
    assert is_true_transversal(s, act)
    assert s.reps[0] == ()


def test_local_search_deterministic_and_budget_zero():
    fam = FreeAbelian(2)
    act = Z2_CHAIN.levels[1]
    t = random_transversal(act, fam, random.Random(3))
    a = local_search_boundary_min(t, act, fam, 100)
    b = local_search_boundary_min(t, act, fam, 100)
    assert a.reps == b.reps
    assert local_search_boundary_min(t, act, fam, 0) is t


def test_reroot_normal_subgroup():
    fam = FreeAbelian(2)
    act = Z2_CHAIN.levels[1]
    t = schreier_tree_transversal(act, fam)
    r = reroot(t, act, fam, 5)
    assert is_true_transversal(r, act)
    assert r.boundary_edges == t.boundary_edges
