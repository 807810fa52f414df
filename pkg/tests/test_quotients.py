from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from torsion_growth.group_core import BaumslagSolitar, FreeAbelian, Heisenberg, Lamplighter
from torsion_growth.quotients import (
    NotTransitive,
    RelatorViolation,
    UnsupportedChain,
    action_from_images,
    build_chain,
    congruence_chain,
    cyclic_sequence,
    farber_diagnostic,
    farber_summary,
    lamplighter_cyclic_action,
    reduced_words,
)


@pytest.mark.parametrize(
    "family, degrees",
    [
        (FreeAbelian(2), [4, 16, 64]),
        (FreeAbelian(3), [8, 64]),
        (Heisenberg(), [8, 64]),
        (BaumslagSolitar(2), [6, 54]),
        (Lamplighter(2), [8, 64]),
    ],
    ids=repr,
)
def test_congruence_degrees(family, degrees):
    chain = congruence_chain(family, len(degrees))
    assert chain.degrees == degrees
    assert chain.normal and chain.refining and chain.exhausting
    chain.check_refinements()


def test_cyclic_tower_and_sequence():
    ll = Lamplighter(2)
    tower = build_chain(ll, "cyclic", 3)
    assert tower.degrees == [2, 4, 8]
    assert not tower.exhausting
    seq = build_chain(ll, "cyclic_sequence", 5)
    assert seq.degrees == [1, 2, 3, 4, 5]
    assert not seq.refining
    with pytest.raises(ValueError):
        seq.composite_map(1, 2)
    with pytest.raises(UnsupportedChain):
        build_chain(FreeAbelian(2), "cyclic", 2)
    with pytest.raises(UnsupportedChain):
        build_chain(Heisenberg(), "cyclic_sequence", 2)
    with pytest.raises(ValueError):
        lamplighter_cyclic_action(ll, 0)


def test_action_from_images_validation():
    z2 = FreeAbelian(2)
    act = action_from_images(z2, [[1, 0], [0, 1]])
    assert act.degree == 2 and act.apply((1, 1)) == 0 and act.apply((1,)) == 1
    with pytest.raises(NotTransitive):
        action_from_images(z2, [[0, 1], [0, 1]])
    h = Heisenberg()
    # x, y as non-commuting 3-cycles/transpositions violate [x,y] = z with z trivial
    with pytest.raises(RelatorViolation):
        action_from_images(h, [[1, 2, 0], [1, 0, 2], [0, 1, 2]])
    with pytest.raises(ValueError):
        action_from_images(z2, [[1, 0]])
    with pytest.raises(ValueError):
        action_from_images(z2, [[0, 0], [0, 1]])


def test_perms_are_read_only():
    act = congruence_chain(FreeAbelian(2), 1).levels[0]
    with pytest.raises(ValueError):
        act.perms[0][0] = 3


def test_degree_cap(monkeypatch):
    monkeypatch.setenv("TORSION_GROWTH_DEGREE_CAP", "10")
    with pytest.raises(UnsupportedChain):
        congruence_chain(FreeAbelian(2), 2)


@settings(max_examples=50)
@given(st.lists(st.sampled_from([1, 2, 3, -1, -2, -3]), max_size=10), st.integers(1, 2))
def test_action_is_homomorphism(w, level):
    h = Heisenberg()
    chain = congruence_chain(h, level)
    act = chain.levels[-1]
    # the action is the regular one on the quotient: w fixes a coset iff w is in the kernel
    g = h.normal_form(tuple(w))
    in_kernel = all(v % 2**level == 0 for v in g)
    assert (act.fixed_count(tuple(w)) == act.degree) == in_kernel
    assert act.fixed_count(tuple(w)) in (0, act.degree)


def test_composite_map():
    chain = congruence_chain(FreeAbelian(2), 3)
    cm = chain.composite_map(1, 3)
    assert len(cm) == 64
    assert np.bincount(cm).tolist() == [16] * 4
    assert chain.composite_map(3, 3).tolist() == list(range(64))


def test_reduced_words_count():
    # 2d (2d-1)^(L-1) reduced words of length L
    ws = list(reduced_words(2, 3))
    assert len(ws) == 4 + 12 + 36
    assert all(all(a != -b for a, b in zip(w, w[1:])) for w in ws)


def test_farber_diagnostic_values():
    z2 = congruence_chain(FreeAbelian(2), 2)
    summary = farber_summary(farber_diagnostic(z2, 2))
    assert summary[1] == (Fraction(0), Fraction(1))  # x^2 lies in the first kernel
    assert summary[2] == (Fraction(0), Fraction(0))
    ll = build_chain(Lamplighter(2), "cyclic", 3)
    rows = farber_diagnostic(ll, 2)
    lamp = [r for r in rows if r.word == (1,)]
    assert [r.fixed_ratio for r in lamp] == [1, 1, 1]
    with pytest.raises(ValueError):
        farber_diagnostic(z2, 0)
