import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sympy import Matrix, ZZ
from sympy.matrices.normalforms import smith_normal_form

from torsion_growth.exact_linalg import IntMatrix
from torsion_growth.group_core import BaumslagSolitar, FreeAbelian, GroupRingElement, Heisenberg, Lamplighter, Presentation
from torsion_growth.homology import (
    ChainComplexSpec,
    CompositionError,
    check_composition,
    cover_euler_characteristic,
    cube_complex,
    format_complex,
    homology_torsion,
    induce,
    parse_complex,
    presentation_complex,
    reidemeister_schreier,
    relative_bound,
    relative_torsion,
    rs_torsion,
    torsion_bound_n1,
)
from torsion_growth.quotients import action_from_images, build_chain, congruence_chain
from torsion_growth.transversal import connect_repair, random_transversal, schreier_tree_transversal, weiss_tiling


def sympy_torsion(M: IntMatrix) -> int:
    D = smith_normal_form(Matrix(M.to_dense()), domain=ZZ)
    return math.prod(abs(D[i, i]) for i in range(min(D.shape)) if D[i, i] != 0)


def both_pipelines(family, action, t=None):
    t = t or schreier_tree_transversal(action, family)
    if not t.is_connected:
        t = connect_repair(t, action, family)
    sp = reidemeister_schreier(family.presentation, action, t, family)
    rs = rs_torsion(sp)
    cx = presentation_complex(family.presentation, family)
    rep = homology_torsion(induce(cx, action), 1)
    return sp, rs, rep, t


def test_presentation_complex_shapes():
    h = Heisenberg()
    cx = presentation_complex(h.presentation, h)
    assert cx.ranks == (1, 3, 3)
    assert cx.euler_characteristic() == 1
    assert cx.top_degree == 2


def test_composition_detected():
    p = Presentation(1, ())
    x = GroupRingElement.word((1,))
    bad = ChainComplexSpec(p, (1, 1, 1), {1: ((x - 1,),), 2: ((GroupRingElement.scalar(1),),)})
    with pytest.raises(CompositionError):
        bad.check()


@pytest.mark.parametrize("d", [1, 2, 3])
def test_cube_complex(d):
    fam = FreeAbelian(d)
    cx = cube_complex(d, fam)
    assert cx.ranks == tuple(math.comb(d, k) for k in range(d + 1))
    assert cx.euler_characteristic() == 0
    act = congruence_chain(fam, 1).levels[0]
    induced = induce(cx, act)
    check_composition(induced)
    # torus covers: H_k = Z^C(d,k), no torsion
    for k in range(d + 1):
        rep = homology_torsion(induced, k)
        assert (rep.torsion, rep.betti) == (1, math.comb(d, k))


def test_fixture_roundtrip():
    h = Heisenberg()
    cx = presentation_complex(h.presentation, h)
    text = format_complex(cx)
    back = parse_complex(text, h.presentation)
    assert back.ranks == cx.ranks
    for d in cx.boundaries:
        assert back.boundary(d) == cx.boundary(d)
    cube = cube_complex(2, FreeAbelian(2))
    assert parse_complex(format_complex(cube)).acyclic_degrees == (1, 2)
    with pytest.raises(ValueError):
        parse_complex("ranks: 1 1\n(1, 0, 0): 1*[1] garbage\n")


@pytest.mark.parametrize("level", [1, 2, 3, 4])
def test_torus_covers(level):
    fam = FreeAbelian(2)
    act = congruence_chain(fam, level).levels[-1]
    sp, rs, rep, _ = both_pipelines(fam, act)
    assert (rs.torsion, rs.cokernel_free_rank) == (1, 2)
    assert (rep.torsion, rep.betti) == (1, 2)


@pytest.mark.parametrize("level", [1, 2])
def test_heisenberg_torsion_closed_form(level):
    # kernel of the mod 2^i map is <X, Y, Z> with [X, Y] = Z^(2^i): H_1 = Z^2 + Z/2^i
    fam = Heisenberg()
    act = congruence_chain(fam, level).levels[-1]
    sp, rs, rep, _ = both_pipelines(fam, act)
    assert rs.torsion == rep.torsion == 2**level
    assert rep.betti == 2
    assert rep.factors == (2**level,)


def test_baumslag_solitar_values():
    fam = BaumslagSolitar(2)
    chain = congruence_chain(fam, 2)
    cx = presentation_complex(fam.presentation, fam)
    got = []
    for act in chain.levels:
        sp, rs, rep, _ = both_pipelines(fam, act)
        assert rs.torsion == rep.torsion
        got.append((rep.torsion, rep.betti))
    assert got == [(3, 1), (63, 1)]
    # independent SNF on the induced boundary at index 6
    assert sympy_torsion(induce(cx, chain.levels[0])[1]) == 3


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_lamplighter_index_n(n):
    # H_1 = Z + (Z/2)[t]/(t^n - 1), the latter of order 2^n
    fam = Lamplighter(2)
    act = build_chain(fam, "cyclic_sequence", n).levels[-1]
    sp, rs, rep, _ = both_pipelines(fam, act)
    assert rs.torsion == rep.torsion == 2**n
    assert rep.betti == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["z2", "heis", "bs"]))
def test_pipelines_agree_on_random_transversals(seed, which):
    fam = {"z2": FreeAbelian(2), "heis": Heisenberg(), "bs": BaumslagSolitar(2)}[which]
    act = congruence_chain(fam, 1).levels[0]
    t = random_transversal(act, fam, random.Random(seed))
    sp, rs, rep, t = both_pipelines(fam, act, t)
    assert rs.torsion == rep.torsion
    assert rs.cokernel_free_rank == rep.betti
    # E' killed vs kept with explicit unit columns vs kept with no extra relations
    from torsion_growth.exact_linalg import snf

    assert snf(sp.trivial_relation_matrix()).torsion == rs.torsion
    assert len(sp.generators) == act.degree * fam.generator_count - (act.degree - 1)
    assert len(sp.surviving) <= t.boundary_edges
    assert rs.torsion <= torsion_bound_n1(sp, fam.presentation.max_relator_length)


def test_euler_characteristic_multiplicative():
    for fam, depth in [(FreeAbelian(2), 3), (Heisenberg(), 2), (BaumslagSolitar(2), 2), (Lamplighter(2), 2)]:
        cx = presentation_complex(fam.presentation, fam)
        for act in congruence_chain(fam, depth).levels:
            induced = induce(cx, act)
            check_composition(induced)
            assert cover_euler_characteristic(induced) == act.degree * cx.euler_characteristic()


def test_h0_of_cover():
    fam = Heisenberg()
    cx = presentation_complex(fam.presentation, fam)
    rep = homology_torsion(induce(cx, congruence_chain(fam, 1).levels[0]), 0)
    assert (rep.torsion, rep.betti) == (1, 1)
    with pytest.raises(ValueError):
        homology_torsion(induce(cx, congruence_chain(fam, 1).levels[0]), 3)


def test_relative_bound_torus_closed_form():
    fam = FreeAbelian(2)
    cx = presentation_complex(fam.presentation, fam)
    chain = congruence_chain(fam, 4)
    for i, act in enumerate(chain.levels, start=1):
        L = 2**i
        t = schreier_tree_transversal(act, fam)
        rb = relative_bound(cx, act, t, 1, fam)
        assert rb.m == 2 * (2 * L - 1)
        assert rb.base == 4
        induced = induce(cx, act)
        T = homology_torsion(induced, 1).torsion
        rel = relative_torsion(cx, induced, rb, 1, act.degree)
        assert T <= rel <= rb.bound


def test_relative_bound_trivial_and_circle():
    fam = FreeAbelian(2)
    cx = presentation_complex(fam.presentation, fam)
    act = action_from_images(fam, [[0], [0]])
    t = schreier_tree_transversal(act, fam)
    m, bound = relative_bound(cx, act, t, 1, fam)
    assert m == 2 and bound == 16
    with pytest.raises(ValueError):
        relative_bound(cx, act, t, 2, fam)
    circle_fam = FreeAbelian(1)
    circle = cube_complex(1, circle_fam)
    for L in (2, 4, 8, 16):
        act = action_from_images(circle_fam, [np.roll(np.arange(L), 1)])
        t = schreier_tree_transversal(act, circle_fam)
        rb = relative_bound(circle, act, t, 0, circle_fam)
        assert (rb.m, rb.base, rb.interior) == (1, 2, L - 1)


def test_weiss_transversal_rs_bound_heisenberg():
    fam = Heisenberg()
    chain = congruence_chain(fam, 2)
    t = weiss_tiling(chain, 1, 2)
    sp, rs, rep, _ = both_pipelines(fam, chain.levels[1], t)
    assert rs.torsion == rep.torsion == 4
    assert len(sp.surviving) <= t.boundary_edges
