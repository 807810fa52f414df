import pytest
from hypothesis import given, settings, strategies as st

from torsion_growth.group_core import (
    BaumslagSolitar,
    FreeAbelian,
    GroupRingElement,
    Heisenberg,
    Lamplighter,
    Presentation,
    builtin_family,
    commutator,
    format_word,
    fox_derivative,
    word_inverse,
    word_mul,
    word_power,
    word_reduce,
)

FAMILIES = [FreeAbelian(2), FreeAbelian(3), Heisenberg(), BaumslagSolitar(2), BaumslagSolitar(3), Lamplighter(2), Lamplighter(3, 2)]


def words(d, max_size=12):
    letters = st.sampled_from([j for j in range(1, d + 1)] + [-j for j in range(1, d + 1)])
    return st.lists(letters, max_size=max_size).map(tuple)


def test_word_reduce_examples():
    assert word_reduce([1, 2, -2, 1]) == (1, 1)
    assert word_reduce([1, -1]) == ()
    assert word_reduce([2, 1, -1, -2, 3]) == (3,)


def test_word_reduce_range_check():
    with pytest.raises(ValueError):
        word_reduce([1, 3], generator_count=2)
    with pytest.raises(ValueError):
        word_reduce([0])


def test_commutator_and_power():
    assert commutator((1,), (2,)) == (1, 2, -1, -2)
    assert word_power((1, 2), 2) == (1, 2, 1, 2)
    assert word_power((1, 2), -1) == (-2, -1)
    assert word_power((1,), 0) == ()
    assert format_word((1, -2), ("a", "t")) == "at^-1"
    assert format_word(()) == "1"
    assert format_word((1, -2)) == "[1,-2]"


@given(words(3), words(3), words(3))
def test_word_mul_associative(u, v, w):
    assert word_mul(word_mul(u, v), w) == word_mul(u, word_mul(v, w))


@given(words(3))
def test_word_inverse(u):
    assert word_mul(u, word_inverse(u)) == ()
    assert word_inverse(word_inverse(word_reduce(u))) == word_reduce(u)


def test_presentation_validation():
    with pytest.raises(ValueError):
        Presentation(2, ((1, -1),))
    with pytest.raises(ValueError):
        Presentation(2, ((),))
    with pytest.raises(ValueError):
        Presentation(1, ((2,),))
    p = Presentation(2, ((1, 2, -1, -2),))
    assert p.max_relator_length == 4
    assert p.letters == (1, 2, -1, -2)


def test_group_ring_arithmetic():
    x = GroupRingElement.word((1,))
    y = GroupRingElement.word((2,))
    assert (x - 1) * (x + 1) == GroupRingElement.word((1, 1)) - 1
    assert (x * GroupRingElement.word((-1,))) == GroupRingElement.scalar(1)
    assert (x + y - x) == y
    assert (2 * x).l1_norm() == 2
    assert (x - 1).augmentation() == 0
    assert not (x - x)
    assert hash(x + y) == hash(y + x)


def test_fox_derivative_examples():
    one = GroupRingElement.scalar(1)
    assert fox_derivative((1,), 1) == one
    assert fox_derivative((-1,), 1) == -GroupRingElement.word((-1,))
    assert fox_derivative((1, 2), 2) == GroupRingElement.word((1,))
    assert fox_derivative((1, 2), 3) == GroupRingElement()
    # d[x,y]/dx = 1 - x y x^-1
    assert fox_derivative(commutator((1,), (2,)), 1) == one - GroupRingElement.word((1, 2, -1))


@given(words(3, 16))
def test_fox_fundamental_identity(w):
    w = word_reduce(w)
    total = GroupRingElement()
    for j in range(1, 4):
        total = total + fox_derivative(w, j) * (GroupRingElement.word((j,)) - 1)
    assert total == GroupRingElement.word(w) - 1


@given(words(3), words(3))
def test_fox_product_rule(u, v):
    for j in range(1, 4):
        lhs = fox_derivative(word_mul(u, v), j)
        rhs = fox_derivative(word_reduce(u), j) + GroupRingElement.word(word_reduce(u)) * fox_derivative(word_reduce(v), j)
        assert lhs == rhs


@pytest.mark.parametrize("fam", FAMILIES, ids=repr)
def test_relators_are_trivial(fam):
    for r in fam.presentation.relators:
        assert fam.is_identity(r)


@pytest.mark.parametrize("fam", FAMILIES, ids=repr)
@settings(max_examples=40)
@given(data=st.data())
def test_normal_form_is_homomorphism(fam, data):
    d = fam.generator_count
    u = data.draw(words(d))
    v = data.draw(words(d))
    assert fam.normal_form(word_mul(u, v)) == fam.mul(fam.normal_form(u), fam.normal_form(v))
    assert fam.is_identity(word_mul(u, word_inverse(u)))
    x = data.draw(st.sampled_from(fam.presentation.letters))
    assert fam.left_letter(x, fam.normal_form(u)) == fam.normal_form((x,) + tuple(u))


def test_family_specific_values():
    h = Heisenberg()
    assert h.normal_form(commutator((1,), (2,))) == (0, 0, 1)
    bs = BaumslagSolitar(2)
    assert bs.is_identity(word_mul((2, 1, -2), (-1, -1)))
    ll = Lamplighter(2)
    assert ll.normal_form((2, 1, -2)) == (((1, 1),), 0)
    assert not ll.is_identity((1,))
    assert FreeAbelian(2).normal_form((1, 1, -2)) == (2, -1)


def test_builtin_family():
    assert builtin_family("z2") == FreeAbelian(2)
    assert builtin_family("bs", m=3) == BaumslagSolitar(3)
    assert builtin_family("Heisenberg") == Heisenberg()
    with pytest.raises(ValueError):
        builtin_family("grigorchuk")
    with pytest.raises(ValueError):
        Lamplighter(4)
    with pytest.raises(ValueError):
        FreeAbelian(0)
