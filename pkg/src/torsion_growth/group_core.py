"""Words, presentations, integral group rings and the built-in group families.

Letters are signed generator indices: ``+j`` is generator ``j`` (1-based) and
``-j`` its inverse.  A word is a plain tuple of letters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping, Sequence

Word = tuple  # tuple[int, ...]

IDENTITY: Word = ()


def word_reduce(letters: Iterable[int], generator_count: int | None = None) -> Word:
    """Freely reduce a sequence of signed letters.

    >>> word_reduce([1, 2, -2, 1])
    (1, 1)
    """
    out: list[int] = []
    for x in letters:
        x = int(x)
        if x == 0 or (generator_count is not None and abs(x) > generator_count):
            raise ValueError(f"letter {x} out of range for {generator_count} generators")
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def word_inverse(w: Word) -> Word:
    return tuple(-x for x in reversed(w))


def word_mul(*words: Word) -> Word:
    out: list[int] = []
    for w in words:
        for x in w:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
    return tuple(out)


def word_power(w: Word, n: int) -> Word:
    if n < 0:
        return word_power(word_inverse(w), -n)
    return word_mul(*([w] * n))


def commutator(u: Word, v: Word) -> Word:
    """``u v u^-1 v^-1``."""
    return word_mul(u, v, word_inverse(u), word_inverse(v))


def format_word(w: Word, names: Sequence[str] | None = None) -> str:
    if not w:
        return "1"
    if names is None:
        return "[" + ",".join(str(x) for x in w) + "]"
    return "".join(names[abs(x) - 1] + ("" if x > 0 else "^-1") for x in w)


@dataclass(frozen=True)
class Presentation:
    generator_count: int
    relators: tuple = ()
    names: tuple = ()

    def __post_init__(self):
        if self.generator_count < 1:
            raise ValueError("need at least one generator")
        rels = tuple(tuple(r) for r in self.relators)
        for r in rels:
            if not r:
                raise ValueError("empty relator")
            if word_reduce(r, self.generator_count) != r:
                raise ValueError(f"relator {r} is not freely reduced")
        object.__setattr__(self, "relators", rels)
        if not self.names:
            object.__setattr__(self, "names", tuple("abcdefghijklmnopqrs"[: self.generator_count]))

    @property
    def max_relator_length(self) -> int:
        return max((len(r) for r in self.relators), default=0)

    @property
    def letters(self) -> tuple:
        """Generators followed by their inverses: ``(1, ..., d, -1, ..., -d)``."""
        d = self.generator_count
        return tuple(range(1, d + 1)) + tuple(-j for j in range(1, d + 1))


class GroupRingElement:
    """Finite integer combination of freely reduced words.

    Immutable; arithmetic returns new elements.  Multiplication concatenates and
    freely reduces, so this is the integral group ring of the free group.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Word, int] | None = None):
        clean: dict = {}
        for w, c in (terms or {}).items():
            w = word_reduce(w)
            c = clean.get(w, 0) + int(c)
            if c:
                clean[w] = c
            else:
                clean.pop(w, None)
        self._terms = clean
        self._hash = None

    @classmethod
    def word(cls, w: Iterable[int], coeff: int = 1) -> "GroupRingElement":
        return cls({tuple(w): coeff})

    @classmethod
    def scalar(cls, c: int) -> "GroupRingElement":
        return cls({IDENTITY: c})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __bool__(self):
        return bool(self._terms)

    def __eq__(self, other):
        if isinstance(other, int):
            other = GroupRingElement.scalar(other)
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __add__(self, other):
        if isinstance(other, int):
            other = GroupRingElement.scalar(other)
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out.get(w, 0) + c
        return GroupRingElement(out)

    __radd__ = __add__

    def __neg__(self):
        return GroupRingElement({w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        if isinstance(other, int):
            other = GroupRingElement.scalar(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return GroupRingElement({w: c * other for w, c in self._terms.items()})
        out: dict = {}
        for u, a in self._terms.items():
            for v, b in other._terms.items():
                w = word_mul(u, v)
                out[w] = out.get(w, 0) + a * b
        return GroupRingElement(out)

    def __rmul__(self, other):
        if isinstance(other, int):
            return self * other
        return NotImplemented

    def l1_norm(self) -> int:
        return sum(abs(c) for c in self._terms.values())

    def augmentation(self) -> int:
        return sum(self._terms.values())

    def evaluate(self, normal_form: Callable[[Word], Hashable]) -> dict:
        """Push the element into the group ring of a quotient: collect terms by normal form."""
        out: dict = {}
        for w, c in self._terms.items():
            key = normal_form(w)
            out[key] = out.get(key, 0) + c
        return {k: c for k, c in out.items() if c}

    def __repr__(self):
        if not self._terms:
            return "0"
        parts = []
        for w, c in sorted(self._terms.items(), key=lambda t: (len(t[0]), t[0])):
            parts.append(f"{c:+d}*{format_word(w)}")
        return " ".join(parts)


def gr_multiply(a: GroupRingElement, b: GroupRingElement) -> GroupRingElement:
    return a * b


def fox_derivative(relator: Word, generator: int, generator_count: int | None = None) -> GroupRingElement:
    """Left Fox derivative d(relator)/d(x_generator).

    Uses d(uv) = du + u dv, dx/dx = 1, d(x^-1)/dx = -x^-1.
    """
    if generator < 1 or (generator_count is not None and generator > generator_count):
        raise ValueError(f"generator index {generator} out of range")
    out: dict = {}
    prefix: list[int] = []
    for x in relator:
        if x == generator:
            w = tuple(prefix)
            out[w] = out.get(w, 0) + 1
        elif x == -generator:
            w = word_mul(tuple(prefix), (x,))
            out[w] = out.get(w, 0) - 1
        if prefix and prefix[-1] == -x:
            prefix.pop()
        else:
            prefix.append(x)
    return GroupRingElement(out)


# ---------------------------------------------------------------------------
# Built-in families.  Each ships a faithful normal form: elements are encoded
# as hashable tuples and ``mul`` is the group law on the encoding.


class GroupFamily:
    name: str = ""
    presentation: Presentation

    def __init__(self, presentation: Presentation, params: dict):
        self.presentation = presentation
        self.params = dict(params)

    def identity(self):
        raise NotImplementedError

    def letter(self, x: int):
        raise NotImplementedError

    def mul(self, g, h):
        raise NotImplementedError

    def normal_form(self, w: Word):
        g = self.identity()
        for x in w:
            g = self.mul(g, self.letter(x))
        return g

    def left_letter(self, x: int, g):
        """Normal form of ``x * g`` for a single letter ``x``."""
        return self.mul(self.letter(x), g)

    def is_identity(self, w: Word) -> bool:
        return self.normal_form(w) == self.identity()

    @property
    def generator_count(self) -> int:
        return self.presentation.generator_count

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other):
        return type(self) is type(other) and self.params == other.params

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.params.items()))))


class FreeAbelian(GroupFamily):
    """Z^d; elements are integer d-vectors."""

    name = "free_abelian"

    def __init__(self, d: int = 2):
        if d < 1:
            raise ValueError("FreeAbelian needs d >= 1")
        rels = tuple(commutator((i,), (j,)) for i in range(1, d + 1) for j in range(i + 1, d + 1))
        super().__init__(Presentation(d, rels), {"d": d})
        self.d = d

    def identity(self):
        return (0,) * self.d

    def letter(self, x):
        v = [0] * self.d
        v[abs(x) - 1] = 1 if x > 0 else -1
        return tuple(v)

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))


class Heisenberg(GroupFamily):
    """Integer Heisenberg group; ``(a, b, c)`` is the matrix [[1,a,c],[0,1,b],[0,0,1]]."""

    name = "heisenberg"

    def __init__(self):
        x, y, z = (1,), (2,), (3,)
        rels = (
            word_mul(commutator(x, y), word_inverse(z)),
            commutator(x, z),
            commutator(y, z),
        )
        super().__init__(Presentation(3, rels, ("x", "y", "z")), {})

    def identity(self):
        return (0, 0, 0)

    def letter(self, x):
        s = 1 if x > 0 else -1
        j = abs(x)
        if j == 1:
            return (s, 0, 0)
        if j == 2:
            return (0, s, 0)
        return (0, 0, s)

    def mul(self, g, h):
        return (g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1])


class BaumslagSolitar(GroupFamily):
    """BS(1, m) = <a, t | t a t^-1 = a^m> as affine maps x -> m^k x + v, v in Z[1/m]."""

    name = "baumslag_solitar"

    def __init__(self, m: int = 2):
        if m < 2:
            raise ValueError("BaumslagSolitar needs m >= 2")
        a, t = (1,), (2,)
        rel = word_mul(t, a, word_inverse(t), word_power(a, -m))
        super().__init__(Presentation(2, (rel,), ("a", "t")), {"m": m})
        self.m = m

    def identity(self):
        return (0, Fraction(0))

    def letter(self, x):
        if x == 1:
            return (0, Fraction(1))
        if x == -1:
            return (0, Fraction(-1))
        return (1 if x > 0 else -1, Fraction(0))

    def mul(self, g, h):
        k1, v1 = g
        k2, v2 = h
        return (k1 + k2, v1 + Fraction(self.m) ** k1 * v2)


class Lamplighter(GroupFamily):
    """C_p wreath Z with lamp generator ``a`` (lamp at 0) and shift ``t``.

    Elements are ``(lamps, shift)`` with ``lamps`` a sorted tuple of
    ``(position, value)`` pairs, values in 1..p-1.  The group is not finitely
    presented; the presentation carries ``a^p`` and the commutators
    ``[t^i a t^-i, a]`` for ``1 <= i <= relator_range``.
    """

    name = "lamplighter"

    def __init__(self, p: int = 2, relator_range: int = 4):
        if p < 2 or any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
            raise ValueError("Lamplighter needs a prime p")
        if relator_range < 0:
            raise ValueError("relator_range must be >= 0")
        a, t = (1,), (2,)
        rels = [word_power(a, p)]
        for i in range(1, relator_range + 1):
            conj = word_mul(word_power(t, i), a, word_power(t, -i))
            rels.append(commutator(conj, a))
        super().__init__(Presentation(2, tuple(rels), ("a", "t")), {"p": p, "relator_range": relator_range})
        self.p = p

    def identity(self):
        return ((), 0)

    def letter(self, x):
        if abs(x) == 1:
            return (((0, 1 if x > 0 else self.p - 1),), 0)
        return ((), 1 if x > 0 else -1)

    def mul(self, g, h):
        lamps = dict(g[0])
        s = g[1]
        for pos, val in h[0]:
            q = pos + s
            v = (lamps.get(q, 0) + val) % self.p
            if v:
                lamps[q] = v
            else:
                lamps.pop(q, None)
        return (tuple(sorted(lamps.items())), s + h[1])


_FAMILIES = {
    "free_abelian": FreeAbelian,
    "heisenberg": Heisenberg,
    "baumslag_solitar": BaumslagSolitar,
    "lamplighter": Lamplighter,
}


def builtin_family(name: str, **params) -> GroupFamily:
    key = name.lower().replace("-", "_")
    aliases = {"z2": ("free_abelian", {"d": 2}), "bs": ("baumslag_solitar", {})}
    if key in aliases:
        key, extra = aliases[key]
        params = {**extra, **params}
    if key not in _FAMILIES:
        raise ValueError(f"unknown group family {name!r}")
    return _FAMILIES[key](**params)


FAMILY_NAMES = tuple(_FAMILIES)
