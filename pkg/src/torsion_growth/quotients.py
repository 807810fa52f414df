"""Finite coset actions, quotient towers and the Farber fixed-point diagnostic."""

from __future__ import annotations

import itertools
import os
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .group_core import (
    BaumslagSolitar,
    FreeAbelian,
    GroupFamily,
    Heisenberg,
    Lamplighter,
    Presentation,
    Word,
)

DEFAULT_DEGREE_CAP = 1 << 14


class RelatorViolation(ValueError):
    pass


class NotTransitive(ValueError):
    pass


class UnsupportedChain(ValueError):
    pass


def degree_cap() -> int:
    return int(os.environ.get("TORSION_GROWTH_DEGREE_CAP", DEFAULT_DEGREE_CAP))


def _frozen(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteAction:
    """Left action of the generators on coset indices ``0..N-1``; basepoint 0.

    ``perms[j-1][c]`` is the coset ``x_j * c``.  Words act right-to-left, so
    ``apply(w, c)`` is the coset ``w * c``.
    """

    presentation: Presentation
    perms: tuple
    labels: tuple | None = None
    inverses: tuple = field(init=False, repr=False)

    def __post_init__(self):
        perms = tuple(_frozen(p) for p in self.perms)
        object.__setattr__(self, "perms", perms)
        inv = []
        for p in perms:
            q = np.empty_like(p)
            q[p] = np.arange(len(p))
            inv.append(_frozen(q))
        object.__setattr__(self, "inverses", tuple(inv))

    @property
    def degree(self) -> int:
        return len(self.perms[0])

    def letter_perm(self, x: int) -> np.ndarray:
        return self.perms[x - 1] if x > 0 else self.inverses[-x - 1]

    def apply(self, w: Word, c: int = 0) -> int:
        for x in reversed(w):
            c = int(self.letter_perm(x)[c])
        return c

    def word_perm(self, w: Word) -> np.ndarray:
        """Array ``P`` with ``P[c] = w * c``."""
        out = np.arange(self.degree)
        for x in reversed(w):
            out = self.letter_perm(x)[out]
        return out

    def fixed_count(self, w: Word) -> int:
        return int(np.count_nonzero(self.word_perm(w) == np.arange(self.degree)))

    def orbit_size(self, start: int = 0) -> int:
        seen = {start}
        todo = [start]
        while todo:
            c = todo.pop()
            for p in self.perms + self.inverses:
                d = int(p[c])
                if d not in seen:
                    seen.add(d)
                    todo.append(d)
        return len(seen)


def action_from_images(family: GroupFamily | Presentation, images, labels=None) -> FiniteAction:
    """Validate generator images as a transitive action of the presented group."""
    pres = family if isinstance(family, Presentation) else family.presentation
    images = [np.asarray(p, dtype=np.int64) for p in images]
    if len(images) != pres.generator_count:
        raise ValueError(f"expected {pres.generator_count} generator images, got {len(images)}")
    n = len(images[0])
    for p in images:
        if len(p) != n or sorted(p.tolist()) != list(range(n)):
            raise ValueError("generator images must be permutations of equal degree")
    act = FiniteAction(pres, tuple(images), labels)
    ident = np.arange(n)
    for r in pres.relators:
        if not np.array_equal(act.word_perm(r), ident):
            raise RelatorViolation(f"relator {r} acts nontrivially")
    if act.orbit_size() != n:
        raise NotTransitive("action has more than one orbit")
    return act


# ---------------------------------------------------------------------------
# Finite quotient models.  A model enumerates a finite group by BFS from the
# identity; the regular left action then gives G/H with H the kernel.


class QuotientModel:
    """Finite group image; ``left(j, g)`` is left multiplication by generator ``j``."""

    def __init__(self, family: GroupFamily, level: int):
        self.family = family
        self.level = level

    def identity(self):
        raise NotImplementedError

    def left(self, j: int, g):
        raise NotImplementedError

    def project(self, g):
        """Image of ``g`` in the model at ``level - 1``."""
        raise NotImplementedError

    def order(self) -> int:
        raise NotImplementedError


class _VectorMod(QuotientModel):
    def __init__(self, family: FreeAbelian, level):
        super().__init__(family, level)
        self.mod = 2**level

    def identity(self):
        return (0,) * self.family.d

    def left(self, j, g):
        v = list(g)
        v[j - 1] = (v[j - 1] + 1) % self.mod
        return tuple(v)

    def project(self, g):
        return tuple(x % (self.mod // 2) for x in g)

    def order(self):
        return self.mod**self.family.d


class _HeisenbergMod(QuotientModel):
    def __init__(self, family, level):
        super().__init__(family, level)
        self.mod = 2**level

    def identity(self):
        return (0, 0, 0)

    def left(self, j, g):
        a, b, c = g
        M = self.mod
        if j == 1:
            return ((a + 1) % M, b, (c + b) % M)
        if j == 2:
            return (a, (b + 1) % M, c)
        return (a, b, (c + 1) % M)

    def project(self, g):
        M = self.mod // 2
        return tuple(x % M for x in g)

    def order(self):
        return self.mod**3


def _smallest_prime_not_dividing(m: int) -> int:
    q = 2
    while True:
        if all(q % d for d in range(2, q)) and m % q:
            return q
        q += 1


def _mult_order(m: int, mod: int) -> int:
    if mod == 1:
        return 1
    k, x = 1, m % mod
    while x != 1:
        x = x * m % mod
        k += 1
    return k


class _AffineMod(QuotientModel):
    """BS(1,m) onto affine maps x -> m^k x + v of Z/q^level, q the least prime coprime to m."""

    def __init__(self, family: BaumslagSolitar, level):
        super().__init__(family, level)
        self.q = _smallest_prime_not_dividing(family.m)
        self.mod = self.q**level
        self.ord = _mult_order(family.m, self.mod)

    def identity(self):
        return (0, 0)

    def left(self, j, g):
        k, v = g
        if j == 1:
            return (k, (v + 1) % self.mod)
        return ((k + 1) % self.ord, (self.family.m * v) % self.mod)

    def project(self, g):
        k, v = g
        coarse = self.mod // self.q
        return (k % _mult_order(self.family.m, coarse), v % coarse)

    def order(self):
        return self.mod * self.ord


class _WreathMod(QuotientModel):
    """Lamplighter onto C_p wr C_L with L = 2^level (``cyclic_only`` drops the lamps)."""

    def __init__(self, family: Lamplighter, level, cyclic_only=False, length=None):
        super().__init__(family, level)
        self.L = length if length is not None else 2**level
        self.cyclic_only = cyclic_only

    def identity(self):
        return (0,) if self.cyclic_only else ((0,) * self.L, 0)

    def left(self, j, g):
        if self.cyclic_only:
            return g if j == 1 else ((g[0] + 1) % self.L,)
        lamps, s = g
        if j == 1:
            v = list(lamps)
            v[0] = (v[0] + 1) % self.family.p
            return (tuple(v), s)
        return (lamps[-1:] + lamps[:-1], (s + 1) % self.L)

    def project(self, g):
        half = self.L // 2
        if self.cyclic_only:
            return (g[0] % half,)
        lamps, s = g
        folded = [0] * half
        for pos, v in enumerate(lamps):
            folded[pos % half] = (folded[pos % half] + v) % self.family.p
        return (tuple(folded), s % half)

    def order(self):
        return self.L if self.cyclic_only else self.family.p**self.L * self.L


def quotient_model(family: GroupFamily, level: int, kind: str = "congruence") -> QuotientModel:
    if kind == "cyclic":
        if not isinstance(family, Lamplighter):
            raise UnsupportedChain("cyclic towers are defined for the lamplighter family only")
        return _WreathMod(family, level, cyclic_only=True)
    if isinstance(family, FreeAbelian):
        return _VectorMod(family, level)
    if isinstance(family, Heisenberg):
        return _HeisenbergMod(family, level)
    if isinstance(family, BaumslagSolitar):
        return _AffineMod(family, level)
    if isinstance(family, Lamplighter):
        return _WreathMod(family, level)
    raise UnsupportedChain(f"no quotient tower for {family!r}")


def enumerate_model(model: QuotientModel, cap: int | None = None):
    """BFS-enumerate the model's elements; returns (labels, index, FiniteAction)."""
    cap = degree_cap() if cap is None else cap
    if model.order() > cap:
        raise UnsupportedChain(f"degree {model.order()} exceeds cap {cap}")
    pres = model.family.presentation
    start = model.identity()
    index = {start: 0}
    labels = [start]
    queue = deque([start])
    while queue:
        g = queue.popleft()
        for j in range(1, pres.generator_count + 1):
            h = model.left(j, g)
            if h not in index:
                index[h] = len(labels)
                labels.append(h)
                queue.append(h)
    perms = [[index[model.left(j, g)] for g in labels] for j in range(1, pres.generator_count + 1)]
    act = action_from_images(pres, perms, labels=tuple(labels))
    return labels, index, act


def lamplighter_cyclic_action(family: Lamplighter, n: int) -> FiniteAction:
    """Action on the cosets of H_n = kernel of the map onto C_n (lamps to 0, shift mod n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    model = _WreathMod(family, 0, cyclic_only=True, length=n)
    return enumerate_model(model)[2]


@dataclass(frozen=True, eq=False)
class ChainSpec:
    family: GroupFamily
    levels: tuple
    refinement_maps: tuple
    kind: str = "congruence"
    exhausting: bool = True
    normal: bool = True
    refining: bool = True

    @property
    def degrees(self) -> list:
        return [a.degree for a in self.levels]

    def check_refinements(self) -> None:
        for i, rmap in enumerate(self.refinement_maps):
            fine, coarse = self.levels[i + 1], self.levels[i]
            rmap = np.asarray(rmap)
            if rmap[0] != 0:
                raise AssertionError(f"refinement {i} moves the basepoint")
            for pf, pc in zip(fine.perms, coarse.perms):
                if not np.array_equal(rmap[pf], pc[rmap]):
                    raise AssertionError(f"refinement {i} does not commute with the action")
            counts = np.bincount(rmap, minlength=coarse.degree)
            if counts.min() == 0:
                raise AssertionError(f"refinement {i} is not surjective")
            if self.normal and counts.min() != counts.max():
                raise AssertionError(f"refinement {i} has unequal fibres")

    def composite_map(self, i: int, n: int) -> np.ndarray:
        """Map from level ``n`` cosets to level ``i`` cosets (levels 1-based)."""
        if not (1 <= i <= n <= len(self.levels)) or not self.refining:
            raise ValueError(f"levels {i}, {n} are not in refinement relation")
        out = np.arange(self.levels[n - 1].degree)
        for k in range(n - 1, i - 1, -1):
            out = np.asarray(self.refinement_maps[k - 1])[out]
        return out


def congruence_chain(family: GroupFamily, depth: int, kind: str = "congruence") -> ChainSpec:
    """Exhausting normal tower (``kind='cyclic'``: the lamplighter's shift-only tower)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    levels, maps = [], []
    prev_index = None
    for i in range(1, depth + 1):
        model = quotient_model(family, i, kind)
        labels, index, act = enumerate_model(model)
        if prev_index is not None:
            maps.append(_frozen([prev_index[model.project(g)] for g in labels]))
        levels.append(act)
        prev_index = index
    chain = ChainSpec(family, tuple(levels), tuple(maps), kind=kind, exhausting=(kind != "cyclic"))
    chain.check_refinements()
    return chain


def cyclic_sequence(family: Lamplighter, depth: int) -> ChainSpec:
    """Lamplighter subgroups H_n (n = 1..depth) of index n; not nested, so not refining."""
    levels = tuple(lamplighter_cyclic_action(family, n) for n in range(1, depth + 1))
    return ChainSpec(family, levels, (), kind="cyclic_sequence", exhausting=False, refining=False)


def build_chain(family: GroupFamily, kind: str, depth: int) -> ChainSpec:
    if kind == "cyclic_sequence":
        if not isinstance(family, Lamplighter):
            raise UnsupportedChain("cyclic_sequence is defined for the lamplighter family only")
        return cyclic_sequence(family, depth)
    return congruence_chain(family, depth, kind)


def reduced_words(generator_count: int, max_length: int):
    """All nonempty freely reduced words of length <= max_length, shortlex order."""
    letters = list(range(1, generator_count + 1)) + [-j for j in range(1, generator_count + 1)]
    frontier = [()]
    for _ in range(max_length):
        nxt = []
        for w in frontier:
            for x in letters:
                if w and w[-1] == -x:
                    continue
                v = w + (x,)
                nxt.append(v)
                yield v
        frontier = nxt


@dataclass(frozen=True)
class FarberRow:
    word: tuple
    level: int
    fixed_ratio: Fraction


def farber_diagnostic(chain: ChainSpec, max_word_length: int) -> list:
    """Exact fixed-point proportions |Fix(g)|/N_i for nontrivial g up to the given length."""
    if max_word_length < 1:
        raise ValueError("max_word_length must be >= 1")
    fam = chain.family
    seen = {fam.identity()}
    rows = []
    for w in reduced_words(fam.generator_count, max_word_length):
        key = fam.normal_form(w)
        if key in seen:
            continue
        seen.add(key)
        for i, act in enumerate(chain.levels, start=1):
            rows.append(FarberRow(w, i, Fraction(act.fixed_count(w), act.degree)))
    return rows


def farber_summary(rows) -> dict:
    """Per level: (min, max) fixed ratio over the tested words."""
    out: dict = {}
    for level, group in itertools.groupby(sorted(rows, key=lambda r: r.level), key=lambda r: r.level):
        ratios = [r.fixed_ratio for r in group]
        out[level] = (min(ratios), max(ratios))
    return out
