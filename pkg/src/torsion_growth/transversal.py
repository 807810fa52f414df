"""Coset representative sets with small Cayley-graph boundary.

Boundary convention: directed edges ``(x, s x)`` with ``x`` in the set,
``s`` a generator or inverse, and ``s x`` outside the set.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .group_core import GroupFamily, Word, word_inverse, word_mul
from .quotients import ChainSpec, FiniteAction


@dataclass(frozen=True, eq=False)
class Transversal:
    reps: tuple
    boundary_edges: int
    components: int
    elements: tuple = field(repr=False, default=())
    patch: dict = field(default_factory=dict, compare=False)

    @property
    def is_connected(self) -> bool:
        return self.components == 1

    @property
    def size(self) -> int:
        return len(self.reps)

    @property
    def boundary_ratio(self) -> float:
        return self.boundary_edges / len(self.reps)


def _letters(family: GroupFamily) -> tuple:
    return family.presentation.letters


def boundary_count(elements, family: GroupFamily) -> int:
    members = set(elements)
    return sum(
        1 for g in elements for s in _letters(family) if family.left_letter(s, g) not in members
    )


def component_labels(elements, family: GroupFamily) -> list:
    """Connected components of the Cayley graph induced on ``elements``."""
    index = {g: k for k, g in enumerate(elements)}
    label = [-1] * len(elements)
    comp = 0
    for start in range(len(elements)):
        if label[start] >= 0:
            continue
        label[start] = comp
        todo = [start]
        while todo:
            k = todo.pop()
            for s in _letters(family):
                nb = index.get(family.left_letter(s, elements[k]))
                if nb is not None and label[nb] < 0:
                    label[nb] = comp
                    todo.append(nb)
        comp += 1
    return label


def make_transversal(reps, action: FiniteAction, family: GroupFamily, patch=None) -> Transversal:
    """Validate ``reps`` as a transversal and compute its metrics."""
    reps = tuple(tuple(r) for r in reps)
    if len(reps) != action.degree:
        raise ValueError(f"need {action.degree} representatives, got {len(reps)}")
    if reps[0] != ():
        raise ValueError("the representative of coset 0 must be the empty word")
    for c, w in enumerate(reps):
        if action.apply(w, 0) != c:
            raise ValueError(f"representative {w} does not map the basepoint to coset {c}")
    elements = tuple(family.normal_form(w) for w in reps)
    labels = component_labels(elements, family)
    return Transversal(
        reps,
        boundary_count(elements, family),
        max(labels) + 1,
        elements,
        dict(patch or {}),
    )


def is_true_transversal(t: Transversal, action: FiniteAction) -> bool:
    return len(t.reps) == action.degree and all(action.apply(w, 0) == c for c, w in enumerate(t.reps))


def schreier_tree_transversal(action: FiniteAction, family: GroupFamily) -> Transversal:
    """BFS tree in the Schreier graph using positive generators; reps are tree paths."""
    n = action.degree
    reps: list = [None] * n
    reps[0] = ()
    queue = deque([0])
    gens = range(1, family.generator_count + 1)
    while queue:
        c = queue.popleft()
        for j in gens:
            d = int(action.perms[j - 1][c])
            if reps[d] is None:
                reps[d] = (j,) + reps[c]
                queue.append(d)
    if any(r is None for r in reps):
        raise ValueError("action is not transitive")
    return make_transversal(reps, action, family)


def connect_repair(t: Transversal, action: FiniteAction, family: GroupFamily) -> Transversal:
    """Right-translate components by subgroup elements until the induced graph is connected.

    Each step picks a Schreier edge from a coset of a non-base component C into
    the base component (the one holding coset 0): if ``s x`` and ``y`` lie in
    the same coset with ``x`` in C and ``y`` in the base, then ``u = y^-1 s x``
    is in the subgroup and ``C u^-1`` is adjacent to the base.
    """
    reps = list(t.reps)
    steps = 0
    while True:
        elements = [family.normal_form(w) for w in reps]
        labels = component_labels(elements, family)
        if max(labels) == 0:
            break
        base = labels[0]
        move = None
        for c in range(action.degree):
            if labels[c] == base:
                continue
            for s in _letters(family):
                d = action.apply((s,), c)
                if labels[d] == base:
                    move = (c, s, d)
                    break
            if move:
                break
        c, s, d = move
        # u^-1 = x^-1 s^-1 y with x = reps[c], y = reps[d]
        u_inv = word_mul(word_inverse(reps[c]), (-s,), reps[d])
        comp = labels[c]
        for k in range(action.degree):
            if labels[k] == comp:
                reps[k] = word_mul(reps[k], u_inv)
        steps += 1
    out = make_transversal(reps, action, family, patch={"repair_steps": steps})
    if out.boundary_edges > t.boundary_edges:
        raise AssertionError("connect_repair increased the boundary")
    return out


def _tile_translates(tile: Transversal, fine: FiniteAction, fibre, family: GroupFamily) -> list:
    """Subgroup elements ``u`` whose translates ``T u`` tile the fine level.

    BFS from ``u = 1``: a positive letter ``s`` applied to ``t u`` lands in the
    coarse coset of some tile element ``t'``, giving the neighbouring translate
    ``u' = t'^-1 s t u``.  ``fibre[c]`` is the coarse coset of fine coset ``c``.
    One ``u`` is kept per fine coset lying over the coarse basepoint.
    """
    wanted = int(np.count_nonzero(np.asarray(fibre) == 0))
    found = {0: ()}
    queue = deque([()])
    gens = range(1, family.generator_count + 1)
    while queue and len(found) < wanted:
        u = queue.popleft()
        for s in gens:
            for t_word in tile.reps:
                w = word_mul((s,), t_word, u)
                landing = int(fibre[fine.apply(w, 0)])
                u2 = word_mul(word_inverse(tile.reps[landing]), w)
                key = fine.apply(u2, 0)
                if key not in found:
                    found[key] = u2
                    queue.append(u2)
    if len(found) != wanted:
        raise AssertionError("translate search did not cover the fibre")
    return [found[c] for c in sorted(found)]


def weiss_tiling(chain: ChainSpec, tile_level: int, target_level: int) -> Transversal:
    """Tile the target level with right translates of the tile-level transversal.

    For a normal refining tower the translates ``T u`` (``u`` ranging over a
    transversal of the finer subgroup inside the coarser one) cover every fine
    coset exactly once.  Any overlap or gap is patched: duplicates are dropped
    and missing cosets receive Schreier-tree representatives; the counts are
    kept in ``patch``.
    """
    if not chain.refining:
        raise ValueError("weiss tiling needs a refining chain")
    if not (1 <= tile_level <= target_level <= len(chain.levels)):
        raise ValueError(f"levels {tile_level}, {target_level} are not in refinement relation")
    family = chain.family
    coarse = chain.levels[tile_level - 1]
    fine = chain.levels[target_level - 1]
    tile = schreier_tree_transversal(coarse, family)
    if tile_level == target_level:
        return tile
    fibre = chain.composite_map(tile_level, target_level)
    translates = _tile_translates(tile, fine, fibre, family)
    reps: list = [None] * fine.degree
    overcount = 0
    for u in translates:
        for t_word in tile.reps:
            w = word_mul(t_word, u)
            c = fine.apply(w, 0)
            if reps[c] is None:
                reps[c] = w
            else:
                overcount += 1
    missing = [c for c in range(fine.degree) if reps[c] is None]
    if missing:
        tree = schreier_tree_transversal(fine, family)
        for c in missing:
            reps[c] = tree.reps[c]
    reps[0] = ()
    return make_transversal(
        reps,
        fine,
        family,
        patch={"removed": overcount, "added": len(missing), "tiles": len(translates)},
    )


def _degree_in(g, members, family) -> int:
    return sum(1 for s in _letters(family) if family.left_letter(s, g) in members)


def local_search_boundary_min(
    t: Transversal, action: FiniteAction, family: GroupFamily, budget: int = 1000
) -> Transversal:
    """Best-improvement swaps ``reps[c] <- s * reps[c']`` (with ``s * c' = c``).

    Ties go to the lexicographically smallest ``(c, c', s-position)``; the
    representative of coset 0 is never moved.
    """
    if budget <= 0:
        return t
    reps = list(t.reps)
    elems = [family.normal_form(w) for w in reps]
    members = set(elems)
    letters = _letters(family)
    boundary = t.boundary_edges
    steps = 0
    while steps < budget:
        best = None
        for c2 in range(action.degree):
            x2 = elems[c2]
            for si, s in enumerate(letters):
                c = action.apply((s,), c2)
                if c == 0:
                    continue
                new = family.left_letter(s, x2)
                old = elems[c]
                if new == old:
                    continue
                deg_old = _degree_in(old, members, family)
                members.discard(old)
                deg_new = _degree_in(new, members, family)
                members.add(old)
                delta = 2 * deg_old - 2 * deg_new
                if delta < 0:
                    key = (delta, c, c2, si)
                    if best is None or key < best:
                        best = key
        if best is None:
            break
        delta, c, c2, si = best
        s = letters[si]
        members.discard(elems[c])
        reps[c] = word_mul((s,), reps[c2])
        elems[c] = family.left_letter(s, elems[c2])
        members.add(elems[c])
        boundary += delta
        steps += 1
    out = make_transversal(reps, action, family, patch={"search_steps": steps})
    assert out.boundary_edges == boundary
    return out


def reroot(t: Transversal, action: FiniteAction, family: GroupFamily, c: int) -> Transversal:
    """Right-translate the whole set by ``reps[c]^-1`` so that it again contains 1.

    The result is a transversal whenever the subgroup is normal; otherwise a
    ``ValueError`` is raised by validation.
    """
    g = word_inverse(t.reps[c])
    reps: list = [None] * action.degree
    for w in t.reps:
        v = word_mul(w, g)
        d = action.apply(v, 0)
        if reps[d] is not None:
            raise ValueError("translate is not a transversal (subgroup not normal)")
        reps[d] = v
    return make_transversal(reps, action, family)


def random_transversal(action: FiniteAction, family: GroupFamily, rng, max_extra: int = 3) -> Transversal:
    """Tree transversal with each rep right-multiplied by a random subgroup element."""
    tree = schreier_tree_transversal(action, family)
    letters = _letters(family)
    reps = [()]
    for c in range(1, action.degree):
        w = tree.reps[c]
        for _ in range(rng.randint(0, max_extra)):
            d = action.apply(w, 0)
            s = rng.choice(letters)
            # append a Schreier loop based at the basepoint: s then the way back
            back = word_inverse(tree.reps[action.apply((s,), 0)])
            w = word_mul(w, back, (s,))
            assert action.apply(w, 0) == d
        reps.append(w)
    return make_transversal(reps, action, family)
