"""Torsion in the homology of finite covers.

Cells of the universal cover form free left modules over the group ring.  A
boundary matrix ``delta[d]`` has one row per (d-1)-cell type and one column
per d-cell type; the column of cell ``e`` lists its boundary, so
``delta(e_k) = sum_j delta[d][j][k] * e_j``.  Because coefficients multiply
from the left, the composite ``delta[d] o delta[d+1]`` has entries
``sum_j delta[d+1][j][k] * delta[d][i][j]`` (note the order).

Cover of index N: the cell ``g e_k`` projects to the coset ``g^-1 H``, and a
coefficient ``w`` sends coset ``c`` to ``w^-1 c``.  The induced integer
matrices therefore have entry ``[(j, c), (k, w c)] += coeff(w)``.
"""

from __future__ import annotations

import math
import re
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations

from .exact_linalg import IntMatrix, SnfResult, snf
from .group_core import (
    GroupFamily,
    GroupRingElement,
    Presentation,
    Word,
    fox_derivative,
    word_inverse,
    word_mul,
    word_reduce,
)
from .quotients import FiniteAction
from .transversal import Transversal


class CompositionError(ValueError):
    """Consecutive boundary maps do not compose to zero."""


@dataclass(frozen=True, eq=False)
class ChainComplexSpec:
    presentation: Presentation
    ranks: tuple
    boundaries: dict  # degree d >= 1 -> tuple of rows (ranks[d-1] x ranks[d])
    name: str = ""
    acyclic_degrees: tuple = ()  # degrees n with H_n of the universal cover known to vanish

    @property
    def top_degree(self) -> int:
        return len(self.ranks) - 1

    def boundary(self, d: int) -> tuple:
        if d in self.boundaries:
            return self.boundaries[d]
        return tuple(tuple(GroupRingElement() for _ in range(self.ranks[d])) for _ in range(self.ranks[d - 1]))

    def composite(self, d: int) -> list:
        """Entries of ``delta[d] o delta[d+1]`` in the free group ring."""
        lower, upper = self.boundary(d), self.boundary(d + 1)
        out = []
        for i in range(self.ranks[d - 1]):
            row = []
            for k in range(self.ranks[d + 1]):
                acc = GroupRingElement()
                for j in range(self.ranks[d]):
                    a, b = upper[j][k], lower[i][j]
                    if a and b:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return out

    def check(self, family: GroupFamily | None = None) -> None:
        """Verify every composite vanishes in the group ring of ``family``."""
        nf = family.normal_form if family is not None else None
        for d in range(1, self.top_degree):
            for row in self.composite(d):
                for e in row:
                    if (e.evaluate(nf) if nf else dict(e.items())):
                        raise CompositionError(f"delta_{d} o delta_{d + 1} != 0 (entry {e!r})")

    def euler_characteristic(self) -> int:
        return sum((-1) ** d * r for d, r in enumerate(self.ranks))


def presentation_complex(p: Presentation, family: GroupFamily | None = None) -> ChainComplexSpec:
    """One vertex, an edge per generator, a disk per relator; delta_2 is the Fox matrix."""
    S, R = p.generator_count, len(p.relators)
    d1 = (tuple(GroupRingElement.word((j,)) - 1 for j in range(1, S + 1)),)
    d2 = tuple(tuple(fox_derivative(r, j) for r in p.relators) for j in range(1, S + 1))
    cx = ChainComplexSpec(p, (1, S, R), {1: d1, 2: d2} if R else {1: d1}, name="presentation")
    # fundamental identity: the composite column of relator r is exactly r - 1
    if R:
        for k, e in enumerate(cx.composite(1)[0]):
            if e != GroupRingElement.word(p.relators[k]) - 1:
                raise CompositionError(f"Fox identity fails for relator {p.relators[k]}")
    if family is not None:
        cx.check(family)
    return cx


def cube_complex(d: int, family: GroupFamily | None = None) -> ChainComplexSpec:
    """Cubical structure on the d-torus over Z^d (Koszul boundary, contractible cover)."""
    pres = family.presentation if family is not None else None
    if pres is None:
        from .group_core import FreeAbelian

        pres = FreeAbelian(d).presentation
    cells = [list(combinations(range(1, d + 1), k)) for k in range(d + 1)]
    index = [{c: i for i, c in enumerate(cs)} for cs in cells]
    bounds = {}
    for k in range(1, d + 1):
        rows = [[GroupRingElement() for _ in cells[k]] for _ in cells[k - 1]]
        for col, cube in enumerate(cells[k]):
            for pos, g in enumerate(cube):
                face = cube[:pos] + cube[pos + 1:]
                rows[index[k - 1][face]][col] = (-1) ** pos * (GroupRingElement.word((g,)) - 1)
        bounds[k] = tuple(tuple(r) for r in rows)
    cx = ChainComplexSpec(
        pres,
        tuple(len(c) for c in cells),
        bounds,
        name=f"cube{d}",
        acyclic_degrees=tuple(range(1, d + 1)),
    )
    if family is not None:
        cx.check(family)
    return cx


# ---------------------------------------------------------------------------
# fixture text format
#   ranks: 1 2 1
#   (2, 0, 0): 1*[] - 1*[1,2,-1]


_TERM = re.compile(r"([+-]?)\s*(\d+)\s*\*\s*\[([^\]]*)\]")


def format_complex(cx: ChainComplexSpec) -> str:
    lines = [f"generators: {cx.presentation.generator_count}"]
    lines.append("ranks: " + " ".join(str(r) for r in cx.ranks))
    if cx.acyclic_degrees:
        lines.append("acyclic: " + " ".join(str(n) for n in cx.acyclic_degrees))
    for d in sorted(cx.boundaries):
        for i, row in enumerate(cx.boundaries[d]):
            for k, e in enumerate(row):
                if not e:
                    continue
                terms = []
                for w, c in sorted(e.items(), key=lambda t: (len(t[0]), t[0])):
                    sign = "-" if c < 0 else "+"
                    terms.append(f"{sign} {abs(c)}*[{','.join(str(x) for x in w)}]")
                body = " ".join(terms)
                if body.startswith("+ "):
                    body = body[2:]
                lines.append(f"({d}, {i}, {k}): {body}")
    return "\n".join(lines) + "\n"


def parse_complex(text: str, presentation: Presentation | None = None) -> ChainComplexSpec:
    gens = presentation.generator_count if presentation else None
    ranks = None
    acyclic: tuple = ()
    entries: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("generators:"):
            gens = int(line.split(":", 1)[1])
        elif line.startswith("ranks:"):
            ranks = tuple(int(x) for x in line.split(":", 1)[1].split())
        elif line.startswith("acyclic:"):
            acyclic = tuple(int(x) for x in line.split(":", 1)[1].split())
        elif line.startswith("("):
            head, body = line.split(":", 1)
            d, i, k = (int(x) for x in head.strip("() ").split(","))
            terms: dict = {}
            pos = 0
            body = body.strip()
            for m in _TERM.finditer(body):
                if body[pos:m.start()].strip():
                    raise ValueError(f"cannot parse term near {body[pos:m.start()]!r}")
                pos = m.end()
                coeff = int(m.group(2)) * (-1 if m.group(1) == "-" else 1)
                word = tuple(int(x) for x in m.group(3).split(",") if x.strip())
                w = word_reduce(word, gens)
                terms[w] = terms.get(w, 0) + coeff
            if body[pos:].strip():
                raise ValueError(f"trailing text {body[pos:]!r}")
            entries[(d, i, k)] = GroupRingElement(terms)
        else:
            raise ValueError(f"unrecognized line {raw!r}")
    if ranks is None or gens is None:
        raise ValueError("fixture needs 'generators:' and 'ranks:' lines")
    bounds = {}
    for d in range(1, len(ranks)):
        rows = [[GroupRingElement() for _ in range(ranks[d])] for _ in range(ranks[d - 1])]
        for (dd, i, k), e in entries.items():
            if dd == d:
                rows[i][k] = e
        bounds[d] = tuple(tuple(r) for r in rows)
    for (d, i, k) in entries:
        if not (1 <= d < len(ranks) and i < ranks[d - 1] and k < ranks[d]):
            raise ValueError(f"entry ({d}, {i}, {k}) outside the declared ranks")
    pres = presentation or Presentation(gens)
    return ChainComplexSpec(pres, ranks, bounds, acyclic_degrees=acyclic)


# ---------------------------------------------------------------------------
# induction to a finite cover


def induce(cx: ChainComplexSpec, action: FiniteAction) -> list:
    """Integer boundary matrices ``[delta_1, delta_2, ...]`` of the cover."""
    if action.presentation.generator_count != cx.presentation.generator_count:
        raise ValueError("complex and action use different generating sets")
    N = action.degree
    perm_cache: dict = {}
    mats = []
    for d in range(1, cx.top_degree + 1):
        entries: dict = {}
        for j, row in enumerate(cx.boundary(d)):
            for k, e in enumerate(row):
                for w, coeff in e.items():
                    P = perm_cache.get(w)
                    if P is None:
                        P = perm_cache[w] = action.word_perm(w).tolist()
                    r0, c0 = j * N, k * N
                    for c in range(N):
                        key = (r0 + c, c0 + P[c])
                        entries[key] = entries.get(key, 0) + coeff
        mats.append(IntMatrix(cx.ranks[d - 1] * N, cx.ranks[d] * N, entries))
    return mats


def check_composition(induced: list) -> None:
    for d in range(len(induced) - 1):
        if not (induced[d] @ induced[d + 1]).is_zero():
            raise CompositionError(f"induced delta_{d + 1} o delta_{d + 2} != 0")


def cover_euler_characteristic(induced: list) -> int:
    dims = [induced[0].rows] + [m.cols for m in induced]
    return sum((-1) ** d * n for d, n in enumerate(dims))


@dataclass(frozen=True)
class TorsionReport:
    level: int
    index: int
    torsion: int
    betti: int
    bound: int | None = None
    factors: tuple = ()

    @property
    def log_torsion_over_index(self) -> float:
        return math.log(self.torsion) / self.index


def homology_torsion(induced: list, n: int, level: int = 0, index: int | None = None) -> TorsionReport:
    """Torsion order and Betti number of H_n of the chain complex ``induced``.

    The torsion of ker(delta_n)/im(delta_{n+1}) equals that of
    Z^{c_n}/im(delta_{n+1}), because Z^{c_n}/ker(delta_n) is free.
    """
    top = len(induced)
    if not 0 <= n <= top:
        raise ValueError(f"degree {n} outside 0..{top}")
    c_n = induced[0].rows if n == 0 else induced[n - 1].cols
    lower = induced[n - 1] if n >= 1 else None
    upper = induced[n] if n < top else IntMatrix(c_n, 0)
    if lower is not None and not (lower @ upper).is_zero():
        raise CompositionError(f"delta_{n} o delta_{n + 1} != 0")
    s_upper = snf(upper)
    rank_lower = snf(lower).rank if lower is not None else 0
    betti = c_n - rank_lower - s_upper.rank
    return TorsionReport(level, index if index is not None else induced[0].rows, s_upper.torsion, betti,
                         factors=s_upper.torsion_factors)


# ---------------------------------------------------------------------------
# Reidemeister-Schreier with a Folner transversal


@dataclass(frozen=True, eq=False)
class SubgroupPresentation:
    degree: int
    generator_count: int
    tree_edges: frozenset  # Schreier edges (coset, generator) in the spanning tree
    generators: tuple  # E: non-tree Schreier edges, in order
    trivial: frozenset  # indices into E (1-based) of E'
    relations: tuple  # words over E (signed 1-based indices)
    tree_words: tuple = field(repr=False, default=())

    @property
    def surviving(self) -> tuple:
        """1-based indices of E''."""
        return tuple(i for i in range(1, len(self.generators) + 1) if i not in self.trivial)

    def killed_relations(self) -> tuple:
        """Relations with E' set to 1, freely reduced."""
        out = []
        for r in self.relations:
            out.append(word_reduce(x for x in r if abs(x) not in self.trivial))
        return tuple(out)

    def relation_matrix(self, kill_trivial: bool = True) -> IntMatrix:
        """Abelianized relations as columns; rows are E'' (or all of E)."""
        rows = self.surviving if kill_trivial else tuple(range(1, len(self.generators) + 1))
        pos = {g: i for i, g in enumerate(rows)}
        rels = self.killed_relations() if kill_trivial else self.relations
        cols = []
        for r in rels:
            col: dict = {}
            for x in r:
                i = pos[abs(x)]
                col[i] = col.get(i, 0) + (1 if x > 0 else -1)
            cols.append({i: v for i, v in col.items() if v})
        return IntMatrix.from_columns(len(rows), cols) if cols else IntMatrix(len(rows), 0)

    def trivial_relation_matrix(self) -> IntMatrix:
        """All of E as rows; relations plus a unit column per E' generator."""
        M = self.relation_matrix(kill_trivial=False)
        pos = {g: g - 1 for g in range(1, len(self.generators) + 1)}
        extra = IntMatrix.from_columns(M.rows, [{pos[g]: 1} for g in sorted(self.trivial)])
        if extra.cols == 0:
            return M
        return M.hstack(extra)


def _spanning_tree(t: Transversal, action: FiniteAction, family: GroupFamily):
    """BFS spanning tree of the Cayley graph induced on the transversal.

    Returns (tree edge set, path word per coset).
    """
    index = {g: c for c, g in enumerate(t.elements)}
    words: list = [None] * action.degree
    words[0] = ()
    tree = set()
    queue = deque([0])
    letters = family.presentation.letters
    while queue:
        c = queue.popleft()
        x = t.elements[c]
        for s in letters:
            d = index.get(family.left_letter(s, x))
            if d is None or words[d] is not None:
                continue
            words[d] = (s,) + words[c]
            queue.append(d)
            tree.add((c, s) if s > 0 else (d, -s))
    if any(w is None for w in words):
        raise ValueError("transversal is not connected; apply connect_repair first")
    return frozenset(tree), tuple(words)


def reidemeister_schreier(p: Presentation, action: FiniteAction, t: Transversal, family: GroupFamily) -> SubgroupPresentation:
    if not t.is_connected:
        raise ValueError("transversal is not connected; apply connect_repair first")
    tree, words = _spanning_tree(t, action, family)
    N, S = action.degree, p.generator_count
    members = {g: c for c, g in enumerate(t.elements)}
    gens = []
    gen_index = {}
    trivial = set()
    for c in range(N):
        for j in range(1, S + 1):
            if (c, j) in tree:
                continue
            gens.append((c, j))
            gen_index[(c, j)] = len(gens)
            if family.left_letter(j, t.elements[c]) in members:
                trivial.add(len(gens))
    rels = []
    for r in p.relators:
        for c in range(N):
            cur = c
            out = []
            for y in reversed(r):
                j = abs(y)
                if y > 0:
                    g = gen_index.get((cur, j))
                    if g:
                        out.append(g)
                    cur = int(action.perms[j - 1][cur])
                else:
                    cur = int(action.inverses[j - 1][cur])
                    g = gen_index.get((cur, j))
                    if g:
                        out.append(-g)
            if cur != c:
                raise ValueError(f"relator {r} does not close at coset {c}")
            rels.append(word_reduce(reversed(out)))
    return SubgroupPresentation(N, S, tree, tuple(gens), frozenset(trivial), tuple(rels), words)


def torsion_bound_n1(sp: SubgroupPresentation, k: int) -> int:
    return max(k, 1) ** len(sp.surviving) if k else 1


def rs_torsion(sp: SubgroupPresentation, kill_trivial: bool = True) -> SnfResult:
    return snf(sp.relation_matrix(kill_trivial))


# ---------------------------------------------------------------------------
# relative bound for general degree


@dataclass(frozen=True)
class RelativeBound:
    m: int
    bound: int
    base: int
    interior: int  # |J|: transversal elements whose translated closed domain stays inside
    boundary_cosets: tuple = field(repr=False, default=())

    def __iter__(self):
        return iter((self.m, self.bound))


def closure_support(cx: ChainComplexSpec) -> list:
    """Words ``w`` such that the closed fundamental domain meets the cells ``w e``."""
    cells = {(d, k, ()) for d in range(cx.top_degree + 1) for k in range(cx.ranks[d])}
    todo = list(cells)
    while todo:
        d, k, w = todo.pop()
        if d == 0:
            continue
        for j, row in enumerate(cx.boundary(d)):
            for v, _ in row[k].items():
                cell = (d - 1, j, word_mul(w, v))
                if cell not in cells:
                    cells.add(cell)
                    todo.append(cell)
    return sorted({w for _, _, w in cells}, key=lambda w: (len(w), w))


def boundary_cosets(cx: ChainComplexSpec, t: Transversal, family: GroupFamily) -> tuple:
    """Cosets whose representative x has some closure word w with w^-1 x outside the transversal."""
    support = []
    seen = set()
    for w in closure_support(cx):
        g = family.normal_form(word_inverse(w))
        if g not in seen:
            seen.add(g)
            support.append(g)
    members = set(t.elements)
    out = []
    for c, x in enumerate(t.elements):
        if any(family.mul(g, x) not in members for g in support):
            out.append(c)
    return tuple(out)


def relative_bound(cx: ChainComplexSpec, action: FiniteAction, t: Transversal, n: int, family: GroupFamily) -> RelativeBound:
    if not 0 <= n <= cx.top_degree - 1:
        raise ValueError(f"degree {n} outside 0..{cx.top_degree - 1}")
    bcos = boundary_cosets(cx, t, family)
    m = len(bcos) * cx.ranks[n]
    base = 0
    upper = cx.boundary(n + 1)
    for k in range(cx.ranks[n + 1]):
        norm = sum(sum(abs(v) for v in upper[j][k].evaluate(family.normal_form).values()) for j in range(cx.ranks[n]))
        base = max(base, norm)
    bound = base**m if base else 1
    return RelativeBound(m, bound, base, action.degree - len(bcos), bcos)


def relative_torsion(cx: ChainComplexSpec, induced: list, rb: RelativeBound, n: int, N: int) -> int:
    """Torsion of W/W_0: the cokernel of delta_{n+1} projected onto the boundary n-cells."""
    upper = induced[n]
    keep = [k * N + c for k in range(cx.ranks[n]) for c in rb.boundary_cosets]
    return snf(upper.select_rows(keep)).torsion
