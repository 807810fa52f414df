"""Unbounded torsion growth over the lamplighter group, computed in finite quotients.

Q is the lamplighter C_p wr Z, P_j (j >= 1) the lamps supported on the window
[-(j-1), j-1], P_0 = 1 and P = all lamps.  The tower Q_i is the kernel of the
map onto C_p wr C_{2^i} (lamps folded mod 2^i, shift mod 2^i).  Everything is
evaluated in those finite wreath products; the infinite module W is never built.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .exact_linalg import IntMatrix, snf
from .group_core import Lamplighter, Word

DEFAULT_BIGNUM_BITS = 1 << 16


class PrecisionLoss(ValueError):
    """The finite quotient is too small: P_i R = P R."""


class BudgetExceeded(ValueError):
    pass


def bignum_budget() -> int:
    return int(os.environ.get("TORSION_GROWTH_BIGNUM_BITS", DEFAULT_BIGNUM_BITS))


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, math.isqrt(p) + 1))


@dataclass(frozen=True)
class LamplighterStructure:
    p: int = 2

    def __post_init__(self):
        if not _is_prime(self.p):
            raise ValueError("p must be prime")

    def window(self, j: int) -> range:
        """Lamp positions of P_j."""
        return range(0) if j <= 0 else range(-(j - 1), j)

    def quotient_order(self, m: int) -> int:
        return self.p**m * m

    def subgroup_image_order(self, j: int, m: int) -> int:
        """Order of the image of P_j in C_p wr C_m (distinct folded positions)."""
        return self.p ** len({x % m for x in self.window(j)})

    def tower_length(self, i: int) -> int:
        return 2**i

    def index_in_quotient(self, j: int | None, m: int) -> int:
        """|Q : P_j R| for R the kernel onto C_p wr C_m; ``j=None`` means P."""
        if j is None:
            return m
        return self.quotient_order(m) // self.subgroup_image_order(j, m)


def indices_at_quotient(ls: LamplighterStructure, i: int, m: int) -> tuple:
    """(|Q : P_i R|, |Q : P R|) for R the kernel onto C_p wr C_m."""
    if m < 1:
        raise ValueError("quotient length must be >= 1")
    a, b = ls.index_in_quotient(i, m), ls.index_in_quotient(None, m)
    if a <= b:
        raise PrecisionLoss(f"P_{i} R = P R in C_{ls.p} wr C_{m}")
    return a, b


@dataclass(frozen=True)
class ModuleSpec:
    level: int
    modulus: int
    quotient_length: int
    p: int = 2

    def __post_init__(self):
        if self.modulus < 2:
            raise ValueError("modulus must be >= 2")


def module_torsion_exact(ms: ModuleSpec, indices: tuple) -> int:
    """n^(|Q:P_iR| - |Q:PR|): order of Y_i' modulo Y_i' meet Y_i r."""
    a, b = indices
    if a - b <= 0:
        raise PrecisionLoss("exponent must be positive")
    value = ms.modulus ** (a - b)
    assert value >= ms.modulus
    return value


# ---------------------------------------------------------------------------
# explicit finite permutation module (independent check of the formula)


def _wreath_elements(p: int, m: int):
    import itertools

    return [(lamps, s) for s in range(m) for lamps in itertools.product(range(p), repeat=m)]


def _wreath_mul(p: int, m: int, g, h):
    lamps = list(g[0])
    s = g[1]
    for pos, v in enumerate(h[0]):
        q = (pos + s) % m
        lamps[q] = (lamps[q] + v) % p
    return (tuple(lamps), (s + h[1]) % m)


def _lamp(p: int, m: int, pos: int):
    v = [0] * m
    v[pos % m] = 1
    return (tuple(v), 0)


def _subgroup(p: int, m: int, positions: Iterable[int]) -> list:
    """Lamp subgroup generated by the given positions (closure in the finite group)."""
    ident = ((0,) * m, 0)
    elems = {ident}
    gens = [_lamp(p, m, x) for x in positions]
    todo = [ident]
    while todo:
        g = todo.pop()
        for x in gens:
            h = _wreath_mul(p, m, x, g)
            if h not in elems:
                elems.add(h)
                todo.append(h)
    return sorted(elems)


def right_cosets(p: int, m: int, positions) -> dict:
    """Map each element of C_p wr C_m to the index of its right coset of the lamp subgroup."""
    sub = _subgroup(p, m, positions)
    coset = {}
    k = 0
    for g in _wreath_elements(p, m):
        if g in coset:
            continue
        for h in sub:
            coset[_wreath_mul(p, m, h, g)] = k
        k += 1
    return coset


def augmentation_generators(ms: ModuleSpec) -> tuple:
    """Vectors P_i x q - P_i q (x a lamp generator, q in the quotient) over Z^{P_i R \\ Q}.

    Returns (number of cosets, list of sparse vectors).
    """
    ls = LamplighterStructure(ms.p)
    p, m = ms.p, ms.quotient_length
    coset = right_cosets(p, m, ls.window(ms.level))
    size = max(coset.values()) + 1
    vecs = []
    seen = set()
    for q in _wreath_elements(p, m):
        for pos in range(m):
            a = coset[_wreath_mul(p, m, _lamp(p, m, pos), q)]
            b = coset[q]
            if a == b or (a, b) in seen:
                continue
            seen.add((a, b))
            vecs.append({a: 1, b: -1})
    return size, vecs


def module_torsion_oracle(ms: ModuleSpec) -> int:
    """|Y_i' / (Y_i' meet Y_i r)| by Smith normal form of the explicit module.

    The image of Y_i' in (Z/n)[P_i R \\ Q] is the span S of the augmentation
    generators; |S| = n^|X| / |Z^X / (span + n Z^X)|.
    """
    size, vecs = augmentation_generators(ms)
    n = ms.modulus
    cols = vecs + [{k: n} for k in range(size)]
    quotient = snf(IntMatrix.from_columns(size, cols)).torsion
    order, rem = divmod(n**size, quotient)
    assert rem == 0
    return order


def augmentation_row_sums(ms: ModuleSpec) -> list:
    """Coordinate sums of the p-action vectors; each is 0 mod n in the augmentation kernel."""
    _, vecs = augmentation_generators(ms)
    return [sum(v.values()) for v in vecs]


def separation_level(ls: LamplighterStructure, j: int, elements: list, max_level: int = 8):
    """Least tower level i at which the cosets P_j Q_i g stay pairwise distinct.

    ``elements`` are lamplighter normal forms with pairwise distinct P_j-cosets
    in the infinite group.  Returns ``None`` if no level up to ``max_level`` works.
    """
    window = set(ls.window(j))
    fam = Lamplighter(ls.p, 0)

    def same_coset_infinite(g, h):
        d = fam.mul(g, _inverse(fam, h))
        return d[1] == 0 and all(pos in window for pos, _ in d[0])

    for a in range(len(elements)):
        for b in range(a + 1, len(elements)):
            if same_coset_infinite(elements[a], elements[b]):
                raise ValueError("elements must lie in distinct P_j cosets")
    for i in range(max_level + 1):
        L = ls.tower_length(i)
        folded_window = {x % L for x in window}

        def key(g):
            lamps = [0] * L
            for pos, v in g[0]:
                lamps[pos % L] = (lamps[pos % L] + v) % ls.p
            # right coset P_j g: forget lamps at window positions (after the shift acts)
            for x in folded_window:
                lamps[x] = 0
            return (tuple(lamps), g[1] % L)

        keys = {key(g) for g in elements}
        if len(keys) == len(elements):
            return i
    return None


def _inverse(fam: Lamplighter, g):
    lamps, s = g
    inv = tuple(sorted(((pos - s), (-v) % fam.p) for pos, v in lamps))
    return (inv, -s)


# ---------------------------------------------------------------------------
# choice of moduli and the torsion certificate


@dataclass(frozen=True)
class LevelCertificate:
    level: int
    quotient_length: int
    quotient_order: int  # |Q/Q_i|
    module_index_bound: int  # divisor bound for |W/W_i|
    index_bound: int  # |Q/Q_i| * module_index_bound >= [G : M_i]
    f_value: int
    modulus: int
    exponent: int  # |Q:P_iQ_i| - |Q:PQ_i|
    torsion_lower_bound: int
    index_factors: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "quotient_length": self.quotient_length,
            "quotient_order": self.quotient_order,
            "module_index_bound": str(self.module_index_bound),
            "index_bound": str(self.index_bound),
            "f_value": str(self.f_value),
            "modulus": str(self.modulus),
            "exponent": self.exponent,
            "torsion_lower_bound": str(self.torsion_lower_bound),
            "index_factors": {str(k): v for k, v in self.index_factors.items()},
            "exceeds_f": self.torsion_lower_bound > self.f_value,
        }


GROWTH_FUNCTIONS: dict = {
    "identity": lambda x: x,
    "square": lambda x: x * x,
    "constant": lambda x: 1,
    "cube": lambda x: x**3,
}


def _bits(n: int, e: int) -> int:
    return e * max(n.bit_length(), 1)


def choose_moduli(
    f: Callable[[int], int],
    depth: int,
    p: int = 2,
    budget_bits: int | None = None,
) -> list:
    """Minimal strictly increasing moduli n_0 < n_1 < ... with certificates.

    n_i is the least integer >= 2, > n_{i-1} and > f(|Q/Q_i| * B_i), where
    B_i = prod_{j<i} n_j^{|Q : P_j Q_{i-1}|} bounds |W/W_i|.
    """
    budget = bignum_budget() if budget_bits is None else budget_bits
    ls = LamplighterStructure(p)
    moduli: list = []
    certs: list = []
    for i in range(depth):
        L = ls.tower_length(i)
        q_order = ls.quotient_order(L)
        bound = 1
        factors = {}
        if i > 0:
            prev = ls.tower_length(i - 1)
            for j, nj in enumerate(moduli):
                e = ls.index_in_quotient(j, prev)
                factors[j] = e
                if _bits(nj, e) > budget:
                    raise BudgetExceeded(f"level {i}: n_{j}^{e} exceeds {budget} bits")
                bound *= nj**e
                if bound.bit_length() > budget:
                    raise BudgetExceeded(f"level {i}: index bound exceeds {budget} bits")
        index_bound = q_order * bound
        fv = int(f(index_bound))
        n = max(2, fv + 1, (moduli[-1] + 1) if moduli else 2)
        a, b = indices_at_quotient(ls, i, L)
        if _bits(n, a - b) > budget:
            raise BudgetExceeded(f"level {i}: torsion bound n^{a - b} exceeds {budget} bits")
        torsion = module_torsion_exact(ModuleSpec(i, n, L, p), (a, b))
        moduli.append(n)
        certs.append(LevelCertificate(i, L, q_order, bound, index_bound, fv, n, a - b, torsion, factors))
    return certs


def m1_torsion_report(depth: int, f: Callable[[int], int] = GROWTH_FUNCTIONS["identity"], p: int = 2,
                      budget_bits: int | None = None) -> list:
    """Rows (level, index bound, torsion lower bound) for T_1(M_i) with M_i = Q_i x| W_i.

    H_1(M_i) contains W_i / W_i q_i, whose torsion is at least n_i^exponent.
    """
    if depth <= 0:
        return []
    return [(c.level, c.index_bound, c.torsion_lower_bound) for c in choose_moduli(f, depth, p, budget_bits)]


def _window_bounds(w: range):
    return [w.start, w.stop - 1] if len(w) else None


def certificate_json(certs: list, p: int, f_name: str) -> dict:
    ls = LamplighterStructure(p)
    return {
        "p": p,
        "growth_function": f_name,
        "subgroup_windows": {str(c.level): _window_bounds(ls.window(c.level)) for c in certs},
        "levels": [c.as_dict() for c in certs],
    }
