"""Sparse arbitrary-precision integer matrices and Smith normal form."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

DENSE_THRESHOLD = 0.3


class IntMatrix:
    """``rows x cols`` integer matrix with dictionary-of-keys storage."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries=None):
        if rows < 0 or cols < 0:
            raise ValueError("negative dimension")
        self.rows = rows
        self.cols = cols
        clean = {}
        for (i, j), v in (entries or {}).items():
            if not (0 <= i < rows and 0 <= j < cols):
                raise ValueError(f"entry ({i}, {j}) outside {rows}x{cols}")
            v = int(v)
            if v:
                clean[(i, j)] = v
        self.entries = clean

    @classmethod
    def from_dense(cls, data: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        data = [list(r) for r in data]
        m = len(data)
        n = len(data[0]) if data else (cols or 0)
        return cls(m, n, {(i, j): v for i, r in enumerate(data) for j, v in enumerate(r) if v})

    @classmethod
    def from_columns(cls, m: int, columns: Iterable[dict]) -> "IntMatrix":
        entries = {}
        n = 0
        for j, col in enumerate(columns):
            n = j + 1
            for i, v in col.items():
                entries[(i, j)] = entries.get((i, j), 0) + v
        return cls(m, n, entries)

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, {(i, i): 1 for i in range(n)})

    def to_dense(self) -> list:
        out = [[0] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        return self.entries.get(ij, 0)

    def __eq__(self, other):
        return isinstance(other, IntMatrix) and self.shape == other.shape and self.entries == other.entries

    def __repr__(self):
        return f"IntMatrix({self.rows}x{self.cols}, nnz={self.nnz})"

    def transpose(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows, {(j, i): v for (i, j), v in self.entries.items()})

    def row_dicts(self) -> dict:
        rows: dict = {}
        for (i, j), v in self.entries.items():
            rows.setdefault(i, {})[j] = v
        return rows

    def column_dicts(self) -> dict:
        cols: dict = {}
        for (i, j), v in self.entries.items():
            cols.setdefault(j, {})[i] = v
        return cols

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        right = other.row_dicts()
        out: dict = {}
        for (i, k), a in self.entries.items():
            for j, b in right.get(k, {}).items():
                out[(i, j)] = out.get((i, j), 0) + a * b
        return IntMatrix(self.rows, other.cols, out)

    def is_zero(self) -> bool:
        return not self.entries

    def column_l1_norms(self) -> list:
        norms = [0] * self.cols
        for (_, j), v in self.entries.items():
            norms[j] += abs(v)
        return norms

    def select_rows(self, keep: Sequence[int]) -> "IntMatrix":
        pos = {r: k for k, r in enumerate(keep)}
        return IntMatrix(len(keep), self.cols, {(pos[i], j): v for (i, j), v in self.entries.items() if i in pos})

    def hstack(self, other: "IntMatrix") -> "IntMatrix":
        if self.rows != other.rows:
            raise ValueError("row mismatch")
        ent = dict(self.entries)
        ent.update({(i, j + self.cols): v for (i, j), v in other.entries.items()})
        return IntMatrix(self.rows, self.cols + other.cols, ent)

    # plain-text exchange format: "m l" then "row col value" per nonzero entry
    def dumps(self) -> str:
        lines = [f"{self.rows} {self.cols}"]
        lines += [f"{i} {j} {v}" for (i, j), v in sorted(self.entries.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "IntMatrix":
        lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines or len(lines[0]) != 2:
            raise ValueError("matrix text must start with 'm l'")
        m, n = int(lines[0][0]), int(lines[0][1])
        entries = {}
        for parts in lines[1:]:
            if len(parts) != 3:
                raise ValueError(f"bad entry line {' '.join(parts)!r}")
            i, j, v = (int(x) for x in parts)
            entries[(i, j)] = entries.get((i, j), 0) + v
        return cls(m, n, entries)


def write_matrix(M: IntMatrix, path) -> None:
    with open(path, "w") as fh:
        fh.write(M.dumps())


def read_matrix(path) -> IntMatrix:
    with open(path) as fh:
        return IntMatrix.loads(fh.read())


@dataclass(frozen=True)
class SnfResult:
    invariant_factors: tuple
    rows: int
    cols: int

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @property
    def torsion(self) -> int:
        return math.prod(self.invariant_factors)

    @property
    def cokernel_free_rank(self) -> int:
        return self.rows - self.rank

    @property
    def torsion_factors(self) -> tuple:
        return tuple(d for d in self.invariant_factors if d > 1)


def _normalize_diagonal(diag: list) -> tuple:
    """Turn nonzero diagonal entries into the divisibility chain with the same cokernel."""
    ones = sum(1 for d in diag if abs(d) == 1)
    rest = sorted(abs(d) for d in diag if abs(d) != 1)
    for i in range(len(rest)):
        for j in range(i + 1, len(rest)):
            a, b = rest[i], rest[j]
            if b % a:
                g = math.gcd(a, b)
                rest[i], rest[j] = g, a // g * b
    rest.sort()
    head = [1] * ones
    # gcd steps can create new units
    return tuple(sorted(head + rest))


def _eliminate_units(rows: dict, cols: dict) -> int:
    """Pivot on +-1 entries until none remain; returns the number of pivots.

    Pivot choice: shortest row holding a unit, then the shortest column among
    its unit entries.
    """
    count = 0
    while True:
        best = None
        for r, row in rows.items():
            lr = len(row)
            if best is not None and lr >= best[0]:
                continue
            for c, v in row.items():
                if v == 1 or v == -1:
                    cost = (lr, len(cols[c]))
                    if best is None or cost < best[:2]:
                        best = (lr, len(cols[c]), r, c)
        if best is None:
            return count
        _, _, r, c = best
        prow = rows.pop(r)
        p = prow.pop(c)
        for j in prow:
            cols[j].discard(r)
        others = cols.pop(c)
        others.discard(r)
        for i in others:
            row = rows[i]
            f = row.pop(c) * p
            for j, v in prow.items():
                nv = row.get(j, 0) - f * v
                if nv:
                    if j not in row:
                        cols[j].add(i)
                    row[j] = nv
                elif j in row:
                    del row[j]
                    cols[j].discard(i)
            if not row:
                del rows[i]
        for j in [j for j, s in cols.items() if not s]:
            del cols[j]
        count += 1


def _diagonalize_dense(A: list) -> list:
    """Diagonal entries (nonzero) after unimodular row/column operations; mutates A."""
    m = len(A)
    n = len(A[0]) if m else 0
    diag = []
    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            Ai = A[i]
            for j in range(t, n):
                v = Ai[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        A[t], A[i] = A[i], A[t]
        for row in A:
            row[t], row[j] = row[j], row[t]
        while True:
            p = A[t][t]
            dirty = False
            for i in range(t + 1, m):
                v = A[i][t]
                if v:
                    q = v // p
                    Ai, At = A[i], A[t]
                    for j in range(t, n):
                        if At[j]:
                            Ai[j] -= q * At[j]
                    if Ai[t]:
                        dirty = True
            At = A[t]
            for j in range(t + 1, n):
                v = At[j]
                if v:
                    q = v // p
                    for row in A:
                        if row[t]:
                            row[j] -= q * row[t]
                    if At[j]:
                        dirty = True
            if not dirty:
                break
            # move the smallest remaining entry of row/column t to the pivot
            best = (abs(p), t, t)
            for i in range(t + 1, m):
                if A[i][t] and abs(A[i][t]) < best[0]:
                    best = (abs(A[i][t]), i, t)
            for j in range(t + 1, n):
                if A[t][j] and abs(A[t][j]) < best[0]:
                    best = (abs(A[t][j]), t, j)
            _, i, j = best
            if i != t:
                A[t], A[i] = A[i], A[t]
            if j != t:
                for row in A:
                    row[t], row[j] = row[j], row[t]
        diag.append(A[t][t])
        t += 1
    return diag


def _diagonalize_sparse(rows: dict, cols: dict, dense_threshold: float) -> list:
    """Min-abs pivoting on the residual; switches to dense storage once fill-in is high."""
    diag = []
    while rows:
        nr, nc = len(rows), len(cols)
        nnz = sum(len(r) for r in rows.values())
        if nnz > dense_threshold * nr * nc:
            ri = {r: k for k, r in enumerate(rows)}
            ci = {c: k for k, c in enumerate(cols)}
            A = [[0] * nc for _ in range(nr)]
            for r, row in rows.items():
                for c, v in row.items():
                    A[ri[r]][ci[c]] = v
            return diag + _diagonalize_dense(A)
        best = None
        for r, row in rows.items():
            for c, v in row.items():
                if best is None or abs(v) < best[0]:
                    best = (abs(v), r, c)
        _, r, c = best
        while True:
            p = rows[r][c]
            dirty = False
            for i in list(cols[c]):
                if i == r:
                    continue
                row = rows[i]
                q = row[c] // p
                for j, v in rows[r].items():
                    nv = row.get(j, 0) - q * v
                    if nv:
                        if j not in row:
                            cols[j].add(i)
                        row[j] = nv
                    elif j in row:
                        del row[j]
                        cols[j].discard(i)
                if c in row:
                    dirty = True
                if not row:
                    del rows[i]
            prow = rows[r]
            for j in [j for j in prow if j != c]:
                q = prow[j] // p
                for i in list(cols[c]):
                    row = rows[i]
                    nv = row.get(j, 0) - q * row[c]
                    if nv:
                        if j not in row:
                            cols[j].add(i)
                        row[j] = nv
                    elif j in row:
                        del row[j]
                        cols[j].discard(i)
                if j in prow:
                    dirty = True
            for j in [j for j, s in cols.items() if not s]:
                del cols[j]
            if not dirty:
                break
            cand = [(abs(v), r, j) for j, v in rows[r].items()] + [(abs(rows[i][c]), i, c) for i in cols[c]]
            _, r, c = min(cand)
        diag.append(rows[r][c])
        del rows[r]
        cols.pop(c)
    return diag


def snf(M: IntMatrix, dense_threshold: float = DENSE_THRESHOLD) -> SnfResult:
    """Invariant factors of ``M``; the cokernel is Z^m/col-span = Z^(m-r) + sum Z/d_j."""
    rows = M.row_dicts()
    cols: dict = {}
    for (i, j) in M.entries:
        cols.setdefault(j, set()).add(i)
    units = _eliminate_units(rows, cols)
    rest = _diagonalize_sparse(rows, cols, dense_threshold)
    return SnfResult((1,) * units + _normalize_diagonal(rest) if rest else (1,) * units, M.rows, M.cols)


def snf_dense(M: IntMatrix) -> SnfResult:
    """Same contract as :func:`snf` using only the dense min-abs routine."""
    diag = _diagonalize_dense(M.to_dense()) if M.rows and M.cols else []
    return SnfResult(_normalize_diagonal(diag), M.rows, M.cols)


def bareiss_det(A: Sequence[Sequence[int]]) -> int:
    """Fraction-free determinant."""
    A = [list(r) for r in A]
    n = len(A)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def minor_gcd(M: IntMatrix, r: int) -> int:
    """gcd of all r x r minors (exponential cost; oracle use only)."""
    if r < 0 or r > min(M.rows, M.cols):
        raise ValueError(f"minor size {r} exceeds dimensions {M.shape}")
    if r == 0:
        return 1
    A = M.to_dense()
    g = 0
    for rs in itertools.combinations(range(M.rows), r):
        for cs in itertools.combinations(range(M.cols), r):
            g = math.gcd(g, bareiss_det([[A[i][j] for j in cs] for i in rs]))
            if g == 1:
                return 1
    return g


def rank(M: IntMatrix) -> int:
    return snf(M).rank


def torsion_bound(M: IntMatrix) -> int:
    """``k ** m`` with k the largest column l1-norm; a zero matrix gives 1."""
    k = max(M.column_l1_norms(), default=0)
    if k == 0:
        return 1
    return k**M.rows


def torsion_bound_exponent(M: IntMatrix) -> tuple:
    """(k, m) such that the bound is k**m, for reporting without materializing it."""
    return max(M.column_l1_norms(), default=0), M.rows
