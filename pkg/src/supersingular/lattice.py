"""Exact integer lattices given by Gram matrices.

Everything here works on Python integers and :class:`fractions.Fraction`;
no floating point is used anywhere, so 22x22 forms with large entries are
handled without overflow.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Callable, Iterable, Iterator, Sequence

from .errors import PreconditionError

Vector = tuple  # tuple[int, ...]


@dataclass(frozen=True)
class IntLattice:
    """A free Z-module with an integral symmetric bilinear form.

    ``gram`` is stored as a tuple of tuples so lattices are hashable and can
    key caches.
    """

    gram: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(g) for g in row) for row in self.gram)
        n = len(rows)
        for i, row in enumerate(rows):
            if len(row) != n:
                raise PreconditionError(f"Gram row {i} has length {len(row)}, expected {n}")
        for i in range(n):
            for j in range(i):
                if rows[i][j] != rows[j][i]:
                    raise PreconditionError(f"Gram matrix is not symmetric at ({i}, {j})")
        object.__setattr__(self, "gram", rows)

    @property
    def rank(self) -> int:
        return len(self.gram)

    @cached_property
    def is_even(self) -> bool:
        return all(self.gram[i][i] % 2 == 0 for i in range(self.rank))

    @cached_property
    def det(self) -> int:
        return determinant(self)

    def basis_vector(self, i: int) -> Vector:
        return tuple(1 if j == i else 0 for j in range(self.rank))

    def zero(self) -> Vector:
        return (0,) * self.rank

    def norm(self, x: Sequence[int]) -> int:
        return pairing(self, x, x)

    def to_json(self) -> dict:
        return lattice_to_json(self)

    def __repr__(self):
        return f"IntLattice(rank={self.rank})"


def _check_vec(L: IntLattice, x: Sequence[int], name: str = "x") -> None:
    if len(x) != L.rank:
        raise PreconditionError(
            f"vector {name} has length {len(x)}, lattice has rank {L.rank}"
        )


def pairing(L: IntLattice, x: Sequence[int], y: Sequence[int]) -> int:
    """Evaluate ``x^T G y``."""
    _check_vec(L, x, "x")
    _check_vec(L, y, "y")
    total = 0
    for xi, row in zip(x, L.gram):
        if xi:
            total += xi * sum(g * yj for g, yj in zip(row, y) if g and yj)
    return total


def pairing_row(L: IntLattice, x: Sequence[int]) -> Vector:
    """The vector of pairings of ``x`` with every basis vector."""
    _check_vec(L, x)
    n = L.rank
    return tuple(sum(x[i] * L.gram[i][j] for i in range(n) if x[i]) for j in range(n))


# ---------------------------------------------------------------------------
# determinant / signature


def bareiss_determinant(matrix: Sequence[Sequence[int]]) -> int:
    """Fraction-free Gaussian elimination (Bareiss) with row pivoting."""
    a = [list(map(int, row)) for row in matrix]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]


def determinant(L: IntLattice) -> int:
    return bareiss_determinant(L.gram)


def _symmetric_diagonal(gram: Sequence[Sequence[int]]) -> list:
    """Diagonal of a rational congruence diagonalisation ``P^T G P``.

    Zero pivots are handled by swapping in a later nonzero diagonal entry, or
    failing that by replacing ``e_k`` with ``e_k + e_j`` for an ``a_kj != 0``.
    Returns ``None`` when the form is degenerate.
    """
    a = [[Fraction(g) for g in row] for row in gram]
    n = len(a)
    diag = []
    for k in range(n):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][i] != 0), None)
            if swap is not None:
                a[k], a[swap] = a[swap], a[k]
                for row in a:
                    row[k], row[swap] = row[swap], row[k]
            else:
                j = next((j for j in range(k + 1, n) if a[k][j] != 0), None)
                if j is None:
                    return None
                # e_k <- e_k + e_j : new a_kk = a_kk + 2 a_kj + a_jj = 2 a_kj
                for i in range(n):
                    a[k][i] += a[j][i]
                for i in range(n):
                    a[i][k] += a[i][j]
        pivot = a[k][k]
        diag.append(pivot)
        for i in range(k + 1, n):
            f = a[i][k] / pivot
            if f:
                for j in range(k, n):
                    a[i][j] -= f * a[k][j]
        for i in range(k + 1, n):
            a[k][i] = Fraction(0)
    return diag


def signature(L: IntLattice) -> tuple:
    """Return ``(n_plus, n_minus)`` of a nondegenerate lattice."""
    diag = _symmetric_diagonal(L.gram)
    if diag is None:
        raise PreconditionError("signature is undefined for a degenerate form")
    plus = sum(1 for d in diag if d > 0)
    return plus, len(diag) - plus


# ---------------------------------------------------------------------------
# constructions


def rescale(L: IntLattice, n: int) -> IntLattice:
    """``L(n)``: multiply the form by ``n``."""
    if n == 0:
        raise PreconditionError("cannot rescale a lattice by 0")
    return IntLattice(tuple(tuple(n * g for g in row) for row in L.gram))


def direct_sum(*lattices: IntLattice) -> IntLattice:
    size = sum(L.rank for L in lattices)
    rows = []
    offset = 0
    for L in lattices:
        for row in L.gram:
            rows.append((0,) * offset + tuple(row) + (0,) * (size - offset - L.rank))
        offset += L.rank
    return IntLattice(tuple(rows))


def diagonal_lattice(entries: Iterable[int]) -> IntLattice:
    entries = list(entries)
    n = len(entries)
    return IntLattice(tuple(tuple(entries[i] if i == j else 0 for j in range(n)) for i in range(n)))


def hyperbolic_plane(n: int = 1) -> IntLattice:
    """``U(n)`` with basis ``f1, f2``, ``f1^2 = f2^2 = 0``, ``f1.f2 = n``."""
    return IntLattice(((0, n), (n, 0)))


def _cartan(edges: Iterable[tuple], rank: int) -> IntLattice:
    g = [[2 if i == j else 0 for j in range(rank)] for i in range(rank)]
    for i, j in edges:
        g[i][j] = g[j][i] = -1
    return IntLattice(tuple(map(tuple, g)))


def root_lattice_d4() -> IntLattice:
    return _cartan([(0, 1), (1, 2), (1, 3)], 4)


def root_lattice_e8() -> IntLattice:
    # Bourbaki labelling: chain 1-3-4-5-6-7-8 with 2 attached to 4.
    return _cartan([(0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 3)], 8)


ZERO_LATTICE = IntLattice(())


# ---------------------------------------------------------------------------
# vectors


def content(x: Sequence[int]) -> int:
    return reduce(math.gcd, (abs(int(c)) for c in x), 0)


def is_primitive(x: Sequence[int]) -> bool:
    if not any(x):
        raise PreconditionError("the zero vector has no primitivity")
    return content(x) == 1


def divides_pairing(L: IntLattice, x: Sequence[int], m: int) -> bool:
    """True iff ``m`` divides ``x . b`` for every basis vector ``b``."""
    if m <= 0:
        raise PreconditionError("m must be positive")
    return all(c % m == 0 for c in pairing_row(L, x))


def add(x: Sequence[int], y: Sequence[int]) -> Vector:
    return tuple(a + b for a, b in zip(x, y))


def scale(k: int, x: Sequence[int]) -> Vector:
    return tuple(k * a for a in x)


def height(x: Sequence[int]) -> int:
    return max((abs(c) for c in x), default=0)


# ---------------------------------------------------------------------------
# Hermite normal form and overlattices


def hermite_normal_form(rows: Sequence[Sequence[int]]) -> list:
    """Row-style HNF: upper echelon, positive pivots, reduced above pivots.

    Zero rows are dropped, so the result is a basis of the row lattice.
    """
    a = [list(map(int, r)) for r in rows if any(r)]
    if not a:
        return []
    ncols = len(a[0])
    out = []
    for col in range(ncols):
        nonzero = [r for r in a if r[col] != 0]
        rest = [r for r in a if r[col] == 0]
        if not nonzero:
            continue
        # Euclid on the column until one row survives.
        while len(nonzero) > 1:
            nonzero.sort(key=lambda r: abs(r[col]))
            piv = nonzero[0]
            nxt = [piv]
            for r in nonzero[1:]:
                q = r[col] // piv[col]
                r = [ri - q * pi for ri, pi in zip(r, piv)]
                (nxt if r[col] != 0 else rest).append(r)
            nonzero = nxt
        piv = nonzero[0]
        if piv[col] < 0:
            piv = [-c for c in piv]
        out.append(piv)
        a = [r for r in rest if any(r)]
    # reduce entries above each pivot
    for i, row in enumerate(out):
        col = next(j for j, c in enumerate(row) if c)
        for k in range(i):
            q = out[k][col] // row[col]
            if q:
                out[k] = [a_ - q * b for a_, b in zip(out[k], row)]
    return out


@dataclass(frozen=True)
class RationalGeneratorSet:
    """Rational generators in the frame of a diagonal ambient form."""

    generators: tuple  # tuple of tuples of Fraction
    ambient_diagonal: tuple

    def __post_init__(self):
        gens = tuple(tuple(Fraction(c) for c in g) for g in self.generators)
        diag = tuple(int(d) for d in self.ambient_diagonal)
        for g in gens:
            if len(g) != len(diag):
                raise PreconditionError("generator length does not match the ambient rank")
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "ambient_diagonal", diag)


@dataclass(frozen=True)
class Overlattice:
    lattice: IntLattice
    basis: tuple  # rational basis vectors in the ambient frame


def overlattice_from_generators(g: RationalGeneratorSet) -> Overlattice:
    """Lattice spanned by rational generators, basis from the HNF.

    Raises when the generators are rank deficient or when some basis pairing
    is not an integer.
    """
    diag = g.ambient_diagonal
    n = len(diag)
    denom = reduce(lambda acc, q: acc * q.denominator // math.gcd(acc, q.denominator),
                   (c for gen in g.generators for c in gen), 1)
    scaled = [[int(c * denom) for c in gen] for gen in g.generators]
    hnf = hermite_normal_form(scaled)
    if len(hnf) != n:
        raise PreconditionError(f"generators span rank {len(hnf)}, ambient rank is {n}")
    basis = tuple(tuple(Fraction(c, denom) for c in row) for row in hnf)
    gram = []
    for bi in basis:
        row = []
        for bj in basis:
            val = sum(d * x * y for d, x, y in zip(diag, bi, bj))
            if val.denominator != 1:
                raise PreconditionError(f"glue data produce a non-integral pairing {val}")
            row.append(int(val))
        gram.append(tuple(row))
    return Overlattice(IntLattice(tuple(gram)), basis)


# ---------------------------------------------------------------------------
# serialisation


def lattice_to_json(L: IntLattice) -> dict:
    return {"rank": L.rank, "gram": [[str(g) for g in row] for row in L.gram]}


def lattice_from_json(data) -> IntLattice:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        gram = tuple(tuple(int(g) for g in row) for row in data["gram"])
    except (KeyError, TypeError, ValueError) as exc:
        raise PreconditionError(f"malformed lattice JSON: {exc}") from exc
    if int(data.get("rank", len(gram))) != len(gram):
        raise PreconditionError("lattice JSON 'rank' disagrees with the Gram matrix")
    return IntLattice(gram)


# ---------------------------------------------------------------------------
# bounded enumeration
#
# Vectors are produced in the canonical order: by max-norm height, then
# lexicographically by coordinates.  The Gram matrix is split into
# contiguous orthogonal blocks.  Definite blocks are walked with a
# Fincke-Pohst style recursion whose outer loop is the *first* coordinate, so
# the output comes out lexicographically sorted; indefinite blocks are
# enumerated over the full box.


def _contiguous_blocks(gram) -> list:
    n = len(gram)
    blocks, start, end = [], 0, -1
    for i in range(n):
        nz = [j for j in range(n) if gram[i][j] != 0]
        end = max([end, i] + nz)
        if i == end:
            blocks.append((start, i + 1))
            start = i + 1
    return blocks


class _DefiniteBlock:
    """Enumerates ``w`` with ``a <= sign*Q(w) <= b`` inside a box, lex order."""

    def __init__(self, gram, sign):
        self.gram = [[sign * g for g in row] for row in gram]
        self.sign = sign
        n = len(gram)
        a = [[Fraction(g) for g in row] for row in self.gram]
        d = [Fraction(0)] * n
        m = [[Fraction(0)] * n for _ in range(n)]
        for i in reversed(range(n)):
            d[i] = a[i][i]
            for j in range(i):
                m[i][j] = a[j][i] / d[i]
            for j in range(i):
                for k in range(i):
                    a[j][k] -= a[j][i] * a[i][k] / d[i]
        self.d, self.m, self.n = d, m, n
        self.abs_sum = sum(abs(g) for row in gram for g in row)

    def value_range(self, h):
        top = h * h * self.abs_sum
        return (0, top) if self.sign > 0 else (-top, 0)

    def vectors(self, lo, hi, h, need_sign):
        """Yield (w, Q(w)) with lo <= Q(w) <= hi (true sign), lexicographic."""
        if self.sign > 0:
            a, b = max(lo, 0), hi
        else:
            a, b = max(-hi, 0), -lo
        if b < a or b < 0:
            return
        n, d, m = self.n, self.d, self.m
        w = [0] * n
        budget = Fraction(b)

        def rec(i, used, sign_free):
            if i == n:
                if used >= a:
                    yield tuple(w), self.sign * int(used)
                return
            center = sum((m[i][j] * w[j] for j in range(i) if w[j]), Fraction(0))
            rem = budget - used
            if rem < 0:
                return
            x = rem / d[i]
            s = math.isqrt(x.numerator * x.denominator) // x.denominator + 1
            lo_w = max(-h, math.ceil(-center - s))
            hi_w = min(h, math.floor(-center + s))
            if not sign_free:
                lo_w = max(lo_w, 0)
            for v in range(lo_w, hi_w + 1):
                t = v + center
                cost = d[i] * t * t
                if cost > rem:
                    continue
                w[i] = v
                yield from rec(i + 1, used + cost, sign_free or v != 0)
            w[i] = 0

        yield from rec(0, Fraction(0), not need_sign)


class _BoxBlock:
    """Indefinite (or degenerate) block: brute force over the box."""

    def __init__(self, gram):
        self.gram = gram
        self.n = len(gram)
        self._cache = {}

    def _table(self, h):
        if h not in self._cache:
            g, n = self.gram, self.n
            rows = []
            for w in itertools.product(range(-h, h + 1), repeat=n):
                val = sum(w[i] * g[i][j] * w[j] for i in range(n) if w[i] for j in range(n) if w[j])
                rows.append((w, val))
            self._cache[h] = rows
        return self._cache[h]

    def value_range(self, h):
        vals = [v for _, v in self._table(h)]
        return min(vals), max(vals)

    def vectors(self, lo, hi, h, need_sign):
        for w, val in self._table(h):
            if lo <= val <= hi:
                if need_sign:
                    first = next((c for c in w if c), 0)
                    if first < 0:
                        continue
                yield w, val


class _Enumerator:
    def __init__(self, L: IntLattice):
        self.L = L
        self.blocks = []
        for s, e in _contiguous_blocks(L.gram):
            sub = [row[s:e] for row in L.gram[s:e]]
            diag = _symmetric_diagonal(sub)
            if diag is not None and all(x > 0 for x in diag):
                blk = _DefiniteBlock(sub, 1)
            elif diag is not None and all(x < 0 for x in diag):
                blk = _DefiniteBlock(sub, -1)
            else:
                blk = _BoxBlock(sub)
            self.blocks.append(blk)

    def vectors(self, value, h, exact_height, antipodal):
        ranges = [b.value_range(h) for b in self.blocks]
        k = len(self.blocks)
        suffix_lo = [0] * (k + 1)
        suffix_hi = [0] * (k + 1)
        for i in reversed(range(k)):
            suffix_lo[i] = suffix_lo[i + 1] + ranges[i][0]
            suffix_hi[i] = suffix_hi[i + 1] + ranges[i][1]
        parts = [None] * k

        def rec(i, target, nonzero_seen):
            if i == k:
                if target == 0 and nonzero_seen:
                    x = tuple(c for p in parts for c in p)
                    if exact_height is None or height(x) == exact_height:
                        yield x
                return
            if not (suffix_lo[i] <= target <= suffix_hi[i]):
                return
            lo = target - suffix_hi[i + 1]
            hi = target - suffix_lo[i + 1]
            need_sign = antipodal and not nonzero_seen
            for w, val in self.blocks[i].vectors(lo, hi, h, need_sign):
                parts[i] = w
                yield from rec(i + 1, target - val, nonzero_seen or any(w))

        yield from rec(0, value, False)


_ENUMERATORS: dict = {}


def _enumerator(L: IntLattice) -> _Enumerator:
    enum = _ENUMERATORS.get(L)
    if enum is None:
        enum = _ENUMERATORS[L] = _Enumerator(L)
    return enum


def iter_vectors_of_norm(L: IntLattice, value: int, height_bound: int, *,
                         start_height: int = 1, antipodal: bool = True) -> Iterator[Vector]:
    """Nonzero ``x`` with ``x.x == value`` in canonical (height, lex) order."""
    enum = _enumerator(L)
    for h in range(max(1, start_height), height_bound + 1):
        yield from enum.vectors(value, h, h, antipodal)


def iter_isotropic(L: IntLattice, height_bound: int,
                   predicate: Callable[[Vector], bool] | None = None, *,
                   start_height: int = 1) -> Iterator[Vector]:
    """Lazy version of :func:`enumerate_isotropic`."""
    for x in iter_vectors_of_norm(L, 0, height_bound, start_height=start_height):
        if content(x) == 1 and (predicate is None or predicate(x)):
            yield x


def enumerate_isotropic(L: IntLattice, height_bound: int,
                        predicate: Callable[[Vector], bool] | None = None) -> list:
    """All primitive isotropic vectors up to ``height_bound``, one per +-pair.

    The representative has its first nonzero coordinate positive.  The order
    is by height, then lexicographic, and is reproducible.
    """
    if height_bound < 1:
        raise PreconditionError("height_bound must be positive")
    return list(iter_isotropic(L, height_bound, predicate))
