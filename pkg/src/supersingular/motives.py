"""Multiplicity-level arithmetic of supersingular abelian motives.

A motive is a finite sum of Tate twists ``1(-i)`` and twisted copies
``h1(E)(-i)`` of the weight-one motive of a supersingular elliptic curve.
Only multiplicities are modelled.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache, reduce

from sympy.utilities.iterables import partitions as _sympy_partitions

from .errors import PreconditionError


class SSMotive:
    """``sum 1(-i)^tate[i] + sum h1(E)(-i)^h1e[i]``; zero entries are dropped."""

    __slots__ = ("_tate", "_h1e")

    def __init__(self, tate=None, h1e=None):
        self._tate = _clean(tate or {})
        self._h1e = _clean(h1e or {})

    @property
    def tate(self) -> dict:
        return dict(self._tate)

    @property
    def h1e(self) -> dict:
        return dict(self._h1e)

    def is_zero(self) -> bool:
        return not self._tate and not self._h1e

    def is_tate_type(self) -> bool:
        return not self._h1e

    def rank(self) -> int:
        """Dimension of any Weil realization (``h1`` has rank 2)."""
        return sum(self._tate.values()) + 2 * sum(self._h1e.values())

    def twist(self, n: int) -> "SSMotive":
        if n < 0 and any(i + n < 0 for i in list(self._tate) + list(self._h1e)):
            raise PreconditionError("twist would produce a negative Tate index")
        return SSMotive({i + n: m for i, m in self._tate.items()},
                        {i + n: m for i, m in self._h1e.items()})

    def __eq__(self, other):
        return isinstance(other, SSMotive) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def _key(self):
        return tuple(sorted(self._tate.items())), tuple(sorted(self._h1e.items()))

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return tensor(self, other)

    def __repr__(self):
        parts = [f"1(-{i})^{m}" for i, m in sorted(self._tate.items())]
        parts += [f"h1(-{i})^{m}" for i, m in sorted(self._h1e.items())]
        return "SSMotive(" + (" + ".join(parts) or "0") + ")"

    def to_json(self) -> dict:
        return {
            "tate": {str(i): m for i, m in sorted(self._tate.items())},
            "h1e": {str(i): m for i, m in sorted(self._h1e.items())},
        }


def _clean(d: dict) -> dict:
    out = {}
    for i, m in d.items():
        i, m = int(i), int(m)
        if i < 0 or m < 0:
            raise PreconditionError(f"twists and multiplicities must be non-negative: {i}, {m}")
        if m:
            out[i] = m
    return out


ZERO = SSMotive()
UNIT = SSMotive({0: 1})
H1 = SSMotive(h1e={0: 1})


def tate(i: int, mult: int = 1) -> SSMotive:
    return SSMotive({i: mult})


def add(M: SSMotive, N: SSMotive) -> SSMotive:
    t, h = Counter(M.tate), Counter(M.h1e)
    t.update(N.tate)
    h.update(N.h1e)
    return SSMotive(t, h)


def tensor(M: SSMotive, N: SSMotive) -> SSMotive:
    t, h = Counter(), Counter()
    for a, m in M.tate.items():
        for b, n in N.tate.items():
            t[a + b] += m * n
        for b, n in N.h1e.items():
            h[a + b] += m * n
    for a, m in M.h1e.items():
        for b, n in N.tate.items():
            h[a + b] += m * n
        for b, n in N.h1e.items():
            t[a + b + 1] += 4 * m * n
    return SSMotive(t, h)


def direct_sum(motives) -> SSMotive:
    return reduce(add, motives, ZERO)


# ---------------------------------------------------------------------------
# Schur functors of h1(E)


def sym_h1e(k: int) -> SSMotive:
    """``Sym^{2j} = 1(-j)^(2j+1)`` and ``Sym^{2j+1} = h1(-j)^(j+1)``.

    These multiplicities make the realization rank ``k + 1``.
    """
    if k < 0:
        raise PreconditionError("k must be non-negative")
    j, odd = divmod(k, 2)
    return SSMotive(h1e={j: j + 1}) if odd else SSMotive({j: 2 * j + 1})


def wedge_h1e(k: int) -> SSMotive:
    if k < 0:
        raise PreconditionError("k must be non-negative")
    return {0: UNIT, 1: H1, 2: tate(1)}.get(k, ZERO)


def literal_sym_multiplicity(k: int) -> int:
    """Multiplicities ``j(2j+1)`` / ``(j+1)(2j+1)`` as printed in one closed form."""
    j, odd = divmod(k, 2)
    return (j + 1) * (2 * j + 1) if odd else j * (2 * j + 1)


def sym_rank_audit(kmax: int = 12) -> list:
    """Compare realization ranks of ``Sym^k h1`` against ``k + 1``.

    ``implemented`` uses :func:`sym_h1e`; ``literal`` uses
    :func:`literal_sym_multiplicity` (rank doubles for the odd ``h1`` pieces).
    """
    rows = []
    for k in range(kmax + 1):
        lit = literal_sym_multiplicity(k) * (2 if k % 2 else 1)
        rows.append({
            "k": k,
            "expected_rank": k + 1,
            "implemented_rank": sym_h1e(k).rank(),
            "literal_rank": lit,
            "literal_ok": lit == k + 1,
        })
    return rows


@dataclass(frozen=True)
class Partition:
    parts: tuple

    def __post_init__(self):
        parts = tuple(sorted((int(x) for x in self.parts), reverse=True))
        if any(x <= 0 for x in parts):
            raise PreconditionError("partition parts must be positive")
        object.__setattr__(self, "parts", parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    @property
    def multiplicities(self) -> dict:
        return dict(Counter(self.parts))

    @property
    def gcd(self) -> int:
        return reduce(math.gcd, self.parts, 0)

    @property
    def transpose(self) -> "Partition":
        if not self.parts:
            return self
        return Partition(tuple(sum(1 for x in self.parts if x > i) for i in range(self.parts[0])))

    def __str__(self):
        return "(" + ",".join(map(str, self.parts)) + ")"


def partitions_of(n: int) -> list:
    """Partitions of ``n`` in reverse-lexicographic order (``(n)`` first)."""
    if n < 0:
        raise PreconditionError("n must be non-negative")
    if n == 0:
        return [Partition(())]
    out = []
    for d in _sympy_partitions(n):
        out.append(Partition(tuple(k for k, m in d.items() for _ in range(m))))
    out.sort(key=lambda lam: lam.parts, reverse=True)
    return out


def schur_h1e(lam: Partition) -> SSMotive:
    """``S_lambda h1``: zero past length 2, else ``1(-a) (x) Sym^b`` for ``(a+b, a)``."""
    if lam.length >= 3:
        return ZERO
    if lam.length == 0:
        return UNIT
    a = lam.parts[1] if lam.length == 2 else 0
    b = lam.parts[0] - a
    return tensor(tate(a), sym_h1e(b))


def schur_dimension(lam: Partition, g: int) -> int:
    """Dimension of ``S_lambda`` applied to a ``g``-dimensional space (hook-content)."""
    num, den = 1, 1
    conj = lam.transpose.parts
    for i, row in enumerate(lam.parts):
        for j in range(row):
            num *= g + j - i
            den *= (row - j - 1) + (conj[j] - i - 1) + 1
    return num // den if num > 0 else 0


def ssav_motive_direct(g: int) -> SSMotive:
    """Sum over ``i`` of ``1(-i)^C(2g,2i)`` and ``h1(-i)^(C(2g,2i+1)/2)``."""
    if g < 0:
        raise PreconditionError("g must be non-negative")
    t = {i: math.comb(2 * g, 2 * i) for i in range(g + 1)}
    h = {i: math.comb(2 * g, 2 * i + 1) // 2 for i in range(g)}
    return SSMotive(t, h)


def ssav_motive_schur(g: int) -> SSMotive:
    """``sum_i sum_{lambda |- i} S_lambda h1 (x) S_lambda' (trivial rank g)``."""
    if g < 0:
        raise PreconditionError("g must be non-negative")
    total = ZERO
    for i in range(2 * g + 1):
        for lam in partitions_of(i):
            mult = schur_dimension(lam.transpose, g)
            if mult:
                piece = schur_h1e(lam)
                total = add(total, SSMotive({k: m * mult for k, m in piece.tate.items()},
                                            {k: m * mult for k, m in piece.h1e.items()}))
    return total


# ---------------------------------------------------------------------------
# Betti vectors


def betti_vector(M: SSMotive) -> list:
    top = max([2 * i for i in M.tate] + [2 * i + 1 for i in M.h1e], default=-1)
    b = [0] * (top + 1)
    for i, m in M.tate.items():
        b[2 * i] += m
    for i, m in M.h1e.items():
        b[2 * i + 1] += 2 * m
    return b


def _check_betti(b) -> list:
    b = [int(x) for x in b]
    if any(x < 0 for x in b):
        raise PreconditionError("Betti numbers must be non-negative")
    odd = [i for i in range(1, len(b), 2) if b[i] % 2]
    if odd:
        raise PreconditionError(f"odd Betti numbers b_{odd[0]} = {b[odd[0]]} must be even")
    return b


def canonical_from_betti(b) -> SSMotive:
    b = _check_betti(b)
    return SSMotive({i // 2: b[i] for i in range(0, len(b), 2)},
                    {i // 2: b[i] // 2 for i in range(1, len(b), 2)})


K3_BETTI = (1, 0, 22, 0, 1)
SS_K3_MOTIVE = canonical_from_betti(K3_BETTI)


def is_poincare_dual(b) -> bool:
    return list(b) == list(reversed(b))


# ---------------------------------------------------------------------------
# Hilbert schemes


def _tate_sym(counts: dict, k: int) -> Counter:
    """Twist multiplicities of ``Sym^k`` of a Tate motive (multiset counting).

    Coefficient of ``u^k`` in ``prod_j (1 - u x^j)^(-c_j)``.
    """
    poly = [Counter({0: 1})] + [Counter() for _ in range(k)]
    for j, c in sorted(counts.items()):
        new = [Counter() for _ in range(k + 1)]
        for deg, terms in enumerate(poly):
            for tw, mult in terms.items():
                for a in range(k - deg + 1):
                    new[deg + a][tw + j * a] += mult * math.comb(c + a - 1, a)
        poly = new
    return poly[k]


def hilb_motive(surface: SSMotive, n: int) -> SSMotive:
    """Motive of the Hilbert scheme of ``n`` points on a Tate-type surface.

    Sum over partitions of ``n`` with part multiplicities ``a_m`` of
    ``(x)_m Sym^{a_m}(surface)(-(m-1) a_m)``.
    """
    if n < 0:
        raise PreconditionError("n must be non-negative")
    if not surface.is_tate_type():
        raise PreconditionError("surface motive must be of Tate type")
    total = ZERO
    for lam in partitions_of(n):
        piece = UNIT
        for m, a in lam.multiplicities.items():
            sym = SSMotive(_tate_sym(surface.tate, a)).twist((m - 1) * a)
            piece = tensor(piece, sym)
        total = add(total, piece)
    return total


def gottsche_poincare(b_surface, n: int) -> list:
    """Betti numbers of the Hilbert scheme via the product generating function.

    ``prod_m (1 - z^{2m-2} q^m)^-b0 (1 - z^{2m} q^m)^-b2 (1 - z^{2m+2} q^m)^-b4``,
    coefficient of ``q^n``.  Each factor ``1/(1 - x^a q^m)`` is applied as the
    recurrence ``g[q][x] = f[q][x] + g[q-m][x-a]``.
    """
    b = [int(x) for x in b_surface]
    if len(b) != 5 or b[1] or b[3]:
        raise PreconditionError("surface Betti vector must have length 5 and zero odd part")
    if n < 0:
        raise PreconditionError("n must be non-negative")
    width = 2 * n + 1  # half-degree x = z^2 runs 0..2n
    series = [[0] * width for _ in range(n + 1)]
    series[0][0] = 1
    for m in range(1, n + 1):
        for j, bj in ((0, b[0]), (1, b[2]), (2, b[4])):
            a = m - 1 + j
            for _ in range(bj):
                for qd in range(m, n + 1):
                    row, prev = series[qd], series[qd - m]
                    for x in range(a, width):
                        row[x] += prev[x - a]
    out = [0] * (4 * n + 1)
    for x, c in enumerate(series[n]):
        out[2 * x] = c
    return out


# ---------------------------------------------------------------------------
# Generalized Kummer varieties


@dataclass(frozen=True)
class KummerSummand:
    partition: Partition
    copies: int
    power: int
    twist: int

    def to_json(self):
        return {"partition": list(self.partition.parts), "copies": self.copies,
                "power": self.power, "twist": self.twist}


def kummer_inventory(n: int) -> list:
    """Summands ``gcd(lambda)^4`` copies of ``A^(|lambda|-1)`` for ``lambda |- n+1``."""
    if n < 1:
        raise PreconditionError("n must be at least 1")
    return [KummerSummand(lam, lam.gcd ** 4, lam.length - 1, lam.length - n)
            for lam in partitions_of(n + 1)]


def kummer_dimension_audit(n: int) -> dict:
    """Total cohomology rank of the raw summand inventory vs the Betti oracle.

    The inventory takes no symmetric-group invariants, so its total
    ``sum copies * 16^power`` overshoots; the mismatch is reported, not hidden.
    """
    inv_total = sum(s.copies * 16 ** s.power for s in kummer_inventory(n))
    betti_total = sum(kummer_betti(n))
    return {
        "n": n,
        "inventory_total": inv_total,
        "betti_total": betti_total,
        "consistent": inv_total == betti_total,
        "flag": None if inv_total == betti_total else
        f"summand inventory has total rank {inv_total} but H*(K_{n}) has rank {betti_total}",
    }


def _pmul(a: list, b: list) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _padd(a: list, b: list) -> list:
    out = [0] * max(len(a), len(b))
    for i, x in enumerate(a):
        out[i] += x
    for i, x in enumerate(b):
        out[i] += x
    return out


def _div_one_plus_z(a: list) -> list:
    """Exact division by ``1 + z``; raises if there is a remainder."""
    q = [0] * (len(a) - 1)
    rem = list(a)
    for i in range(len(a) - 1, 0, -1):
        q[i - 1] = rem[i]
        rem[i - 1] -= rem[i]
        rem[i] = 0
    if rem[0]:
        raise PreconditionError("polynomial is not divisible by 1 + z")
    return q


@lru_cache(maxsize=None)
def _sym_abelian_surface(k: int) -> tuple:
    """Poincare polynomial of ``Sym^k A`` for an abelian surface (Macdonald).

    Coefficient of ``t^k`` in
    ``(1+zt)^4 (1+z^3 t)^4 / ((1-t)(1-z^2 t)^6 (1-z^4 t))``.
    """
    # series[d] is the t^d coefficient, a polynomial in z
    series = [[1]] + [[0] for _ in range(k)]

    def times(series, a):  # (1 + z^a t)
        return [series[0]] + [_padd(series[d], [0] * a + series[d - 1]) for d in range(1, k + 1)]

    def over(series, a):  # 1 / (1 - z^a t)
        out = [series[0]]
        for d in range(1, k + 1):
            out.append(_padd(series[d], [0] * a + out[d - 1]))
        return out

    for a, e in ((1, 4), (3, 4)):
        for _ in range(e):
            series = times(series, a)
    for a, e in ((0, 1), (2, 6), (4, 1)):
        for _ in range(e):
            series = over(series, a)
    return tuple(series[k])


def kummer_betti(n: int) -> list:
    """Betti numbers of the generalized Kummer ``K_n(A)``, ``dim = 2n``.

    ``sum_{alpha |- n+1} gcd(alpha)^4 z^{2(n+1-l)} prod_i P(Sym^{a_i} A) / (1+z)^4``
    where ``a_i`` are the part multiplicities and ``l`` the number of parts.
    """
    if n < 1:
        raise PreconditionError("n must be at least 1")
    total = [0]
    for lam in partitions_of(n + 1):
        poly = [0] * (2 * (n + 1 - lam.length)) + [1]
        for a in lam.multiplicities.values():
            poly = _pmul(poly, list(_sym_abelian_surface(a)))
        for _ in range(4):
            poly = _div_one_plus_z(poly)
        total = _padd(total, [lam.gcd ** 4 * c for c in poly])
    while len(total) > 1 and total[-1] == 0:
        total.pop()
    if len(total) != 4 * n + 1:
        raise PreconditionError(f"unexpected Kummer Poincare degree {len(total) - 1}")
    return total


# ---------------------------------------------------------------------------


def chow_rank_report(b) -> dict:
    """Per codimension: rank of the algebraic-equivalence-trivial part and ``dim Ab^i``."""
    b = _check_betti(b)
    rows = []
    for i in range((len(b) + 1) // 2):
        rows.append({
            "codim": i,
            "ch0_rank": b[2 * i] if 2 * i < len(b) else 0,
            "ab_dim": b[2 * i - 1] // 2 if i > 0 else 0,
        })
    tate_type = all(b[i] == 0 for i in range(1, len(b), 2))
    return {
        "rows": rows,
        "tate_type": tate_type,
        "note": "motive of Tate type; Chow groups equal numerical classes" if tate_type else
        "odd cohomology present; Ab^i are supersingular abelian varieties",
    }
