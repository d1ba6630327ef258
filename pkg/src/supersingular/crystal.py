"""Slope-level F-isocrystal arithmetic with exact rationals."""
from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

from .errors import PreconditionError

INF = None  # marker for an infinite valuation (zero coefficient)


@dataclass(frozen=True)
class SlopeMultiset:
    """Sorted ``((slope, multiplicity), ...)`` with distinct slopes."""

    items: tuple

    def __post_init__(self):
        merged = Counter()
        for slope, mult in self.items:
            slope, mult = Fraction(slope), int(mult)
            if slope < 0:
                raise PreconditionError(f"negative slope {slope}")
            if mult <= 0:
                raise PreconditionError(f"multiplicity must be positive, got {mult}")
            merged[slope] += mult
        object.__setattr__(self, "items", tuple(sorted(merged.items())))

    @property
    def rank(self) -> int:
        return sum(m for _, m in self.items)

    def to_json(self) -> list:
        return [[_frac_str(s), m] for s, m in self.items]

    def __str__(self):
        return " ".join(f"{_frac_str(s)}x{m}" for s, m in self.items)


@dataclass(frozen=True)
class NewtonPolygon:
    vertices: tuple

    @property
    def rank(self) -> int:
        return self.vertices[-1][0]

    def to_json(self) -> list:
        return [[x, _frac_str(y)] for x, y in self.vertices]


@dataclass(frozen=True)
class HodgeNumbers:
    items: tuple

    def __post_init__(self):
        for j, h in self.items:
            if h <= 0:
                raise PreconditionError("Hodge multiplicities must be positive")


def _frac_str(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def slope_multiset(pairs: Iterable) -> SlopeMultiset:
    return SlopeMultiset(tuple(pairs))


def parse_slopes(text: str) -> SlopeMultiset:
    """Parse ``"1/2x4"``, ``"0x1 1x20 2x1"`` or a JSON list ``[["1/2", 4]]``."""
    text = text.strip()
    if text.startswith("["):
        return SlopeMultiset(tuple((Fraction(str(s)), int(m)) for s, m in json.loads(text)))
    pairs = []
    for tok in re.split(r"[\s,;]+", text):
        if not tok:
            continue
        m = re.fullmatch(r"([0-9/.\-]+)(?:[x*]([0-9]+))?", tok)
        if not m:
            raise PreconditionError(f"cannot parse slope token {tok!r}")
        pairs.append((Fraction(m.group(1)), int(m.group(2) or 1)))
    return SlopeMultiset(tuple(pairs))


def newton_from_valuations(vals: Sequence) -> NewtonPolygon:
    """Lower convex hull of ``(i, vals[i])``; ``None`` entries are skipped."""
    if not vals:
        raise PreconditionError("empty valuation list")
    if vals[0] is None or Fraction(vals[0]) != 0:
        raise PreconditionError("vals[0] must be 0 (monic characteristic polynomial)")
    if vals[-1] is None:
        raise PreconditionError("the last valuation must be finite")
    pts = [(i, Fraction(v)) for i, v in enumerate(vals) if v is not None]
    if any(y < 0 for _, y in pts):
        raise PreconditionError("valuations of Frobenius coefficients are non-negative")
    hull: list = []
    for pt in pts:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], pt) <= 0:
            hull.pop()
        hull.append(pt)
    return NewtonPolygon(tuple(hull))


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def slopes(np: NewtonPolygon) -> SlopeMultiset:
    out = []
    for (x0, y0), (x1, y1) in zip(np.vertices, np.vertices[1:]):
        out.append((Fraction(y1 - y0, 1) / (x1 - x0), x1 - x0))
    return SlopeMultiset(tuple(out))


def polygon(s: SlopeMultiset) -> NewtonPolygon:
    x, y = 0, Fraction(0)
    verts = [(0, Fraction(0))]
    for slope, mult in s.items:
        x += mult
        y += slope * mult
        verts.append((x, y))
    return NewtonPolygon(tuple(verts))


def hodge_polygon(h: HodgeNumbers) -> NewtonPolygon:
    return polygon(SlopeMultiset(tuple((j, m) for j, m in h.items)))


def is_supersingular(s: SlopeMultiset, i: int) -> bool:
    return len(s.items) == 1 and s.items[0][0] == Fraction(i, 2)


def is_ordinary(n: NewtonPolygon, h: HodgeNumbers) -> bool:
    hp = hodge_polygon(h)
    if hp.rank != n.rank:
        raise PreconditionError(f"rank mismatch: Newton {n.rank}, Hodge {hp.rank}")
    return hp.vertices == n.vertices


def wedge_slopes(s: SlopeMultiset, k: int) -> SlopeMultiset:
    """Slopes of the ``k``-th exterior power.

    Convolves ``prod_slope (1 + t x^slope)^mult`` truncated at ``t^k``; the
    coefficient of ``t^k x^a`` is the multiplicity of slope ``a``.
    """
    if not 0 <= k <= s.rank:
        raise PreconditionError(f"k = {k} outside 0..{s.rank}")
    # poly[j] maps a total slope to its multiplicity among j-subsets.
    poly = [Counter({Fraction(0): 1})] + [Counter() for _ in range(k)]
    for slope, mult in s.items:
        new = [Counter() for _ in range(k + 1)]
        for j, terms in enumerate(poly):
            for total, c in terms.items():
                for t in range(0, min(mult, k - j) + 1):
                    new[j + t][total + t * slope] += c * comb(mult, t)
        poly = new
    return SlopeMultiset(tuple(poly[k].items()))


def tensor_slopes(a: SlopeMultiset, b: SlopeMultiset) -> SlopeMultiset:
    out = Counter()
    for s1, m1 in a.items:
        for s2, m2 in b.items:
            out[s1 + s2] += m1 * m2
    return SlopeMultiset(tuple(out.items()))


def tate_twist(s: SlopeMultiset, n: int) -> SlopeMultiset:
    """Twist by ``(-n)``: every slope moves up by ``n``."""
    if s.items and s.items[0][0] + n < 0:
        raise PreconditionError(f"twist by {n} makes slope {s.items[0][0] + n} negative")
    return SlopeMultiset(tuple((sl + n, m) for sl, m in s.items))


def hilb_or_kummer_h2(s_surface: SlopeMultiset) -> SlopeMultiset:
    """H² of the Hilbert scheme (rank 22 input) or Kummer variety (rank 6 input)."""
    if s_surface.rank not in (6, 22):
        raise PreconditionError(f"expected an H² of rank 6 or 22, got {s_surface.rank}")
    return SlopeMultiset(s_surface.items + ((Fraction(1), 1),))


SS_ABELIAN_H1 = SlopeMultiset(((Fraction(1, 2), 4),))
SS_K3_H2 = SlopeMultiset(((Fraction(1), 22),))
ORDINARY_K3_H2 = SlopeMultiset(((0, 1), (1, 20), (2, 1)))
K3_HODGE_H2 = HodgeNumbers(((0, 1), (1, 20), (2, 1)))
