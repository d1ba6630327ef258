"""Mukai vectors over a Neron-Severi lattice and their transforms."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

from sympy import factorint

from . import lattice as lat
from .errors import InvariantError, PreconditionError
from .lattice import IntLattice


@dataclass(frozen=True)
class MukaiVector:
    """``(r, c1, s)`` in ``Z + NS + Z`` with pairing ``c1.c1' - r s' - r' s``."""

    r: int
    c1: tuple
    s: int
    ns: IntLattice = field(repr=False)

    def __post_init__(self):
        c1 = tuple(int(c) for c in self.c1)
        if len(c1) != self.ns.rank:
            raise PreconditionError(
                f"c1 has length {len(c1)} but the ambient lattice has rank {self.ns.rank}")
        object.__setattr__(self, "r", int(self.r))
        object.__setattr__(self, "s", int(self.s))
        object.__setattr__(self, "c1", c1)

    @property
    def square(self) -> int:
        return mukai_pairing(self, self)

    def coords(self) -> tuple:
        return (self.r,) + self.c1 + (self.s,)

    def to_json(self) -> dict:
        return {"r": self.r, "c1": list(self.c1), "s": self.s}

    def __neg__(self):
        return MukaiVector(-self.r, lat.scale(-1, self.c1), -self.s, self.ns)


@dataclass(frozen=True)
class TwistedMukaiVector:
    """Mukai vector whose last entry may have denominator ``p`` (or ``2p``)."""

    r: int
    c1: tuple
    s: Fraction
    ns: IntLattice = field(repr=False)
    p: int = 0

    def __post_init__(self):
        object.__setattr__(self, "s", Fraction(self.s))
        object.__setattr__(self, "c1", tuple(int(c) for c in self.c1))
        if len(self.c1) != self.ns.rank:
            raise PreconditionError("c1 length does not match the ambient lattice")
        if self.p and (2 * self.p) % self.s.denominator:
            raise PreconditionError(f"last entry {self.s} has denominator not dividing 2p")

    @property
    def denominator(self) -> int:
        return self.s.denominator

    def to_json(self) -> dict:
        s = str(self.s.numerator) if self.s.denominator == 1 else f"{self.s.numerator}/{self.s.denominator}"
        return {"r": self.r, "c1": list(self.c1), "s": s}


def mukai(ns: IntLattice, r: int, c1=None, s: int = 0) -> MukaiVector:
    """Convenience constructor; ``c1=None`` or ``0`` means the zero class."""
    if c1 is None or (isinstance(c1, int) and c1 == 0):
        c1 = ns.zero()
    return MukaiVector(r, tuple(c1), s, ns)


def _same_ambient(v, w):
    if v.ns != w.ns:
        raise PreconditionError("Mukai vectors live over different lattices")


def mukai_pairing(v: MukaiVector, w: MukaiVector) -> int:
    _same_ambient(v, w)
    return lat.pairing(v.ns, v.c1, w.c1) - v.r * w.s - w.r * v.s


def twisted_pairing(v, w) -> Fraction:
    """Mukai pairing for vectors that may carry rational last entries."""
    _same_ambient(v, w)
    return Fraction(lat.pairing(v.ns, v.c1, w.c1)) - v.r * Fraction(w.s) - w.r * Fraction(v.s)


def mukai_vector_of_sheaf(rank: int, c1, chi: int, ns: IntLattice) -> MukaiVector:
    return mukai(ns, rank, c1, chi - rank)


def is_primitive(v: MukaiVector) -> bool:
    return lat.is_primitive(v.coords())


def is_coprime_to_p(v: MukaiVector, p: int) -> bool:
    """``p`` fails to divide ``r``, ``s`` or ``c1 . NS``."""
    if not is_primitive(v):
        raise PreconditionError("coprimality to p is only defined for primitive vectors")
    return v.r % p != 0 or v.s % p != 0 or not lat.divides_pairing(v.ns, v.c1, p)


def is_general_numeric(v: MukaiVector, H) -> bool:
    """``gcd(r, c1.H, s) == 1``."""
    return math.gcd(v.r, lat.pairing(v.ns, v.c1, H), v.s) == 1


def exp_twist(v: MukaiVector, L) -> MukaiVector:
    """Tensoring by a line bundle: ``(r, c1 + rL, s + r L^2/2 + c1.L)``."""
    L = tuple(L)
    ns = v.ns
    LL = lat.pairing(ns, L, L)
    if (v.r * LL) % 2:
        raise PreconditionError("r L^2 / 2 is not integral; L must have even square")
    return MukaiVector(
        v.r,
        lat.add(v.c1, lat.scale(v.r, L)),
        v.s + v.r * LL // 2 + lat.pairing(ns, v.c1, L),
        ns,
    )


def spherical_reflect(v: MukaiVector, e: MukaiVector) -> MukaiVector:
    """Reflection ``x -> x + <x, e> e`` in a (-2)-class ``e``."""
    if mukai_pairing(e, e) != -2:
        raise PreconditionError(f"reflection class must have square -2, got {mukai_pairing(e, e)}")
    k = mukai_pairing(v, e)
    return MukaiVector(v.r + k * e.r, lat.add(v.c1, lat.scale(k, e.c1)), v.s + k * e.s, v.ns)


def structure_sheaf_class(ns: IntLattice) -> MukaiVector:
    """``v(O_S) = (1, 0, 1)``; reflecting in it exchanges ``r`` and ``-s``."""
    return mukai(ns, 1, None, 1)


def curve_class(ns: IntLattice, C) -> MukaiVector:
    """``v(O_C(-1)) = (0, C, 0)`` for a (-2)-class ``C``."""
    return mukai(ns, 0, C, 0)


# ---------------------------------------------------------------------------


def _bezout_weights(moduli: list) -> list:
    """Integers ``a_i`` with ``sum(a_i * prod_{j != i} q_j) == 1``."""
    prods = [reduce(lambda x, y: x * y, (q for j, q in enumerate(moduli) if j != i), 1)
             for i in range(len(moduli))]
    weights = [0] * len(moduli)
    # Iterated extended gcd over the cofactors.
    g = prods[0]
    weights[0] = 1
    for i in range(1, len(prods)):
        d, x, y = _xgcd(g, prods[i])
        weights = [w * x for w in weights]
        weights[i] = y
        g = d
    if g != 1:
        raise InvariantError("cofactors are not coprime", {"moduli": moduli})
    return weights


def _xgcd(a: int, b: int):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _prime_witness(v: MukaiVector, q: int):
    """``L`` with ``q`` not dividing ``s + c1.L``: zero, basis vectors, then pairs."""
    if v.s % q:
        return v.ns.zero()
    row = lat.pairing_row(v.ns, v.c1)
    n = v.ns.rank
    for i in range(n):
        if row[i] % q:
            return v.ns.basis_vector(i)
    coeffs = [c for c in range(-3, 4) if c]
    for i in range(n):
        for j in range(i + 1, n):
            for a in coeffs:
                for b in coeffs:
                    if (a * row[i] + b * row[j]) % q:
                        x = [0] * n
                        x[i], x[j] = a, b
                        return tuple(x)
    return None


def find_generality_twist(v: MukaiVector, H, p: int):
    """Line bundle ``L`` with ``gcd(r, c1'.H, s') = 1`` for ``exp_twist(v, L)``.

    Per prime ``q | gcd(r, c1.H)`` a witness ``L_q`` is found, and the
    witnesses are glued with Bezout weights so that ``L = L_q mod q`` for
    every ``q``.
    """
    if not is_primitive(v):
        raise PreconditionError("v must be primitive")
    if not is_coprime_to_p(v, p):
        raise PreconditionError(
            f"v is not coprime to p={p} (exceptional case, p | <v,v>/2)")
    H = tuple(H)
    g = math.gcd(v.r, lat.pairing(v.ns, v.c1, H))
    if g == 0:
        raise PreconditionError("r = 0 and c1.H = 0: no twist can fix the gcd")
    if math.gcd(g, v.s) == 1:
        return v.ns.zero()
    primes = sorted(factorint(g))
    witnesses = []
    for q in primes:
        Lq = _prime_witness(v, q)
        if Lq is None:
            raise InvariantError(
                f"no line bundle moves s + c1.L off 0 mod {q}",
                {"v": v.to_json(), "q": q, "p": p})
        witnesses.append(Lq)
    weights = _bezout_weights(primes)
    L = v.ns.zero()
    for a, q, Lq in zip(weights, primes, witnesses):
        cof = a * reduce(lambda x, y: x * y, (qq for qq in primes if qq != q), 1)
        L = lat.add(L, lat.scale(cof, Lq))
    if not is_general_numeric(exp_twist(v, L), H):
        raise InvariantError("generality twist failed its recheck",
                             {"v": v.to_json(), "L": list(L), "H": list(H)})
    return L


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModuliReport:
    dim: int
    vperp_rank: int
    b2_target: int
    shioda_certified: bool
    kind: str

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "vperp_rank": self.vperp_rank,
            "b2_target": self.b2_target,
            "shioda_certified": self.shioda_certified,
            "kind": self.kind,
        }


KINDS = ("k3", "abelian_kummer")


def _kind(kind: str) -> str:
    kind = kind.replace("-", "_")
    if kind == "abelian":
        kind = "abelian_kummer"
    if kind not in KINDS:
        raise PreconditionError(f"unknown moduli kind {kind!r}")
    return kind


def moduli_dimension(v: MukaiVector, kind: str = "k3") -> int:
    kind = _kind(kind)
    sq = v.square
    if v.r <= 0:
        raise PreconditionError(f"rank must be positive, got r={v.r}")
    if kind == "k3":
        if sq < 0:
            raise PreconditionError(f"<v,v> = {sq} < 0: moduli space is not of K3^[n] type")
        return sq + 2
    if sq < 2:
        raise PreconditionError(f"<v,v> = {sq} < 2: no generalized Kummer fiber")
    return sq - 2


def _mukai_gram(ns: IntLattice) -> list:
    n = ns.rank
    g = [[0] * (n + 2) for _ in range(n + 2)]
    g[0][n + 1] = g[n + 1][0] = -1
    for i in range(n):
        for j in range(n):
            g[i + 1][j + 1] = ns.gram[i][j]
    return g


def orthogonal_complement_rank(v: MukaiVector) -> int:
    """Rank of ``v^perp`` inside the algebraic Mukai lattice."""
    g = _mukai_gram(v.ns)
    x = v.coords()
    functional = [sum(x[i] * g[i][j] for i in range(len(x))) for j in range(len(x))]
    return len(x) - (1 if any(functional) else 0)


def shioda_report(v: MukaiVector, p: int, ns, kind: str = "k3") -> ModuliReport:
    """Rank bookkeeping for ``theta_v : v^perp -> NS(M)``.

    The target has full Picard rank exactly when ``rank(v^perp)`` equals the
    second Betti number of the moduli space (23 or 7).
    """
    kind = _kind(kind)
    L = getattr(ns, "lattice", ns)
    if L != v.ns:
        raise PreconditionError("v does not live over the supplied lattice")
    dim = moduli_dimension(v, kind)
    if dim < 4:
        raise PreconditionError(f"dimension {dim} < 4: b2 of the moduli space is not 23/7")
    vperp = orthogonal_complement_rank(v)
    target = 23 if kind == "k3" else 7
    return ModuliReport(dim, vperp, target, vperp == target, kind)


# ---------------------------------------------------------------------------
# JSON


def _parse_s(raw, p=None):
    if isinstance(raw, int):
        return raw
    s = Fraction(str(raw).replace("p", str(p)) if p else str(raw))
    return int(s) if s.denominator == 1 else s


def vector_from_json(data, ns: IntLattice, p: int | None = None):
    """Parse ``{"r": int, "c1": [...], "s": int | "a/p"}``.

    A fractional ``s`` yields a :class:`TwistedMukaiVector`.
    """
    if isinstance(data, str):
        data = json.loads(data)
    try:
        r = int(data["r"])
        c1 = data.get("c1", 0)
        s = _parse_s(data.get("s", 0), p)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise PreconditionError(f"malformed Mukai vector JSON: {exc}") from exc
    if c1 == 0 or c1 is None:
        c1 = ns.zero()
    if isinstance(s, Fraction):
        return TwistedMukaiVector(r, tuple(c1), s, ns, p or 0)
    return MukaiVector(r, tuple(c1), s, ns)
