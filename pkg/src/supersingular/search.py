"""Bounded constructive searches on Neron-Severi lattices.

Each search returns a witness object whose ``validate`` method recomputes
every invariant from scratch; the searches call it before returning.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import islice

from sympy import primefactors

from . import lattice as lat
from .errors import InvariantError, PreconditionError
from .lattice import IntLattice
from .mukai import (
    MukaiVector,
    TwistedMukaiVector,
    exp_twist,
    is_coprime_to_p,
    is_primitive,
    mukai_pairing,
    spherical_reflect,
    structure_sheaf_class,
    twisted_pairing,
)

DEFAULT_HEIGHT_CAP = 16
POLARIZATION_HEIGHT_CAP = 8
CHAIN_CANDIDATES = 4000


@dataclass(frozen=True)
class ExpTwist:
    L: tuple

    def apply(self, v: MukaiVector) -> MukaiVector:
        return exp_twist(v, self.L)

    def to_json(self):
        return {"op": "exp_twist", "L": list(self.L)}


@dataclass(frozen=True)
class SphericalReflect:
    e: MukaiVector

    def apply(self, v: MukaiVector) -> MukaiVector:
        return spherical_reflect(v, self.e)

    def to_json(self):
        return {"op": "spherical_reflect", "e": self.e.to_json()}


@dataclass(frozen=True)
class TransformChain:
    steps: tuple = ()

    def apply(self, v: MukaiVector) -> MukaiVector:
        for step in self.steps:
            v = step.apply(v)
        return v

    def __len__(self):
        return len(self.steps)

    def to_json(self):
        return [s.to_json() for s in self.steps]


@dataclass(frozen=True)
class EllipticWitness:
    v_in: MukaiVector
    chain: TransformChain
    v_out: MukaiVector
    x: tuple

    def validate(self, p: int | None = None) -> bool:
        ns = self.v_out.ns
        checks = {
            "chain_reproduces_output": self.chain.apply(self.v_in) == self.v_out,
            "pairing_preserved": self.v_in.square == self.v_out.square,
            "x_primitive": lat.is_primitive(self.x),
            "x_isotropic": lat.pairing(ns, self.x, self.x) == 0,
            "gcd_one": math.gcd(self.v_out.r, lat.pairing(ns, self.v_out.c1, self.x)) == 1,
        }
        if p is not None:
            checks["coprime_preserved"] = is_coprime_to_p(self.v_out, p)
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise InvariantError(f"elliptic witness failed: {', '.join(bad)}", self.to_json())
        return True

    def to_json(self):
        return {
            "v_in": self.v_in.to_json(),
            "chain": self.chain.to_json(),
            "v_out": self.v_out.to_json(),
            "x": list(self.x),
            "c1_dot_x": lat.pairing(self.v_out.ns, self.v_out.c1, self.x),
        }


@dataclass(frozen=True)
class UntwistWitness:
    tau: TwistedMukaiVector
    w: TwistedMukaiVector
    pairing_value: Fraction
    case: str
    p: int = field(default=0)

    def validate(self) -> bool:
        tt = twisted_pairing(self.tau, self.tau)
        tw = twisted_pairing(self.tau, self.w)
        checks = {
            "tau_isotropic": tt == 0,
            "pairing_recorded": tw == self.pairing_value,
            "pairing_integral": tw.denominator == 1,
            "p_coprime": tw.denominator == 1 and tw.numerator % self.p != 0,
            "tau_integral": self.tau.s.denominator == 1,
            "w_denominator": (2 * self.p) % self.w.s.denominator == 0,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise InvariantError(f"untwisting witness failed: {', '.join(bad)}", self.to_json())
        return True

    def to_json(self):
        return {
            "case": self.case,
            "tau": self.tau.to_json(),
            "w": self.w.to_json(),
            "w_denominator": self.w.denominator,
            "pairing_value": str(self.pairing_value),
        }


# ---------------------------------------------------------------------------
# elliptic classes


PROBE_SIZE = 64


@lru_cache(maxsize=64)
def _isotropic_probe(ns: IntLattice) -> tuple:
    """A fixed sample of primitive isotropic classes, canonical order."""
    return tuple(islice(lat.iter_isotropic(ns, 4), PROBE_SIZE))


def _obstructions(v: MukaiVector) -> list:
    """Primes ``q | r`` dividing ``c1 . x`` for every probed isotropic ``x``.

    This catches ``q | c1.NS`` and also primes where the isotropic classes
    are confined mod ``q`` (e.g. ``p`` on lattices whose ``p``-part is
    anisotropic), so no ``x`` can reach ``gcd = 1``.
    """
    if v.r == 0:
        return [0]
    row = lat.pairing_row(v.ns, v.c1)
    dots = [sum(a * b for a, b in zip(row, x)) for x in _isotropic_probe(v.ns)]
    return [q for q in primefactors(abs(v.r)) if all(d % q == 0 for d in dots)]


def _chain_candidates(ns: IntLattice, height_cap: int):
    """Twist classes tried before the ``r <-> s`` reflection, deterministic order."""
    yield ns.zero()
    seen = 0
    for x in lat.iter_isotropic(ns, min(height_cap, 4)):
        yield x
        yield lat.scale(-1, x)
        seen += 1
        if seen >= CHAIN_CANDIDATES // 2:
            break
    # isotropic twists cannot move s mod p when every isotropic class is
    # p-divisible against c1; basis vectors can
    for i in range(ns.rank):
        b = ns.basis_vector(i)
        yield b
        yield lat.scale(-1, b)


def _reduce_chain(v: MukaiVector, height_cap: int, state: dict) -> TransformChain:
    """Transforms removing every obstruction prime, so some ``x`` can work."""
    if not _obstructions(v):
        return TransformChain()
    e = structure_sheaf_class(v.ns)
    tried = 0
    for L in _chain_candidates(v.ns, height_cap):
        tried += 1
        steps = (ExpTwist(L), SphericalReflect(e)) if any(L) else (SphericalReflect(e),)
        chain = TransformChain(steps)
        if not _obstructions(chain.apply(v)):
            state["chain_candidates_tried"] = tried
            return chain
    state["chain_candidates_tried"] = tried
    raise InvariantError("no transform chain removes the gcd obstruction", state)


def _check_input(v: MukaiVector, p: int):
    if not is_primitive(v):
        raise PreconditionError("v must be primitive")
    if not is_coprime_to_p(v, p):
        raise PreconditionError(f"v is not coprime to p={p}")


def _elliptic(ns: IntLattice, v: MukaiVector, p: int, height_cap: int) -> EllipticWitness:
    if v.ns != ns:
        raise PreconditionError("v does not live over the supplied lattice")
    _check_input(v, p)
    if height_cap < 1:
        raise PreconditionError("height cap must be positive")
    state = {"v": v.to_json(), "p": p, "height_cap": height_cap, "rounds": []}
    chain = _reduce_chain(v, height_cap, state)
    w = chain.apply(v)
    r, row = w.r, lat.pairing_row(ns, w.c1)
    pred = lambda x: math.gcd(r, sum(a * b for a, b in zip(row, x))) == 1  # noqa: E731
    start, bound = 1, 1
    while start <= height_cap:
        bound = min(bound, height_cap)
        state["rounds"].append(bound)
        x = next(lat.iter_isotropic(ns, bound, pred, start_height=start), None)
        if x is not None:
            wit = EllipticWitness(v, chain, w, x)
            wit.validate(p)
            return wit
        start, bound = bound + 1, bound * 2
    state["v_out"] = w.to_json()
    raise InvariantError(f"no elliptic class up to height {height_cap}", state)


def find_elliptic_class(ns, v: MukaiVector, p: int,
                        height_cap: int = DEFAULT_HEIGHT_CAP) -> EllipticWitness:
    """Isotropic primitive ``x`` with ``gcd(r', c1'.x) = 1`` after a transform chain."""
    return _elliptic(getattr(ns, "lattice", ns), v, p, height_cap)


def find_elliptic_class_abelian(ns, v: MukaiVector, p: int,
                                height_cap: int = DEFAULT_HEIGHT_CAP) -> EllipticWitness:
    """Same search on a rank-6 lattice; chains use only twists and ``(1,0,1)``."""
    L = getattr(ns, "lattice", ns)
    if L.rank != 6:
        raise PreconditionError(f"abelian surface lattices have rank 6, got {L.rank}")
    wit = _elliptic(L, v, p, height_cap)
    for step in wit.chain.steps:
        if isinstance(step, SphericalReflect) and step.e.r == 0:
            raise InvariantError("curve reflection in an abelian chain", wit.to_json())
    return wit


# ---------------------------------------------------------------------------
# untwisting pairs


def find_untwisting_pair(ns, p: int, L, case: str = "auto",
                         height_cap: int = DEFAULT_HEIGHT_CAP) -> UntwistWitness:
    """Integral isotropic ``tau`` and twisted ``w`` with ``p`` not dividing ``<tau, w>``.

    Case I (``p`` does not divide ``L.NS``) uses ``tau = (0, E, 0)`` and
    ``w = (p, L, L^2/2p)``.  Case II uses ``tau = (p, f1 + eps p f2, 1)`` and
    ``w = (0, f2, f2.L/p)`` inside a unimodular hyperbolic summand, where
    ``eps = f1.f2`` fixes the sign convention.
    """
    sigma = getattr(ns, "sigma", None)
    hyperbolic = getattr(ns, "hyperbolic", None)
    N = getattr(ns, "lattice", ns)
    if sigma is not None and sigma >= 10:
        raise PreconditionError("untwisting needs sigma < 10")
    if p == 2:
        raise PreconditionError("p = 2 untwisting is not supported")
    if p % 2 == 0 or p < 3:
        raise PreconditionError(f"p must be an odd prime, got {p}")
    L = tuple(L)
    if len(L) != N.rank:
        raise PreconditionError("L does not live over the supplied lattice")
    case = case.upper() if case != "auto" else case
    if case not in ("auto", "I", "II"):
        raise PreconditionError(f"unknown case {case!r}")
    divisible = lat.divides_pairing(N, L, p)
    if case == "auto":
        case = "II" if divisible else "I"
    if case == "I" and divisible:
        raise PreconditionError("case I needs p not dividing L.NS")
    if case == "II" and not divisible:
        raise PreconditionError("case II needs p dividing L.NS")

    LL = lat.pairing(N, L, L)
    if case == "I":
        row = lat.pairing_row(N, L)
        pred = lambda x: sum(a * b for a, b in zip(row, x)) % p != 0  # noqa: E731
        E = next(lat.iter_isotropic(N, height_cap, pred), None)
        if E is None:
            raise InvariantError("no isotropic E with p not dividing L.E",
                                 {"p": p, "L": list(L), "height_cap": height_cap})
        tau = TwistedMukaiVector(0, E, 0, N, p)
        w = TwistedMukaiVector(p, L, Fraction(LL, 2 * p), N, p)
        value = Fraction(lat.pairing(N, L, E))
    else:
        if hyperbolic is None:
            hyperbolic = _find_unimodular_hyperbolic(N)
        if hyperbolic is None or hyperbolic[2] != 1:
            raise PreconditionError("case II needs a unimodular hyperbolic summand")
        i, j, _ = hyperbolic
        f1, f2 = N.basis_vector(i), N.basis_vector(j)
        eps = lat.pairing(N, f1, f2)
        s = 1
        c1 = lat.add(f1, lat.scale(eps * p * s, f2))
        D = f2
        tau = TwistedMukaiVector(p, c1, s, N, p)
        w = TwistedMukaiVector(0, D, Fraction(lat.pairing(N, D, L), p), N, p)
        value = Fraction(lat.pairing(N, c1, D) - lat.pairing(N, D, L))
    wit = UntwistWitness(tau, w, value, case, p)
    wit.validate()
    return wit


def _find_unimodular_hyperbolic(N: IntLattice):
    g = N.gram
    for i in range(N.rank - 1):
        j = i + 1
        if g[i][i] == 0 and g[j][j] == 0 and abs(g[i][j]) == 1:
            return (i, j, 1)
    return None


# ---------------------------------------------------------------------------


def find_principal_polarization(ns, height_cap: int = POLARIZATION_HEIGHT_CAP):
    """First class of square 2 in canonical enumeration order."""
    N = getattr(ns, "lattice", ns)
    x = next(lat.iter_vectors_of_norm(N, 2, height_cap), None)
    if x is None:
        raise InvariantError("no class of square 2 within the height cap",
                             {"height_cap": height_cap, "rank": N.rank})
    return x


def first_isotropic(ns, count: int = 1, height_cap: int = DEFAULT_HEIGHT_CAP) -> list:
    N = getattr(ns, "lattice", ns)
    return list(islice(lat.iter_isotropic(N, height_cap), count))
