"""Neron-Severi lattices of supersingular K3 and abelian surfaces.

``build_k3_ns`` and ``build_abelian_ns`` return the *negated* lattices
``-Lambda`` (hyperbolic signature), together with a validation record that is
always recomputed from the Gram matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from threading import Lock

from sympy import isprime, legendre_symbol, multiplicity, nextprime

from . import lattice as lat
from .errors import InvariantError, PreconditionError
from .lattice import IntLattice

SEARCH_CAP = 10**6
VARIANTS = ("literal", "disc_corrected")


@dataclass(frozen=True)
class HpParams:
    p: int
    q: int
    gamma: int


@dataclass(frozen=True)
class Validation:
    even: bool
    rank: int
    signature: tuple
    abs_det: int
    p: int
    sigma_computed: int | None
    sigma_requested: int

    @property
    def matches_requested(self) -> bool:
        return self.sigma_computed == self.sigma_requested

    def abs_det_str(self) -> str:
        k = self.sigma_computed
        if k is None:
            return str(self.abs_det)
        return f"{self.p}^{2 * k}"

    def to_json(self) -> dict:
        return {
            "even": self.even,
            "rank": self.rank,
            "signature": list(self.signature),
            "abs_det": self.abs_det_str(),
            "sigma_computed": self.sigma_computed,
            "matches_requested": self.matches_requested,
        }


@dataclass(frozen=True)
class SSK3Lattice:
    """``-Lambda_sigma`` plus provenance.

    ``hyperbolic`` is ``(i, j, n)``: basis indices of the ``U(n)`` summand
    (after negation ``f_i . f_j = -n``).
    """

    p: int
    sigma: int
    lattice: IntLattice
    variant: str
    validation: Validation
    branch: str
    hyperbolic: tuple = (0, 1, 1)

    @property
    def rank(self):
        return self.lattice.rank


@dataclass(frozen=True)
class SSAbelianLattice:
    p: int
    artin: int
    lattice: IntLattice
    validation: Validation
    branch: str
    hyperbolic: tuple = (0, 1, 1)

    @property
    def rank(self):
        return self.lattice.rank

    @property
    def sigma(self):
        return self.artin


def _validate(L: IntLattice, p: int, requested: int) -> Validation:
    det = abs(L.det)
    k = multiplicity(p, det) if det else 0
    sigma = k // 2 if det == p**k and k % 2 == 0 else None
    return Validation(
        even=L.is_even,
        rank=L.rank,
        signature=lat.signature(L),
        abs_det=det,
        p=p,
        sigma_computed=sigma,
        sigma_requested=requested,
    )


def _require_odd_prime(p):
    if not isprime(p) or p == 2:
        raise PreconditionError(f"p must be an odd prime, got {p}")


@lru_cache(maxsize=None)
def find_hp_params(p: int) -> HpParams:
    """Smallest prime ``q = 3 mod 8`` with ``(-q|p) = -1``, then smallest gamma.

    Quadratic reciprocity makes ``-p`` a square mod such a ``q``, so a gamma
    always exists; the caps only turn a bug into a diagnostic.
    """
    _require_odd_prime(p)
    q = 2
    while True:
        q = nextprime(q)
        if q > SEARCH_CAP:
            raise InvariantError(f"no q <= {SEARCH_CAP} found for p={p}", {"p": p})
        if q % 8 != 3 or q == p:
            continue
        if legendre_symbol(-q % p, p) != -1:
            continue
        for gamma in range(q):
            if (gamma * gamma + p) % q == 0:
                return HpParams(p, q, gamma)
        raise InvariantError(f"no gamma for p={p}, q={q}", {"p": p, "q": q})


@lru_cache(maxsize=None)
def build_hp(p: int) -> IntLattice:
    """The rank-4 even positive definite lattice ``H^(p)`` with ``det = p^2``."""
    hp = find_hp_params(p)
    q, g = hp.q, hp.gamma
    return IntLattice((
        (2, 1, 0, 0),
        (1, (q + 1) // 2, 0, g),
        (0, 0, p * (q + 1) // 2, p),
        (0, g, p, 2 * (p + g * g) // q),
    ))


def vmn_generators(p: int, m: int, n: int) -> lat.RationalGeneratorSet:
    """Generators of ``V_0`` (even coordinate sum) plus the half-sum glue."""
    diag = (p,) * n + (1,) * (m - n)
    gens = []
    e = lambda i: tuple(1 if j == i else 0 for j in range(m))  # noqa: E731
    gens.append(tuple(2 * c for c in e(0)))
    for i in range(1, m):
        gens.append(tuple(a - b for a, b in zip(e(i), e(i - 1))))
    gens.append(tuple(Fraction(1, 2) for _ in range(m)))
    return lat.RationalGeneratorSet(tuple(gens), diag)


@lru_cache(maxsize=None)
def build_vmn(p: int, m: int, n: int) -> IntLattice:
    """``V^(p)_{m,n}``: rank ``m``, even, ``det = p^n``.

    Raises :class:`PreconditionError` when the glue vector has odd square,
    i.e. the parameters fall outside the range where the construction is even.
    """
    if m <= 0 or m % 2 or n % 2 or not 0 <= n <= m:
        raise PreconditionError(f"need m > 0 even and 0 <= n <= m even, got m={m}, n={n}")
    glue_sq = Fraction(n * p + (m - n), 4)
    V = lat.overlattice_from_generators(vmn_generators(p, m, n)).lattice
    if not V.is_even:
        raise PreconditionError(
            f"V^({p})_{{{m},{n}}} is not even (glue square {glue_sq})",
        )
    return V


def _k3_branch(p: int, sigma: int, variant: str):
    """Summands of ``Lambda_sigma`` and a label for the branch taken."""
    U = lat.hyperbolic_plane()
    if sigma == 10:
        return "sigma=10", [lat.hyperbolic_plane(p), build_hp(p), build_vmn(p, 16, 16)], (0, 1, p)
    if p % 4 == 3 and sigma % 2 == 1:
        return "U+V20", [U, build_vmn(p, 20, 2 * sigma)], (0, 1, 1)
    idx = 2 * sigma if variant == "literal" else 2 * sigma - 2
    return "U+H+V16", [U, build_hp(p), build_vmn(p, 16, idx)], (0, 1, 1)


_K3_CACHE: dict = {}
_K3_LOCK = Lock()


def build_k3_ns(p: int, sigma: int, variant: str = "literal") -> SSK3Lattice:
    """Neron-Severi lattice ``-Lambda_sigma`` of a supersingular K3 surface.

    ``variant`` only matters in the ``U + H^(p) + V_16`` branch: ``literal``
    uses the V-index ``2 sigma``, ``disc_corrected`` uses ``2 sigma - 2``.
    """
    variant = variant.replace("-", "_")
    if variant not in VARIANTS:
        raise PreconditionError(f"unknown variant {variant!r}")
    if p == 2:
        raise PreconditionError(
            "p = 2 supersingular K3 Gram matrices are not constructed "
            "(the classification is only cited, not reproduced)")
    _require_odd_prime(p)
    if not 1 <= sigma <= 10:
        raise PreconditionError(f"sigma must lie in 1..10, got {sigma}")
    key = (p, sigma, variant)
    cached = _K3_CACHE.get(key)
    if cached is not None:
        return cached
    try:
        branch, parts, hyp = _k3_branch(p, sigma, variant)
    except PreconditionError as exc:
        raise PreconditionError(
            f"build failed in branch p={p} (p mod 4 = {p % 4}), sigma={sigma}, "
            f"variant={variant}: {exc}") from exc
    L = lat.rescale(lat.direct_sum(*parts), -1)
    result = SSK3Lattice(p, sigma, L, variant, _validate(L, p, sigma), branch, hyp)
    with _K3_LOCK:
        _K3_CACHE.setdefault(key, result)
    return result


def build_k3_ns_auto(p: int, sigma: int) -> SSK3Lattice:
    """Prefer a variant whose validation record satisfies the discriminant law.

    Falls back to ``literal`` when no variant both builds and validates.
    """
    candidates = []
    for variant in ("disc_corrected", "literal"):
        try:
            candidates.append(build_k3_ns(p, sigma, variant))
        except PreconditionError:
            continue
    for c in candidates:
        if c.validation.matches_requested and c.validation.even:
            return c
    if not candidates:
        raise PreconditionError(f"no variant builds for p={p}, sigma={sigma}")
    return candidates[-1]


def build_abelian_ns(p: int, artin: int) -> SSAbelianLattice:
    """``-Lambda_1`` or ``-Lambda_2`` for a supersingular abelian surface."""
    if not isprime(p):
        raise PreconditionError(f"p must be prime, got {p}")
    if artin not in (1, 2):
        raise PreconditionError(f"artin invariant must be 1 or 2, got {artin}")
    if artin == 1:
        if p == 2:
            branch, parts = "U+D4", [lat.hyperbolic_plane(), lat.root_lattice_d4()]
        elif p % 4 == 3:
            branch, parts = "U+V42", [lat.hyperbolic_plane(), build_vmn(p, 4, 2)]
        else:
            branch, parts = "U+H", [lat.hyperbolic_plane(), build_hp(p)]
        hyp = (0, 1, 1)
    else:
        second = lat.root_lattice_d4() if p == 2 else build_hp(p)
        branch = "U(p)+D4" if p == 2 else "U(p)+H"
        parts = [lat.hyperbolic_plane(p), second]
        hyp = (0, 1, p)
    L = lat.rescale(lat.direct_sum(*parts), -1)
    return SSAbelianLattice(p, artin, L, _validate(L, p, artin), branch, hyp)


def artin_invariant(L: IntLattice, p: int) -> int:
    """``v_p(|det|) / 2``; raises if ``|det|`` is not an even power of ``p``.

    A unimodular lattice gives 0; range checks are left to the caller.
    """
    det = abs(L.det)
    k = multiplicity(p, det) if det else 0
    if det == 0 or det != p**k or k % 2:
        raise PreconditionError(f"|det| = {det} is not an even power of {p}")
    return k // 2


def variant_table(p: int, sigmas=range(1, 10)) -> list:
    """Side-by-side validation of both V-index variants in the H-branch."""
    rows = []
    for sigma in sigmas:
        row = {"p": p, "sigma": sigma}
        for variant in VARIANTS:
            try:
                v = build_k3_ns(p, sigma, variant).validation
                row[variant] = {
                    "built": True,
                    "even": v.even,
                    "sigma_computed": v.sigma_computed,
                    "disc_law": v.matches_requested,
                }
            except PreconditionError as exc:
                row[variant] = {"built": False, "reason": str(exc)}
        rows.append(row)
    return rows
