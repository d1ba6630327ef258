"""End-to-end report for ``(p, sigma, v, kind)`` and the seeded batch harness."""
from __future__ import annotations

import json
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import crystal, motives
from . import lattice as lat
from .catalog import build_abelian_ns, build_k3_ns, build_k3_ns_auto
from .errors import InvariantError, PreconditionError, SupersingularError
from .mukai import (
    MukaiVector,
    exp_twist,
    find_generality_twist,
    is_coprime_to_p,
    is_general_numeric,
    is_primitive,
    moduli_dimension,
    shioda_report,
    vector_from_json,
)
from .search import (
    DEFAULT_HEIGHT_CAP,
    find_elliptic_class,
    find_elliptic_class_abelian,
    find_principal_polarization,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

JSON_SAFE = 2**53


def json_safe(obj):
    """Replace integers beyond 2^53 by decimal strings, recursively."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, int):
        return str(obj) if abs(obj) >= JSON_SAFE else obj
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    return obj


def surface_lattice(p: int, sigma: int, kind: str, variant: str | None = None):
    kind = normalize_kind(kind)
    if kind == "abelian":
        return build_abelian_ns(p, sigma)
    if variant:
        return build_k3_ns(p, sigma, variant)
    return build_k3_ns_auto(p, sigma)


def normalize_kind(kind: str) -> str:
    kind = kind.lower().replace("-", "_")
    if kind in ("k3",):
        return "k3"
    if kind in ("abelian", "abelian_kummer", "kummer"):
        return "abelian"
    raise PreconditionError(f"unknown kind {kind!r}; expected k3 or abelian")


def report(p: int, sigma: int, v, kind: str = "k3", *,
           height_cap: int = DEFAULT_HEIGHT_CAP, variant: str | None = None) -> dict:
    """Assemble every computable consequence for a Mukai vector and re-verify it.

    ``v`` may be a :class:`MukaiVector`, a dict or a JSON string.  The
    returned bundle has a ``verified`` map; ``ok`` is true only when all of
    its entries are.
    """
    kind = normalize_kind(kind)
    ns = surface_lattice(p, sigma, kind, variant)
    N = ns.lattice
    if not isinstance(v, MukaiVector):
        v = vector_from_json(v, N, p)
        if not isinstance(v, MukaiVector):
            raise PreconditionError("report needs an integral Mukai vector")
    if v.ns != N:
        raise PreconditionError("v does not live over the requested lattice")
    if not is_primitive(v):
        c = lat.content(v.coords())
        if c % p == 0:
            raise PreconditionError(
                f"v is not coprime to p={p}: p divides r, s and c1.NS (v is {c} times a vector)")
        raise PreconditionError(f"v is not primitive (content {c})")
    if not is_coprime_to_p(v, p):
        raise PreconditionError(f"v is not coprime to p={p}")

    verified = {}
    val = ns.validation
    verified["ns_even"] = val.even
    verified["ns_signature"] = tuple(val.signature) == ((1, 21) if kind == "k3" else (1, 5))
    verified["ns_discriminant_law"] = val.matches_requested

    H = find_principal_polarization(N)
    L = find_generality_twist(v, H, p)
    v_gen = exp_twist(v, L)
    verified["generality"] = is_general_numeric(v_gen, H)
    verified["twist_preserves_square"] = v_gen.square == v.square

    search = find_elliptic_class if kind == "k3" else find_elliptic_class_abelian
    wit = search(ns, v_gen, p, height_cap)
    verified["elliptic_witness"] = wit.validate(p)

    mkind = "k3" if kind == "k3" else "abelian_kummer"
    dim = moduli_dimension(v, mkind)
    if dim >= 4:
        mrep = shioda_report(v, p, ns, mkind)
        moduli = dict(mrep.to_json(), applicable=True)
        verified["shioda_certified"] = mrep.shioda_certified
        verified["b2_matches_rank"] = mrep.vperp_rank == N.rank + 1
    else:
        moduli = {"dim": dim, "applicable": False,
                  "reason": f"dimension {dim} < 4: second Betti number formula does not apply"}

    surface_h2 = crystal.SlopeMultiset(((1, N.rank),))
    slopes = {"surface_h2": surface_h2.to_json(),
              "surface_supersingular": crystal.is_supersingular(surface_h2, 2)}
    verified["surface_h2_supersingular"] = slopes["surface_supersingular"]
    if dim >= 4:
        target = crystal.hilb_or_kummer_h2(surface_h2)
        slopes["moduli_h2"] = target.to_json()
        slopes["moduli_supersingular"] = crystal.is_supersingular(target, 2)
        verified["moduli_h2_supersingular"] = slopes["moduli_supersingular"]

    n = dim // 2
    if kind == "k3":
        mot = motives.hilb_motive(motives.SS_K3_MOTIVE, n)
        betti = motives.betti_vector(mot)
        verified["betti_matches_generating_function"] = (
            betti == motives.gottsche_poincare(motives.K3_BETTI, n))
    elif n >= 1:
        betti = motives.kummer_betti(n)
        mot = motives.canonical_from_betti(betti)
        verified["betti_poincare_dual"] = motives.is_poincare_dual(betti)
    else:
        betti, mot = [1], motives.UNIT
    chow = motives.chow_rank_report(betti)
    verified["canonical_form_round_trip"] = motives.canonical_from_betti(betti) == mot
    if kind == "k3":
        verified["tate_type"] = mot.is_tate_type() and chow["tate_type"]
        verified["chow_ab_vanish"] = all(r["ab_dim"] == 0 for r in chow["rows"])

    verified = {k: bool(x) for k, x in verified.items()}
    return {
        "inputs": {"p": p, "sigma": sigma, "v": v.to_json(), "kind": kind},
        "ns": {"branch": ns.branch, "variant": getattr(ns, "variant", None),
               "validation": val.to_json()},
        "polarization": list(H),
        "generality_twist": {"L": list(L), "v_general": v_gen.to_json()},
        "elliptic_witness": wit.to_json(),
        "moduli": moduli,
        "slopes": slopes,
        "motive": {"canonical": mot.to_json(), "betti": betti,
                   "tate_type": mot.is_tate_type(), "chow": chow},
        "verified": verified,
        "ok": all(verified.values()),
    }


# ---------------------------------------------------------------------------
# batch


def sample_vector(ns, p: int, rng: random.Random, kind: str, r_max: int = 20,
                  coeff: int = 2, max_square: int = 10, max_tries: int = 50_000) -> MukaiVector:
    """Seeded primitive coprime-to-p vector with ``min <= <v,v> <= max_square``."""
    N = getattr(ns, "lattice", ns)
    min_sq = 0 if normalize_kind(kind) == "k3" else 2
    for _ in range(max_tries):
        r = rng.randint(1, r_max)
        c1 = tuple(rng.randint(-coeff, coeff) if rng.random() < 0.3 else 0 for _ in range(N.rank))
        c1sq = lat.pairing(N, c1, c1)
        # pick s so that the square c1^2 - 2rs lands in a small admissible window
        s = (c1sq - min_sq - 2 * rng.randint(0, 3)) // (2 * r)
        if rng.random() < 0.5:
            s += 1
        v = MukaiVector(r, c1, s, N)
        if min_sq <= v.square <= max_square and is_primitive(v) and is_coprime_to_p(v, p):
            return v
    raise InvariantError("vector sampler exhausted its tries", {"p": p, "kind": kind})


def _run_cell(cell: dict) -> dict:
    t0 = time.perf_counter()
    out = {"cell": cell, "ok": False}
    try:
        mode = cell.get("mode", "report")
        kind = normalize_kind(cell.get("kind", "k3"))
        p, sigma = int(cell["p"]), int(cell["sigma"])
        ns = surface_lattice(p, sigma, kind, cell.get("variant"))
        if mode == "classify":
            val = ns.validation
            out["validation"] = val.to_json()
            out["ok"] = val.even and val.matches_requested
        elif mode == "report":
            rng = random.Random(f"{cell.get('seed', 0)}:{kind}:{p}:{sigma}")
            results = []
            for _ in range(int(cell.get("vectors", 3))):
                v = sample_vector(ns, p, rng, kind, int(cell.get("r_max", 20)))
                rep = report(p, sigma, v, kind, height_cap=int(cell.get("height_cap", DEFAULT_HEIGHT_CAP)),
                             variant=cell.get("variant"))
                results.append({"v": v.to_json(), "ok": rep["ok"], "dim": rep["moduli"]["dim"]})
            out["vectors"] = results
            out["ok"] = all(r["ok"] for r in results)
        else:
            raise PreconditionError(f"unknown batch mode {mode!r}")
    except SupersingularError as exc:
        out["error"] = {"type": type(exc).__name__, "message": str(exc)}
    out["seconds"] = round(time.perf_counter() - t0, 4)
    return out


def _as_list(x):
    if isinstance(x, dict) and {"start", "stop"} <= set(x):
        return list(range(int(x["start"]), int(x["stop"]) + 1, int(x.get("step", 1))))
    return list(x) if isinstance(x, (list, tuple)) else [x]


def load_grid(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise PreconditionError(f"cannot read grid file: {exc}") from exc
    try:
        if path.suffix == ".toml":
            return tomllib.loads(text)
        return json.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise PreconditionError(f"malformed grid file {path.name}: {exc}") from exc


def expand_grid(grid: dict) -> list:
    """Cells in grid order: explicit ``cells`` first, then the ``p x sigma`` product."""
    if not isinstance(grid, dict):
        raise PreconditionError("grid must be a table/object")
    base = {k: grid[k] for k in ("mode", "kind", "seed", "vectors", "r_max", "height_cap", "variant")
            if k in grid}
    cells = []
    for c in grid.get("cells", []):
        if "p" not in c or "sigma" not in c:
            raise PreconditionError(f"grid cell lacks p or sigma: {c}")
        cells.append({**base, **c})
    if "p" in grid:
        if "sigma" not in grid:
            raise PreconditionError("grid has p but no sigma")
        skip = {(int(a), int(b)) for a, b in grid.get("skip", [])}
        for p in _as_list(grid["p"]):
            for sigma in _as_list(grid["sigma"]):
                if (int(p), int(sigma)) not in skip:
                    cells.append({**base, "p": int(p), "sigma": int(sigma)})
    if not cells:
        raise PreconditionError("grid defines no cells")
    return cells


def batch(grid, workers: int | None = None, seed: int | None = None) -> dict:
    """Run every cell; results come back in grid order whatever the completion order."""
    if not isinstance(grid, dict):
        grid = load_grid(grid)
    cells = expand_grid(grid)
    if seed is not None:
        cells = [{**c, "seed": seed} for c in cells]
    t0 = time.perf_counter()
    if workers == 1 or len(cells) == 1:
        results = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, cells))
    return {
        "name": grid.get("name", ""),
        "cells": results,
        "passed": sum(r["ok"] for r in results),
        "failed": sum(not r["ok"] for r in results),
        "ok": all(r["ok"] for r in results),
        "seconds": round(time.perf_counter() - t0, 4),
    }
