"""Command-line interface.

Exit codes: 0 success, 1 a verification or batch cell failed, 2 bad input,
3 an internal invariant broke (search cap hit, witness failed its check).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import crystal, motives
from . import lattice as lat
from .catalog import build_abelian_ns, build_k3_ns, variant_table
from .errors import InvariantError, PreconditionError
from .mukai import (
    MukaiVector,
    exp_twist,
    find_generality_twist,
    is_coprime_to_p,
    mukai_pairing,
    shioda_report,
    spherical_reflect,
    twisted_pairing,
    vector_from_json,
)
from .pipeline import batch, json_safe, report, surface_lattice
from .search import (
    DEFAULT_HEIGHT_CAP,
    find_elliptic_class,
    find_elliptic_class_abelian,
    find_principal_polarization,
    find_untwisting_pair,
)

EXIT_OK, EXIT_FAIL, EXIT_PRECONDITION, EXIT_INVARIANT = 0, 1, 2, 3
DEFAULT_SEED = 20240101


def _ints(text: str) -> list:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise PreconditionError(f"expected comma-separated integers, got {text!r}") from exc


def _vals(text: str) -> list:
    out = []
    for t in text.replace(" ", "").split(","):
        if t.lower() in ("inf", "infinity", "oo"):
            out.append(None)
        elif t:
            out.append(t)
    return out


def _json_arg(text: str):
    path = Path(text)
    if not text.lstrip().startswith(("{", "[")) and path.exists():
        text = path.read_text()
    try:
        return json.loads(text)
    except ValueError as exc:
        raise PreconditionError(f"malformed JSON argument: {exc}") from exc


def _vec_arg(text: str, n: int) -> tuple:
    data = _json_arg(text) if text.strip().startswith("[") else _ints(text)
    if len(data) != n:
        raise PreconditionError(f"class has length {len(data)}, lattice rank is {n}")
    return tuple(int(x) for x in data)


# ---------------------------------------------------------------------------


def _surface(args):
    """Catalog surface from ``--p/--sigma/--kind`` or a raw ``--lattice`` JSON."""
    if getattr(args, "lattice", None):
        return lat.lattice_from_json(_json_arg(args.lattice))
    if args.p is None or args.sigma is None:
        raise PreconditionError("give --p and --sigma, or --lattice")
    return surface_lattice(args.p, args.sigma, args.kind, args.variant)


def _N(surface):
    return getattr(surface, "lattice", surface)


def _vector(args, text, surface):
    v = vector_from_json(_json_arg(text), _N(surface), args.p)
    return v


def cmd_ns_build(args):
    if args.abelian:
        ns = build_abelian_ns(args.p, args.artin)
        extra = {"artin": ns.artin}
    else:
        if args.sigma is None:
            raise PreconditionError("--sigma is required for K3 lattices")
        ns = build_k3_ns(args.p, args.sigma, args.variant or "literal")
        extra = {"sigma": ns.sigma, "variant": ns.variant}
    out = {"p": ns.p, **extra, "branch": ns.branch, "lattice": lat.lattice_to_json(ns.lattice),
           "validation": ns.validation.to_json()}
    return out, EXIT_OK


def cmd_ns_variants(args):
    return {"p": args.p, "table": variant_table(args.p, range(1, 10))}, EXIT_OK


def cmd_mukai_pair(args):
    S = _surface(args)
    v, w = _vector(args, args.v, S), _vector(args, args.w, S)
    if isinstance(v, MukaiVector) and isinstance(w, MukaiVector):
        return {"pairing": mukai_pairing(v, w)}, EXIT_OK
    return {"pairing": str(twisted_pairing(v, w))}, EXIT_OK


def cmd_mukai_twist(args):
    S = _surface(args)
    v = _vector(args, args.v, S)
    L = _vec_arg(args.L, _N(S).rank)
    return {"v": v.to_json(), "L": list(L), "result": exp_twist(v, L).to_json()}, EXIT_OK


def cmd_mukai_reflect(args):
    S = _surface(args)
    v = _vector(args, args.v, S)
    e = _vector(args, args.e, S) if args.e else MukaiVector(1, _N(S).zero(), 1, _N(S))
    return {"v": v.to_json(), "e": e.to_json(), "result": spherical_reflect(v, e).to_json()}, EXIT_OK


def cmd_mukai_general_twist(args):
    S = _surface(args)
    v = _vector(args, args.v, S)
    H = _vec_arg(args.H, _N(S).rank) if args.H else find_principal_polarization(S)
    L = find_generality_twist(v, H, args.p)
    return {"H": list(H), "L": list(L), "result": exp_twist(v, L).to_json()}, EXIT_OK


def cmd_mukai_report(args):
    S = _surface(args)
    v = _vector(args, args.v, S)
    kind = "k3" if args.kind == "k3" else "abelian_kummer"
    rep = shioda_report(v, args.p, S, kind)
    return {"v": v.to_json(), "coprime_to_p": is_coprime_to_p(v, args.p), **rep.to_json()}, EXIT_OK


def cmd_search_elliptic(args):
    S = _surface(args)
    v = _vector(args, args.v, S)
    fn = find_elliptic_class if args.kind == "k3" else find_elliptic_class_abelian
    wit = fn(S, v, args.p, args.height_cap)
    return {"witness": wit.to_json(), "verified": wit.validate(args.p)}, EXIT_OK


def cmd_search_untwist(args):
    S = _surface(args)
    L = _vec_arg(args.L, _N(S).rank)
    wit = find_untwisting_pair(S, args.p, L, args.case, args.height_cap)
    return {"witness": wit.to_json(), "verified": wit.validate()}, EXIT_OK


def cmd_search_polarization(args):
    S = _surface(args)
    x = find_principal_polarization(S)
    sq = lat.pairing(_N(S), x, x)
    return {"L": list(x), "square": sq, "verified": sq == 2}, EXIT_OK


def cmd_crystal_newton(args):
    np_ = crystal.newton_from_valuations(_vals(args.vals))
    s = crystal.slopes(np_)
    return {"vertices": np_.to_json(), "slopes": s.to_json()}, EXIT_OK


def cmd_crystal_check(args):
    s = crystal.parse_slopes(args.slopes)
    out = {"slopes": s.to_json(), "rank": s.rank,
           "supersingular": crystal.is_supersingular(s, args.degree)}
    if args.hodge:
        h = crystal.HodgeNumbers(tuple((j, m) for j, m in crystal.parse_slopes(args.hodge).items))
        out["ordinary"] = crystal.is_ordinary(crystal.polygon(s), h)
    if args.wedge is not None:
        out["wedge"] = crystal.wedge_slopes(s, args.wedge).to_json()
    return out, EXIT_OK


def _motive_out(M):
    return {**M.to_json(), "betti": motives.betti_vector(M), "tate_type": M.is_tate_type()}


def cmd_motive_abelian(args):
    d, s = motives.ssav_motive_direct(args.g), motives.ssav_motive_schur(args.g)
    return {**_motive_out(d), "schur_route_agrees": d == s}, EXIT_OK


def cmd_motive_hilbert(args):
    M = motives.hilb_motive(motives.SS_K3_MOTIVE, args.n)
    b = motives.betti_vector(M)
    oracle = motives.gottsche_poincare(motives.K3_BETTI, args.n)
    return {**_motive_out(M), "generating_function": oracle, "agrees": b == oracle}, EXIT_OK


def cmd_motive_kummer(args):
    inv = motives.kummer_inventory(args.n)
    return {
        "inventory": [s.to_json() for s in inv],
        "betti": motives.kummer_betti(args.n),
        "audit": motives.kummer_dimension_audit(args.n),
    }, EXIT_OK


def cmd_motive_canonical(args):
    return motives.canonical_from_betti(_ints(args.betti)).to_json(), EXIT_OK


def cmd_motive_chow(args):
    return motives.chow_rank_report(_ints(args.betti)), EXIT_OK


def cmd_motive_sym_audit(args):
    return {"rows": motives.sym_rank_audit(args.kmax)}, EXIT_OK


def cmd_report(args):
    sigma = args.sigma if args.sigma is not None else args.artin
    if sigma is None:
        raise PreconditionError("--sigma (or --artin) is required")
    rep = report(args.p, sigma, _json_arg(args.v), args.kind,
                 height_cap=args.height_cap, variant=args.variant)
    return rep, EXIT_OK if rep["ok"] else EXIT_INVARIANT


def cmd_batch(args):
    res = batch(args.grid, workers=args.workers, seed=args.seed_override)
    return res, EXIT_OK if res["ok"] else EXIT_FAIL


# ---------------------------------------------------------------------------


def _text(obj, indent=0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v and not _flat(v):
                lines.append(f"{pad}{k}:")
                lines.append(_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
        return "\n".join(lines)
    if isinstance(obj, list):
        return "\n".join(
            (_text(v, indent + 1) if isinstance(v, dict) else f"{pad}- {_scalar(v)}") for v in obj)
    return pad + _scalar(obj)


def _flat(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _scalar(v) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_scalar(x) for x in v) + "]"
    if isinstance(v, dict):
        return json.dumps(v)
    return str(v)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="emit JSON")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--height-cap", type=int, default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="supersingular", parents=[common],
                                     description="Exact lattice, Mukai, slope and motive computations "
                                                 "for supersingular surfaces.")
    sub = parser.add_subparsers(dest="command", required=True)

    def surface_opts(sp):
        sp.add_argument("--p", type=int, required=False)
        sp.add_argument("--sigma", type=int, help="Artin invariant (1..10, or 1..2 for abelian)")
        sp.add_argument("--kind", choices=["k3", "abelian"], default="k3")
        sp.add_argument("--variant", choices=["literal", "disc-corrected", "disc_corrected"])
        sp.add_argument("--lattice", help="lattice JSON (inline or file) instead of a catalog entry")

    def leaf(group, name, fn, help_=None):
        sp = group.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(fn=fn)
        return sp

    ns = sub.add_parser("ns", help="Neron-Severi lattice catalog").add_subparsers(dest="sub", required=True)
    sp = leaf(ns, "build", cmd_ns_build, "build and validate a catalog lattice")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--sigma", type=int)
    sp.add_argument("--variant", choices=["literal", "disc-corrected", "disc_corrected"])
    sp.add_argument("--abelian", action="store_true")
    sp.add_argument("--artin", type=int, default=1)
    sp = leaf(ns, "variants", cmd_ns_variants, "compare V-index variants for sigma 1..9")
    sp.add_argument("--p", type=int, required=True)

    mk = sub.add_parser("mukai", help="Mukai vector arithmetic").add_subparsers(dest="sub", required=True)
    sp = leaf(mk, "pair", cmd_mukai_pair)
    surface_opts(sp)
    sp.add_argument("--v", required=True)
    sp.add_argument("--w", required=True)
    sp = leaf(mk, "twist", cmd_mukai_twist)
    surface_opts(sp)
    sp.add_argument("--v", required=True)
    sp.add_argument("--L", required=True, help="comma-separated class")
    sp = leaf(mk, "reflect", cmd_mukai_reflect)
    surface_opts(sp)
    sp.add_argument("--v", required=True)
    sp.add_argument("--e", help="(-2)-vector, default (1,0,1)")
    sp = leaf(mk, "general-twist", cmd_mukai_general_twist)
    surface_opts(sp)
    sp.add_argument("--v", required=True)
    sp.add_argument("--H", help="polarization class, default first class of square 2")
    sp = leaf(mk, "report", cmd_mukai_report)
    surface_opts(sp)
    sp.add_argument("--v", required=True)

    se = sub.add_parser("search", help="constructive searches").add_subparsers(dest="sub", required=True)
    sp = leaf(se, "elliptic", cmd_search_elliptic)
    surface_opts(sp)
    sp.add_argument("--v", required=True)
    sp = leaf(se, "untwist", cmd_search_untwist)
    surface_opts(sp)
    sp.add_argument("--L", required=True)
    sp.add_argument("--case", choices=["auto", "I", "II"], default="auto")
    sp = leaf(se, "polarization", cmd_search_polarization)
    surface_opts(sp)

    cr = sub.add_parser("crystal", help="slope computations").add_subparsers(dest="sub", required=True)
    sp = leaf(cr, "newton", cmd_crystal_newton)
    sp.add_argument("--vals", required=True, help="valuations, 'inf' for zero coefficients")
    sp = leaf(cr, "check", cmd_crystal_check)
    sp.add_argument("--slopes", required=True, help='e.g. "1x22" or \'[["1/2",4]]\'')
    sp.add_argument("--degree", type=int, required=True)
    sp.add_argument("--hodge", help="Hodge numbers in slope syntax, e.g. '0x1 1x20 2x1'")
    sp.add_argument("--wedge", type=int)

    mo = sub.add_parser("motive", help="motive combinatorics").add_subparsers(dest="sub", required=True)
    sp = leaf(mo, "abelian", cmd_motive_abelian)
    sp.add_argument("--g", type=int, required=True)
    sp = leaf(mo, "hilbert", cmd_motive_hilbert)
    sp.add_argument("--n", type=int, required=True)
    sp = leaf(mo, "kummer", cmd_motive_kummer)
    sp.add_argument("--n", type=int, required=True)
    sp = leaf(mo, "canonical", cmd_motive_canonical)
    sp.add_argument("--betti", required=True)
    sp = leaf(mo, "chow-report", cmd_motive_chow)
    sp.add_argument("--betti", required=True)
    sp = leaf(mo, "sym-audit", cmd_motive_sym_audit)
    sp.add_argument("--kmax", type=int, default=12)

    sp = sub.add_parser("report", parents=[common], help="end-to-end supersingularity report")
    sp.set_defaults(fn=cmd_report)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--sigma", type=int)
    sp.add_argument("--artin", type=int)
    sp.add_argument("--v", required=True, help='Mukai vector JSON, e.g. \'{"r":1,"c1":0,"s":-1}\'')
    sp.add_argument("--kind", choices=["k3", "abelian"], default="k3")
    sp.add_argument("--variant", choices=["literal", "disc-corrected", "disc_corrected"])

    sp = sub.add_parser("batch", parents=[common], help="run a TOML/JSON parameter grid")
    sp.set_defaults(fn=cmd_batch)
    sp.add_argument("grid")
    sp.add_argument("--workers", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.json = getattr(args, "json", False)
    args.seed = getattr(args, "seed", DEFAULT_SEED)
    args.height_cap = getattr(args, "height_cap", DEFAULT_HEIGHT_CAP)
    # an explicit --seed re-seeds batch grids; otherwise grid seeds stand
    args.seed_override = args.seed if "--seed" in (argv if argv is not None else sys.argv[1:]) else None
    if args.height_cap < 1:
        return _fail(args, EXIT_PRECONDITION, PreconditionError("--height-cap must be positive"))
    try:
        out, code = args.fn(args)
    except PreconditionError as exc:
        return _fail(args, EXIT_PRECONDITION, exc)
    except InvariantError as exc:
        return _fail(args, EXIT_INVARIANT, exc)
    if args.json:
        print(json.dumps(json_safe(out)))
    else:
        print(_text(json_safe(out)))
    return code


def _fail(args, code, exc) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, InvariantError) and exc.state:
        payload["state"] = exc.state
    if args.json:
        print(json.dumps(json_safe(payload)))
    else:
        print(f"error: {exc}", file=sys.stderr)
    return code


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
