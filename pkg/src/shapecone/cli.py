"""``shapecone`` command-line front end.

Exit status: 0 ok, 2 input error, 3 size cap exceeded, 4 internal invariant
violation.  Errors are also reported as a JSON record on stdout.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import cones as cn
from . import numeric as nm
from . import polytope as pt
from . import report as rp
from .builtins import parse_builtin
from .config import VectorConfiguration, affine_gale, enumerate_circuits, gale_dual
from .errors import InputError, InvariantViolation, ShapeconeError, TooLarge, UnsupportedBall

COMMANDS = ("gale", "domains", "typecones", "qform", "shapespace", "oracle")


# ----------------------------------------------------------------------------
# input


def _read_input(path: str, exact: Optional[bool]) -> VectorConfiguration:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    labels = ()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        rows = [ln.split("#", 1)[0].replace(",", " ").split() for ln in text.splitlines()]
        rows = [r for r in rows if r]
    else:
        if isinstance(data, dict):
            rows = data.get("vectors")
            labels = tuple(data.get("labels", ()))
        else:
            rows = data
    if not rows:
        raise InputError(f"{path}: no vectors found")
    try:
        return VectorConfiguration.from_rows(rows, exact=exact, labels=labels)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _configuration(args) -> tuple:
    if args.builtin:
        cfg = parse_builtin(args.builtin, seed=args.seed)
        if args.exact is False and cfg.exact:
            cfg = VectorConfiguration.from_rows(cfg.Vf, exact=False)
        elif args.exact and not cfg.exact:
            raise InputError(f"builtin {args.builtin!r} has irrational coordinates; exact mode unavailable")
        source = {"builtin": args.builtin}
    else:
        cfg = _read_input(args.input, args.exact)
        source = {"input": str(args.input)}
    source["vectors"] = cfg.V
    if args.seed is not None:
        source["seed"] = args.seed
    return cfg, source


def _labels(cfg, idx) -> list:
    return [cfg.labels[i] for i in sorted(idx)]


def _fan_lists(cfg, fan) -> list:
    return [_labels(cfg, c) for c in sorted(fan.maximal, key=lambda c: sorted(c))]


# ----------------------------------------------------------------------------
# commands


def cmd_gale(cfg, args, figs: list) -> dict:
    G = gale_dual(cfg)
    resid = float(np.abs(nm.as_float(cfg.V).T @ G.Vbarf).max())
    circuits = enumerate_circuits(cfg, G)
    out = {
        "n": cfg.n, "d": cfg.d, "m": G.m,
        "gale_dual": G.Vbar,
        "section": _labels(cfg, G.section),
        "basis": _labels(cfg, G.basis),
        "orthogonality_residual": resid,
        "circuits": [{"support": _labels(cfg, c.support),
                      "coefficients": [c.lam[i] for i in c.support],
                      "kind": c.kind,
                      "p": None if c.p is None else cfg.labels[c.p],
                      "mu": c.mu} for c in circuits],
    }
    try:
        A = affine_gale(G)
        out["affine_gale"] = {"normal": A.normal,
                              "points": [{"label": cfg.labels[p.source], "point": list(p.point),
                                          "color": p.color, "scale": p.alpha} for p in A.points]}
    except ShapeconeError as exc:
        out["affine_gale"] = exc.record()
    if args.svg:
        from .plotting import plot_affine_gale
        figs.append(plot_affine_gale(G, Path(args.out or ".") / "gale.svg"))
    return out


def _cone_dict(P) -> dict:
    return {"dim": P.dim, "pointed": P.is_pointed, "rays": P.rays, "lineality": P.lineality,
            "halfspaces": P.halfspaces, "equations": P.equations}


def cmd_domains(cfg, args, figs: list) -> dict:
    G = gale_dual(cfg)
    cn._check_caps(G)
    dp = cn.domains(G)
    t = G.project(np.ones(cfg.n))
    clir = _cone_dict(dp.clir)
    clir["facet_circuits"] = [{"support": _labels(cfg, c.support), "kind": c.kind,
                               "p": None if c.p is None else cfg.labels[c.p]}
                              for _, c in sorted(dp.facet_circuits.items())]
    return {"co": _cone_dict(dp.co), "clir": clir,
            "membership_of_pi_one": cn.interior_membership(t, dp, G)}


def _complex(cfg):
    G = gale_dual(cfg)
    cn._check_caps(G)
    return G, cn.explore_chambers(G)


def cmd_typecones(cfg, args, figs: list) -> dict:
    G, cx = _complex(cfg)
    chambers = [{"index": i, "fan": _fan_lists(cfg, tc.fan), "simplicial": tc.fan.simplicial,
                 "rays": tc.cone.rays, "halfspaces": tc.cone.halfspaces,
                 "interior_point": tc.cone.interior_point()}
                for i, tc in enumerate(cx.type_cones)]
    out = {"m": G.m, "count": len(chambers), "chambers": chambers,
           "flips": [list(f) for f in cx.flips],
           "flip_graph": {str(k): v for k, v in cx.flip_graph().items()},
           "boundary": [{"chamber": i, "facet": k, "circuits": [_labels(cfg, s) for s in supp]}
                        for i, k, supp in cx.boundary]}
    if G.m <= 4:
        keys = cn.arrangement_chambers(G)
        out["arrangement_agrees"] = keys == {tc.fan.key for tc in cx.type_cones}
        if not out["arrangement_agrees"]:
            raise InvariantViolation("flip walk and arrangement slicing disagree")
    if args.svg:
        from .plotting import plot_chambers
        A, _ = cn._clir_rows(G)
        figs.append(plot_chambers(G, cx.type_cones, Path(args.out or ".") / "typecones.svg", A))
    return out


def _bodies(d: int):
    from .forms import BodySpec
    if d == 2:
        return []
    if d == 3:
        return [BodySpec.ball()]
    if d == 4:
        return [BodySpec.ball(), BodySpec.ball()]
    raise UnsupportedBall(f"no default mixed-volume bodies for d = {d}")


def _ratios(M: np.ndarray) -> list:
    """Distinct values of a_ij / a_ii over i != j (rounded to 12 digits)."""
    vals = set()
    for i in range(M.shape[0]):
        if abs(M[i, i]) > 1e-300:
            for j in range(M.shape[0]):
                if i != j:
                    vals.add(round(float(M[i, j] / M[i, i]), 12) + 0.0)
    return sorted(vals)


def cmd_qform(cfg, args, figs: list) -> dict:
    from .forms import q_form
    G = gale_dual(cfg)
    cn._check_caps(G)
    bodies = _bodies(cfg.d)
    if G.m <= 4:
        tcs = cn.explore_chambers(G).type_cones
        scope = "all"
    else:
        fan = cn.chamber_of(G.project(np.ones(cfg.n)), G)
        tcs = [pt.type_cone_inequalities(fan, G, check=False)] if fan.simplicial else [cn.seed_chamber(G)]
        scope = "central"
    forms = []
    for tc in tcs:
        q = q_form(tc.fan, bodies, G, check=True, tc=tc)
        forms.append({"fan": _fan_lists(cfg, tc.fan), "gram": q.gram, "normalized": q.normalized(),
                      "signature": list(q.signature.as_tuple()),
                      "full_gram": q.full_gram,
                      "offdiagonal_ratios": _ratios(q.full_gram),
                      "meta": q.meta})
    return {"scope": scope, "bodies": [b.describe() for b in bodies], "basis": _labels(cfg, G.basis),
            "forms": forms}


def cmd_shapespace(cfg, args, figs: list) -> dict:
    from .hyperbolic import build_shape_complex
    G = gale_dual(cfg)
    cn._check_caps(G)
    sc = build_shape_complex(G, _bodies(cfg.d))
    cells = []
    for cell in sc.cells:
        cells.append({
            "fan": _fan_lists(cfg, cell.type_cone.fan),
            "signature": list(cell.form.signature.as_tuple()),
            "rays": cell.rays, "ray_kinds": cell.ray_kinds,
            "facet_normals": cell.facet_normals, "normal_kinds": cell.normal_kinds,
            "angles": [{"facets": [j, k], **e.as_dict()} for (j, k), e in sorted(cell.angles.items())],
        })
    out = {"cells": cells,
           "gluings": [{"cell": g.cell, "facet": g.facet, "other": g.other, "other_facet": g.other_facet,
                        "gram_mismatch": g.gram_mismatch} for g in sc.wall_gluings],
           "boundary_groups": [{"circuit": [cfg.labels[i] for i in k], "facets": [list(f) for f in v]}
                               for k, v in sorted(sc.boundary_facets.items())],
           "cone_angles": [ca.as_dict() for _, ca in sorted(sc.cone_angles.items())],
           "boundary_angles": [ba.as_dict() for _, ba in sorted(sc.boundary_angles.items())]}
    out["summary"] = {
        "cells": len(sc.cells),
        "ideal_vertices": sum(k == "ideal" for c in sc.cells for k in c.ray_kinds),
        "max_cone_angle_defect": max([abs(ca.total - 2 * math.pi) for ca in sc.cone_angles.values()],
                                     default=0.0),
    }
    if args.svg:
        from .plotting import plot_chambers, project_to_slice, degrees
        A, _ = cn._clir_rows(G)
        tcs = [c.type_cone for c in sc.cells]
        notes = {}
        if G.m == 3:
            for ca in sc.cone_angles.values():
                notes[project_to_slice(G, tcs, A, np.array(ca.ray[0]))] = degrees(ca.total)
            for ba in sc.boundary_angles.values():
                if len(ba.circuits) > 1:
                    notes[project_to_slice(G, tcs, A, np.array(ba.ray[0]))] = degrees(ba.total)
        figs.append(plot_chambers(G, tcs, Path(args.out or ".") / "shapespace.svg", A, notes,
                                  title="hyperbolic cells (angles in degrees)"))
    return out


def cmd_oracle(cfg, args, figs: list) -> dict:
    """Closed-form formulas evaluated next to direct computations."""
    from .forms import area_form_from_angles, form_relative_error, q_form, tetra_face_areas
    V = cfg.Vf
    out = {}
    if cfg.d == 3 and cfg.n == 4:
        h = np.zeros(4)
        h[0] = np.linalg.norm(V[0])
        P = pt.solve_polytope(V, h)
        direct = P.facet_areas
        formula = tetra_face_areas(*V)
        out["tetrahedron_face_areas"] = {"formula": formula, "direct": direct,
                                         "max_relative_error": float(np.abs(formula - direct).max()
                                                                     / np.abs(direct).max())}
    G = gale_dual(cfg)
    if cfg.d == 3 and G.m >= 1:
        cn._check_caps(G)
        tc = cn.seed_chamber(G)
        if tc.fan.simplicial:
            a = area_form_from_angles(tc.fan).full_gram
            q = q_form(tc.fan, _bodies(3), G, check=True, tc=tc)
            out["area_form"] = {"fan": _fan_lists(cfg, tc.fan), "from_angles": a,
                                "finite_difference_relative_error": q.meta.get("finite_difference_rel_error"),
                                "relative_error_vs_form": form_relative_error(a / 3.0, q.full_gram)}
    if cfg.d == 2:
        from .forms import q_form as qf
        from .hyperbolic import build_cell, orthoscheme_angles
        ang = np.arctan2(V[:, 1], V[:, 0])
        if np.any(np.diff(np.unwrap(ang)) <= 0):
            raise InputError("polygon normals must be listed counterclockwise")
        alpha = [float((ang[k] - ang[k - 1]) % (2 * math.pi)) for k in range(cfg.n)]
        table = orthoscheme_angles(alpha)
        tc = cn.seed_chamber(G)
        cell = build_cell(tc, qf(tc.fan, [], G, tc=tc), G=G)
        edge = [min(tc.walls[tc.facets[j][0]]) for j in range(cell.n_facets)]
        err = 0.0
        rows = []
        for (j, k), e in sorted(cell.angles.items()):
            o = table[tuple(sorted((edge[j], edge[k])))]
            err = max(err, abs(e.cosine ** 2 - o.cosine ** 2))
            rows.append({"edges": sorted([cfg.labels[edge[j]], cfg.labels[edge[k]]]), "closed_form": o.as_dict(),
                         "cell": e.as_dict()})
        out["orthoscheme"] = {"alpha": alpha, "pairs": rows, "max_cos2_difference": err}
    if not out:
        raise InputError("no closed-form oracle applies to this configuration")
    return out


HANDLERS = {"gale": cmd_gale, "domains": cmd_domains, "typecones": cmd_typecones, "qform": cmd_qform,
            "shapespace": cmd_shapespace, "oracle": cmd_oracle}


# ----------------------------------------------------------------------------
# driver


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shapecone",
                                 description="Type cones, mixed-volume forms and hyperbolic shape spaces "
                                             "of polytopes with fixed facet normals.")
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", metavar="NAME",
                     help="parallelepiped, ngon(n|angles), prism(n|angles), bipyramid(lambda), "
                          "dodecahedron, perturbed-bipyramid(seed, magnitude)")
    src.add_argument("--input", metavar="FILE", help="JSON {'vectors': [...]} or whitespace-separated rows")
    common.add_argument("--epsilon", type=float, default=nm.DEFAULT_EPS, help="numerical tolerance")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="exact", action="store_true", default=None,
                      help="rational arithmetic for the Gale dual and circuits")
    mode.add_argument("--float", dest="exact", action="store_false", help="floating point throughout")
    common.add_argument("--out", metavar="DIR", help="write <command>.json (and figures) here")
    common.add_argument("--svg", action="store_true", help="emit SVG figures (n - d <= 3)")
    common.add_argument("--seed", type=int, default=None, help="seed for randomized builtins")
    common.add_argument("--max-n", type=int, default=None, help="override the cap on n")
    common.add_argument("--max-d", type=int, default=None, help="override the cap on d")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {"gale": "Gale dual, affine diagram and circuits",
             "domains": "compatibility and irredundancy domains",
             "typecones": "chambers, their fans and the flip graph",
             "qform": "mixed-volume forms and signatures per chamber",
             "shapespace": "hyperbolic cells, angles and cone angles",
             "oracle": "closed-form formulas against direct computation"}
    for c in COMMANDS:
        sub.add_parser(c, parents=[common], help=helps[c])
    return ap


@contextlib.contextmanager
def _caps(args):
    """Override the size caps for one run; restored afterwards."""
    saved = (cn.CAP_N, pt.MAX_N, cn.CAP_D, pt.MAX_D)
    if args.max_n is not None:
        cn.CAP_N = pt.MAX_N = args.max_n
    if args.max_d is not None:
        cn.CAP_D = pt.MAX_D = args.max_d
    try:
        yield
    finally:
        cn.CAP_N, pt.MAX_N, cn.CAP_D, pt.MAX_D = saved


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, TooLarge):
        return 3
    if isinstance(exc, InvariantViolation):
        return 4
    if isinstance(exc, ShapeconeError):
        return 2
    return 4


def run(args) -> int:
    figs: list = []
    source = {"builtin": args.builtin} if args.builtin else {"input": args.input}
    mode = "float"
    try:
        with nm.tolerance(args.epsilon), _caps(args):
            cfg, source = _configuration(args)
            mode = "exact" if cfg.exact else "float"
            result = HANDLERS[args.command](cfg, args, figs)
        figures = [str(Path(f).name) for f in figs if f is not None]
        if figures:
            result["figures"] = figures
        report = rp.envelope(args.command, source, result, mode, args.epsilon)
        code = 0
    except Exception as exc:  # noqa: BLE001 - every failure becomes an error record
        code = _exit_code(exc)
        rec = exc.record() if isinstance(exc, ShapeconeError) else \
            {"error": "internal", "message": f"{type(exc).__name__}: {exc}"}
        report = rp.envelope(args.command, source, {"error": rec, "exit_code": code}, mode, args.epsilon)
    text = rp.dumps(report)
    if args.out:
        name = args.command if code == 0 else "error"
        rp.write_report(report, Path(args.out) / f"{name}.json")
    else:
        sys.stdout.write(text)
    if code and args.out:
        sys.stderr.write(text)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
