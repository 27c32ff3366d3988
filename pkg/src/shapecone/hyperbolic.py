"""Hyperboloid model over type cones, hyperbolic cells and the glued shape space.

Conventions.  A cell lives in quotient coordinates y in R^m with a form q of
signature (1, 0, m-1).  For a type-cone facet a . y >= 0 the inward normal is
u = G^{-1} a, scaled so that q(u) = -1 when spacelike.  For two such normals
c = q(u1, u2); the facet hyperplanes meet at dihedral angle arccos(c) when
|c| < 1, are parallel when |c| = 1 and diverge with cosh(dist) = |c| when
|c| > 1.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import numeric as nm
from .builtins import check_angles
from .cones import _circuits, _clir_rows, explore_chambers
from .config import Circuit, GaleDiagram
from .errors import (BadAngles, HypothesisFail, InvariantViolation, LowDimensional,
                     NotTimelike, ShapeconeError, WrongSignature)
from .forms import BodySpec, QuadraticForm, q_form
from .polyhedral import TypeCone
from .polytope import solve_polytope

__all__ = [
    "MinkowskiSpace", "AngleEntry", "HyperbolicCell", "Gluing", "ConeAngle", "BoundaryAngle", "ShapeComplex",
    "RightAngleReport", "ideal_ray_is_segment",
    "build_cell", "orthoscheme_angles", "hyperbolic_distance", "build_shape_complex",
    "boundary_right_angle_check", "interior_cone_angle", "facet_projection",
    "IDEAL_TOL", "PARALLEL_TOL", "ANGLE_TOL",
]

IDEAL_TOL = 1e-9        # |q| on Euclidean-unit rays, with the form scaled to max |entry| = 1
PARALLEL_TOL = 1e-9     # ||c| - 1| below which facet pairs are reported Parallel
ANGLE_TOL = 1e-6        # flatness tolerance for total cone angles (radians)
GLUE_TOL = 1e-7         # relative disagreement of wall Gram matrices that is fatal


@dataclass(eq=False)
class MinkowskiSpace:
    """R^m with a Lorentzian form; ``time`` picks the upper sheet."""

    gram: np.ndarray
    time: np.ndarray

    @classmethod
    def from_form(cls, form: QuadraticForm, time) -> "MinkowskiSpace":
        A = np.asarray(form.gram, dtype=float)
        sig = form.signature
        if (sig.positive, sig.zero, sig.negative) != (1, 0, A.shape[0] - 1):
            raise WrongSignature(f"signature {sig} is not (1,0,{A.shape[0] - 1})")
        t = np.asarray(time, dtype=float)
        if t @ A @ t <= 0:
            raise WrongSignature("time-orientation vector is not timelike")
        return cls(A, t)

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    def inner(self, x, y) -> float:
        return float(np.asarray(x, dtype=float) @ self.gram @ np.asarray(y, dtype=float))

    def q(self, x) -> float:
        return self.inner(x, x)

    def future(self, x) -> bool:
        return self.inner(x, self.time) > 0

    def dual(self, a) -> np.ndarray:
        """Vector u with q(u, y) = a . y."""
        return np.linalg.solve(self.gram, np.asarray(a, dtype=float))

    def to_hyperboloid(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        v = self.q(x)
        if v <= 0:
            raise NotTimelike("point is not timelike")
        x = x / math.sqrt(v)
        return x if self.future(x) else -x


@dataclass(frozen=True)
class AngleEntry:
    kind: str            # "angle" | "diverge" | "parallel" | "undefined"
    value: float         # dihedral angle, cosh of the distance, or nan
    cosine: float        # raw q(u1, u2)
    adjacent: bool       # the facets share a codimension-2 face of the cell

    def as_dict(self) -> dict:
        return {"kind": self.kind, "value": self.value, "cosine": self.cosine, "adjacent": self.adjacent}


def _classify_pair(c: float, adjacent: bool) -> AngleEntry:
    if abs(abs(c) - 1.0) <= PARALLEL_TOL:
        return AngleEntry("parallel", 0.0 if c > 0 else math.pi, c, adjacent)
    if abs(c) < 1.0:
        return AngleEntry("angle", math.acos(c), c, adjacent)
    return AngleEntry("diverge", abs(c), c, adjacent)


@dataclass(eq=False)
class HyperbolicCell:
    space: MinkowskiSpace
    type_cone: TypeCone
    form: QuadraticForm
    rays: np.ndarray                # Finite rays scaled to q = 1, Ideal rays Euclidean unit
    ray_kinds: list                 # "finite" | "ideal"
    ray_values: np.ndarray          # q on Euclidean-unit rays of the scaled form
    facet_normals: np.ndarray       # rows; spacelike ones scaled to q = -1
    normal_kinds: list              # "spacelike" | "lightlike" | "timelike"
    angles: dict                    # (j, k) with j < k -> AngleEntry
    adjacency: set                  # facet pairs sharing a codimension-2 face

    @property
    def n_facets(self) -> int:
        return self.facet_normals.shape[0]

    def vertices(self, kind: Optional[str] = None) -> np.ndarray:
        idx = [i for i, k in enumerate(self.ray_kinds) if kind is None or k == kind]
        return self.rays[idx]

    def angle(self, j: int, k: int) -> AngleEntry:
        return self.angles[(min(j, k), max(j, k))]

    def dihedral(self, j: int, k: int) -> float:
        e = self.angle(j, k)
        if e.kind != "angle":
            raise HypothesisFail(f"facets {j} and {k} do not intersect ({e.kind})")
        return e.value


def _facet_adjacency(tc: TypeCone, eps: float = 1e-7) -> set:
    H = tc.cone.halfspaces
    R = tc.cone.rays
    m = H.shape[1]
    tight = np.abs(R @ H.T) <= eps
    adj = set()
    for j, k in itertools.combinations(range(H.shape[0]), 2):
        common = R[tight[:, j] & tight[:, k]]
        if m == 2 or (len(common) and nm.rank(common) == m - 2):
            adj.add((j, k))
    return adj


def build_cell(tc: TypeCone, q: QuadraticForm, time=None, G: Optional[GaleDiagram] = None) -> HyperbolicCell:
    """H(Delta): section of cl T(Delta) by q = 1 with vertex and angle data."""
    m = q.gram.shape[0]
    if tc.dim != m:
        raise LowDimensional(f"type cone has dimension {tc.dim} < {m}")
    if time is None:
        time = G.project(np.ones(G.config.n)) if G is not None else tc.cone.interior_point()
    time = np.asarray(time, dtype=float)
    if time @ q.gram @ time <= 0:
        time = tc.cone.interior_point()
    space = MinkowskiSpace.from_form(q, time)
    A = space.gram
    scale = np.abs(A).max()
    R = tc.cone.rays
    qs = np.einsum("ij,jk,ik->i", R, A, R) / scale
    if np.any(qs < -1e-7):
        raise InvariantViolation(f"form is negative on a type-cone ray ({qs.min():.3e})")
    kinds, rays = [], []
    for r, v in zip(R, qs):
        if abs(v) <= IDEAL_TOL:
            kinds.append("ideal")
            rays.append(r)
        else:
            kinds.append("finite")
            rays.append(r / math.sqrt(v * scale))
    H = tc.cone.halfspaces
    normals, nkinds = [], []
    for a in H:
        u = space.dual(a)
        v = space.q(u)
        tol = 1e-12 * np.linalg.norm(a) * np.linalg.norm(u)
        if v < -tol:
            normals.append(u / math.sqrt(-v))
            nkinds.append("spacelike")
        elif v > tol:
            normals.append(u / math.sqrt(v))
            nkinds.append("timelike")
        else:
            normals.append(u / np.linalg.norm(u))
            nkinds.append("lightlike")
    normals = np.array(normals).reshape(-1, m)
    adj = _facet_adjacency(tc)
    angles = {}
    for j, k in itertools.combinations(range(len(normals)), 2):
        if nkinds[j] == nkinds[k] == "spacelike":
            angles[(j, k)] = _classify_pair(space.inner(normals[j], normals[k]), (j, k) in adj)
        else:
            angles[(j, k)] = AngleEntry("undefined", float("nan"), space.inner(normals[j], normals[k]),
                                        (j, k) in adj)
    return HyperbolicCell(space, tc, q, np.array(rays).reshape(-1, m), kinds, qs, normals, nkinds,
                          angles, adj)


def ideal_ray_is_segment(cell: HyperbolicCell, k: int, G: GaleDiagram) -> bool:
    """Geometric check of an ideal ray: the degenerate body is a segment."""
    V = G.config.Vf
    try:
        P = solve_polytope(V, G.lift(cell.type_cone.cone.rays[k]))
    except ShapeconeError:
        return False
    if P.dim != 1:
        return False
    # normals orthogonal to the segment positively span its orthogonal complement
    e = P.vertices[1] - P.vertices[0]
    e = e / np.linalg.norm(e)
    perp = [v for v in V if abs(v @ e) <= 1e-7 * np.linalg.norm(v)]
    return len(perp) > 0 and nm.rank(np.array(perp)) == V.shape[1] - 1


# ----------------------------------------------------------------------------
# closed forms and distances


def orthoscheme_angles(alpha: Sequence[float]) -> dict:
    """Facet-pair table of the polygon type cone with angles ``alpha``.

    ``alpha[k]`` is the exterior angle between normals v_{k-1} and v_k, as in
    ``polygon_normals``; facet k is the vanishing of edge k.  Keys are pairs
    (j, k) of facet indices with j < k; only facets that exist
    (alpha[k] + alpha[k+1] < pi) appear.
    """
    a = np.asarray(alpha, dtype=float)
    n = len(a)
    check_angles(a)
    if n < 5:
        raise BadAngles("orthoscheme angles need n >= 5")
    exists = [a[k] + a[(k + 1) % n] < math.pi for k in range(n)]
    out = {}
    for k in range(n):
        j = (k - 1) % n
        if not (exists[j] and exists[k]):
            continue
        c2 = (math.sin(a[j]) * math.sin(a[(k + 1) % n])
              / (math.sin(a[j] + a[k]) * math.sin(a[k] + a[(k + 1) % n])))
        key = (min(j, k), max(j, k))
        if abs(c2 - 1.0) <= PARALLEL_TOL:
            out[key] = AngleEntry("parallel", 0.0, 1.0, True)
        elif c2 < 1.0:
            out[key] = AngleEntry("angle", math.acos(math.sqrt(c2)), math.sqrt(c2), True)
        else:
            out[key] = AngleEntry("diverge", math.sqrt(c2), math.sqrt(c2), True)
    for j, k in itertools.combinations(range(n), 2):
        if (j, k) not in out and exists[j] and exists[k]:
            out[(j, k)] = AngleEntry("angle", math.pi / 2, 0.0, False)
    return out


def hyperbolic_distance(space: MinkowskiSpace, p1, p2) -> float:
    q1, q2 = space.q(p1), space.q(p2)
    if q1 <= 0 or q2 <= 0:
        raise NotTimelike("both points must have q > 0")
    if space.future(p1) != space.future(p2):
        raise NotTimelike("points lie on opposite sheets")
    c = space.inner(p1, p2) / math.sqrt(q1 * q2)
    return math.acosh(max(1.0, c))


def facet_projection(space: MinkowskiSpace, p, u) -> np.ndarray:
    """q-orthogonal projection of p onto the hyperplane q(u, .) = 0, u spacelike."""
    u = np.asarray(u, dtype=float)
    return np.asarray(p, dtype=float) - space.inner(p, u) / space.q(u) * u


# ----------------------------------------------------------------------------
# the glued complex


@dataclass(frozen=True)
class Gluing:
    cell: int
    facet: int
    other: int
    other_facet: int
    gram_mismatch: float        # max |difference| of wall Gram matrices, relative


@dataclass(frozen=True)
class ConeAngle:
    ray: tuple                  # unit direction of the stratum (rounded) or its span key
    cells: tuple                # (cell, facet j, facet k) incidences
    angles: tuple
    total: float
    flat: bool
    forms_agree: bool           # sufficient condition: one smooth metric around the stratum
    has_right_angle: bool

    def as_dict(self) -> dict:
        return {"ray": list(self.ray), "cells": [list(c) for c in self.cells], "angles": list(self.angles),
                "total": self.total, "flat": self.flat, "forms_agree": self.forms_agree,
                "has_right_angle": self.has_right_angle}


@dataclass(frozen=True)
class BoundaryAngle:
    ray: tuple
    cells: tuple                # (cell, facet j, facet k) incidences
    circuits: tuple             # supports of the boundary pieces through the stratum
    angles: tuple
    total: float

    def as_dict(self) -> dict:
        return {"ray": list(self.ray), "cells": [list(c) for c in self.cells],
                "circuits": [list(c) for c in self.circuits], "angles": list(self.angles), "total": self.total}


@dataclass(eq=False)
class ShapeComplex:
    G: GaleDiagram
    cells: list
    wall_gluings: list
    boundary_facets: dict        # circuit support (sorted tuple) -> [(cell, facet)]
    cone_angles: dict            # interior stratum key -> ConeAngle
    boundary_angles: dict = field(default_factory=dict)   # boundary stratum key -> BoundaryAngle
    strata: dict = field(default_factory=dict)            # interior stratum key -> [(cell, j, k)]

    def circuit(self, support) -> Circuit:
        s = frozenset(support)
        for c in _circuits(self.G):
            if frozenset(c.support) == s:
                return c
        raise KeyError(f"no circuit with support {sorted(s)}")


def _wall_gram_mismatch(ci: HyperbolicCell, fi: int, cj: HyperbolicCell) -> float:
    a = ci.type_cone.cone.halfspaces[fi]
    K = nm.kernel_basis(a.reshape(1, -1))
    Gi = K.T @ ci.form.gram @ K
    Gj = K.T @ cj.form.gram @ K
    return float(np.abs(Gi - Gj).max() / max(np.abs(Gi).max(), 1e-300))


def _stratum_key(rays: np.ndarray) -> tuple:
    R = rays / np.linalg.norm(rays, axis=1, keepdims=True)
    return tuple(sorted(tuple(float(x) for x in np.round(r, 7) + 0.0) for r in R))


def _cell_strata(cell: HyperbolicCell, eps: float = 1e-7) -> list:
    """(key, j, k, relint point) for each codimension-2 face of the cell's cone."""
    H = cell.type_cone.cone.halfspaces
    R = cell.type_cone.cone.rays
    tight = np.abs(R @ H.T) <= eps
    out = []
    for j, k in sorted(cell.adjacency):
        face = R[tight[:, j] & tight[:, k]]
        if len(face) == 0:
            continue
        out.append((_stratum_key(face), j, k, face.sum(axis=0)))
    return out


def _strictly_inside_clir(G: GaleDiagram, y, eps: float = 1e-7) -> bool:
    A, _ = _clir_rows(G)
    if not A.shape[0]:
        return True
    An = A / np.linalg.norm(A, axis=1, keepdims=True)
    return bool(np.all(An @ y > eps * np.linalg.norm(y)))


def build_shape_complex(G: GaleDiagram, bodies: Optional[Sequence[BodySpec]] = None) -> ShapeComplex:
    """M(V): all chamber cells, their gluings, boundary groups and interior cone angles."""
    d = G.config.d
    if bodies is None:
        if d == 2:
            bodies = []
        elif d == 3:
            bodies = [BodySpec.ball()]
        else:
            raise HypothesisFail("bodies must be supplied for d > 3")
    cx = explore_chambers(G)
    t = G.project(np.ones(G.config.n))
    cells = []
    for tc in cx.type_cones:
        f = q_form(tc.fan, bodies, G, check=True, tc=tc)
        cells.append(build_cell(tc, f, time=t, G=G))
    gluings = []
    for i, fi, j, fj in cx.flips:
        mis = _wall_gram_mismatch(cells[i], fi, cells[j])
        if mis > GLUE_TOL:
            raise InvariantViolation(f"forms disagree on the wall between cells {i} and {j} ({mis:.2e})")
        gluings.append(Gluing(i, fi, j, fj, mis))
    boundary = {}
    for i, k, supports in cx.boundary:
        for s in supports:
            boundary.setdefault(tuple(sorted(s)), []).append((i, k))
    on_boundary = {}
    for supp, places in boundary.items():
        for c, f in places:
            on_boundary.setdefault((c, f), []).append(supp)
    strata, bstrata = {}, {}
    for ci, cell in enumerate(cells):
        for key, j, k, p in _cell_strata(cell):
            target = strata if _strictly_inside_clir(G, p) else bstrata
            target.setdefault(key, []).append((ci, j, k))
    sc = ShapeComplex(G, cells, gluings, boundary, {}, {}, strata)
    sc.cone_angles = {key: interior_cone_angle(sc, key) for key in sorted(strata)}
    for key in sorted(bstrata):
        inc = bstrata[key]
        if any(cells[ci].angle(j, k).kind != "angle" for ci, j, k in inc):
            continue            # ideal or non-timelike stratum, no finite angle
        circ = sorted({supp for ci, j, k in inc for f in (j, k) for supp in on_boundary.get((ci, f), [])})
        angles = tuple(cells[ci].angle(j, k).value for ci, j, k in inc)
        sc.boundary_angles[key] = BoundaryAngle(key, tuple(inc), tuple(circ), angles, float(sum(angles)))
    return sc


def interior_cone_angle(sc: ShapeComplex, stratum) -> ConeAngle:
    inc = sc.strata[stratum]
    angles = []
    for ci, j, k in inc:
        e = sc.cells[ci].angle(j, k)
        if e.kind != "angle":
            raise InvariantViolation(f"cell {ci}: facets {j}, {k} do not meet in an interior stratum")
        angles.append(e.value)
    total = float(sum(angles))
    grams = [sc.cells[ci].form.gram for ci, _, _ in inc]
    s = max(np.abs(g).max() for g in grams)
    agree = all(np.abs(g - grams[0]).max() <= 1e-9 * s for g in grams)
    right = any(abs(a - math.pi / 2) <= ANGLE_TOL for a in angles)
    return ConeAngle(stratum, tuple(inc), tuple(angles), total, abs(total - 2 * math.pi) <= ANGLE_TOL,
                     agree, right)


@dataclass(frozen=True)
class RightAngleReport:
    angles: tuple               # measured dihedral angles, one per incident cell
    cells: tuple
    c1: float
    c2: float
    residual: float             # max |row p1, p2| of q - c1 f1^2 - c2 f2^2, relative


def boundary_right_angle_check(sc: ShapeComplex, C1, C2) -> RightAngleReport:
    """Dihedral angles of M along the meeting of the boundary pieces of C1 and C2."""
    C1 = C1 if isinstance(C1, Circuit) else sc.circuit(C1)
    C2 = C2 if isinstance(C2, Circuit) else sc.circuit(C2)
    d = sc.G.config.d
    for C in (C1, C2):
        if C.kind != "hyperbolic":
            raise HypothesisFail(f"circuit {sorted(C.support)} is not hyperbolic")
        if len(C.support) != d + 1:
            raise HypothesisFail(f"circuit {sorted(C.support)} does not have d + 1 elements")
    if C1.p in C2.support or C2.p in C1.support:
        raise HypothesisFail("p(C1) lies in C2 or p(C2) lies in C1")
    k1, k2 = tuple(sorted(C1.support)), tuple(sorted(C2.support))
    hits = [ba for ba in sc.boundary_angles.values() if k1 in ba.circuits and k2 in ba.circuits]
    if not hits:
        raise HypothesisFail("the two boundary pieces do not meet in codimension 2")
    angles = tuple(ba.total for ba in hits)
    inc = [c for ba in hits for c in ba.cells]
    p1, p2 = C1.p, C2.p
    l1, l2 = np.asarray(C1.lamf, dtype=float), np.asarray(C2.lamf, dtype=float)
    c1s, c2s, res = [], [], []
    for c, _, _ in inc:
        A = sc.cells[c].form.full_gram
        c1, c2 = A[p1, p1] / l1[p1] ** 2, A[p2, p2] / l2[p2] ** 2
        Rm = A - c1 * np.outer(l1, l1) - c2 * np.outer(l2, l2)
        res.append(float(np.abs(Rm[[p1, p2]]).max() / np.abs(A).max()))
        c1s.append(c1)
        c2s.append(c2)
    return RightAngleReport(angles, tuple(sorted({c for c, _, _ in inc})), float(max(c1s)), float(max(c2s)),
                            max(res))
