"""Mixed volumes and the quadratic forms q(h) = vol(P(h), P(h), K_1, ..., K_{d-2}).

Conventions: a form is stored as a symmetric matrix A with q(h) = h^T A h.
``full_gram`` acts on support vectors in R^n; ``gram`` on quotient
coordinates y (the Gale section sets h_B = 0, so gram = full_gram[N, N]).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import numeric as nm
from .config import GaleDiagram
from .errors import (DegenerateSum, InputError, InvariantViolation, NotInterior, NotSimplicial,
                     NotSpanning, UnsupportedBall)
from .polyhedral import AbstractFan, TypeCone
from .polytope import ConcretePolytope, solve_polytope, support_function, \
    type_cone_inequalities


# ----------------------------------------------------------------------------
# bodies


@dataclass(frozen=True)
class BodySpec:
    """A body entering the mixed volume: a polytope or the unit ball."""
    kind: str                                  # "polytope" | "ball"
    polytope: Optional[ConcretePolytope] = None

    @staticmethod
    def ball() -> "BodySpec":
        return BodySpec("ball")

    @staticmethod
    def of(P: ConcretePolytope) -> "BodySpec":
        return BodySpec("polytope", P)

    @staticmethod
    def from_support(V, h) -> "BodySpec":
        return BodySpec("polytope", solve_polytope(V, h))

    def describe(self) -> dict:
        if self.kind == "ball":
            return {"kind": "ball"}
        return {"kind": "polytope", "h": list(map(float, self.polytope.h))}


def _pts(b) -> np.ndarray:
    if isinstance(b, ConcretePolytope):
        return b.vertices
    if isinstance(b, BodySpec):
        if b.kind != "polytope":
            raise UnsupportedBall("mixed volumes of the ball are not computed directly")
        return b.polytope.vertices
    return np.atleast_2d(np.asarray(b, dtype=float))


def _hull_points(P: np.ndarray) -> np.ndarray:
    """Vertices of conv(P) (all points if the hull is degenerate)."""
    if len(P) <= P.shape[1] + 1 or nm.rank(P[1:] - P[0]) < P.shape[1]:
        return np.unique(np.round(P, 12), axis=0)
    try:
        return P[ConvexHull(P).vertices]
    except QhullError:
        return P


def minkowski_points(clouds: Sequence[np.ndarray]) -> np.ndarray:
    out = clouds[0]
    for C in clouds[1:]:
        out = _hull_points((out[:, None, :] + C[None, :, :]).reshape(-1, out.shape[1]))
    return out


def hull_volume(P: np.ndarray) -> float:
    d = P.shape[1]
    if len(P) <= d or nm.rank(P[1:] - P[0]) < d:
        return 0.0
    try:
        return float(ConvexHull(P).volume)
    except QhullError:
        return 0.0


def mixed_volume(bodies, method: str = "polarization") -> float:
    """vol(K_1, ..., K_d) for bounded polytopes (vertex sets or ConcretePolytopes).

    ``polarization``: inclusion-exclusion over partial Minkowski sums.
    ``grid``: fit the volume polynomial on the lambda-grid {1..d}^d.
    """
    pts = [_pts(b) for b in bodies]
    d = pts[0].shape[1]
    if len(pts) != d:
        raise InputError(f"need {d} bodies, got {len(pts)}")
    if method == "polarization":
        total = 0.0
        for k in range(1, d + 1):
            for S in itertools.combinations(range(d), k):
                total += (-1) ** (d - k) * hull_volume(minkowski_points([pts[i] for i in S]))
        return total / math.factorial(d)
    if method == "grid":
        monos = [c for c in itertools.combinations_with_replacement(range(d), d)]
        lams = list(itertools.product(range(1, d + 1), repeat=d))
        M = np.array([[np.prod([lam[i] for i in mono]) for mono in monos] for lam in lams], dtype=float)
        if np.linalg.cond(M) > 1.0 / nm.get_eps():
            raise DegenerateSum("interpolation system is ill-conditioned")
        vals = np.array([hull_volume(minkowski_points([l * p for l, p in zip(lam, pts)])) for lam in lams])
        coef, *_ = np.linalg.lstsq(M, vals, rcond=None)
        k = monos.index(tuple(range(d)))
        return float(coef[k] / math.factorial(d))
    raise InputError(f"unknown method {method!r}")


def positivity_witness(bodies) -> bool:
    """Segments with independent directions exist in the bodies (Rado's condition)."""
    dirs = []
    for b in bodies:
        P = _pts(b)
        dirs.append(P[1:] - P[0] if len(P) > 1 else np.zeros((0, P.shape[1])))
    k = len(dirs)
    for r in range(1, k + 1):
        for S in itertools.combinations(range(k), r):
            D = np.vstack([dirs[i] for i in S])
            if (nm.rank(D) if D.size else 0) < r:
                return False
    return True


# ----------------------------------------------------------------------------
# evaluation of q at a support vector


def _check_bodies(d: int, bodies: Sequence[BodySpec]):
    if len(bodies) != d - 2:
        raise InputError(f"d = {d} needs {d - 2} bodies, got {len(bodies)}")
    balls = sum(b.kind == "ball" for b in bodies)
    if balls and not (d == 3 or (d == 4 and balls == 2)):
        raise UnsupportedBall(f"unit ball supported for d = 3, or d = 4 with two balls (d = {d})")


def _two_face_measure(P: ConcretePolytope) -> float:
    """(1/12) sum over 2-faces of exterior angle times area (d = 4)."""
    total = 0.0
    V = P.V / np.linalg.norm(P.V, axis=1, keepdims=True)
    for i, j in itertools.combinations(P.facets, 2):
        S = P.face_vertices([i, j])
        if len(S) >= 3 and np.linalg.matrix_rank(P.vertices[S][1:] - P.vertices[S][0], tol=1e-9) == 2:
            theta = math.acos(max(-1.0, min(1.0, float(V[i] @ V[j]))))
            total += theta * P.face_volume(S, 2)
    return total / 12.0


def q_value(V, h, bodies: Sequence[BodySpec]) -> float:
    """vol(P(h), P(h), bodies...) evaluated directly."""
    V = nm.as_float(V)
    d = V.shape[1]
    _check_bodies(d, bodies)
    P = solve_polytope(V, h)
    if d == 2:
        return P.face_volume(range(len(P.vertices)), 2) if P.dim == 2 else 0.0
    if P.dim < d:
        return _q_dim_deficient(P, bodies)
    if d == 3:
        K = bodies[0]
        U = V / np.linalg.norm(V, axis=1, keepdims=True)
        areas = P.facet_areas
        if K.kind == "ball":
            return float(areas.sum() / 3.0)
        return float(sum(support_function(K.polytope, U[i]) * areas[i] for i in P.facets) / 3.0)
    if d == 4 and all(b.kind == "ball" for b in bodies):
        return _two_face_measure(P) if P.dim == 4 else _q_dim_deficient(P, bodies)
    return mixed_volume([P, P] + [b.polytope for b in bodies])


def _q_dim_deficient(P: ConcretePolytope, bodies) -> float:
    """Lower-dimensional P(h) (closure of a type cone)."""
    d = P.d
    if all(b.kind == "polytope" for b in bodies):
        return mixed_volume([P, P] + [b.polytope for b in bodies])
    if d == 3 and P.dim == 2:
        # flat polygon: both sides count towards the surface area
        return 2.0 * P.face_volume(range(len(P.vertices)), 2) / 3.0
    if d == 3:
        return 0.0
    if d == 4 and P.dim == 2:
        # a flat polygon in R^4: its normal cone is a 2-plane (angle 2 pi)
        return 2 * math.pi * P.face_volume(range(len(P.vertices)), 2) / 12.0
    if d == 4 and P.dim < 2:
        return 0.0
    raise UnsupportedBall("degenerate body with ball arguments in d = 4")


# ----------------------------------------------------------------------------
# forms


@dataclass(eq=False)
class QuadraticForm:
    gram: np.ndarray                    # quotient coordinates
    full_gram: np.ndarray               # support-vector coordinates
    fan: Optional[AbstractFan]
    bodies: list
    signature: nm.Signature
    basis: tuple = ()                   # Gale basis N (quotient coordinate indices)
    type_cone: Optional[TypeCone] = None
    span_basis: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def value(self, y) -> float:
        y = np.asarray(y, dtype=float)
        return float(y @ self.gram @ y)

    def bilinear(self, x, y) -> float:
        return float(np.asarray(x, dtype=float) @ self.gram @ np.asarray(y, dtype=float))

    def value_full(self, h) -> float:
        h = np.asarray(h, dtype=float)
        return float(h @ self.full_gram @ h)

    def normalized(self) -> np.ndarray:
        return self.gram / np.abs(self.gram).max()

    @property
    def full_signature(self) -> nm.Signature:
        A = self.full_gram
        with nm.tolerance(max(nm.get_eps(), 1e-8)):
            return nm.symmetric_signature((A + A.T) / 2)


def _make_form(A: np.ndarray, G: GaleDiagram, fan, bodies, tc=None, span=None, meta=None) -> QuadraticForm:
    A = (A + A.T) / 2
    N = list(G.basis)
    gram = A[np.ix_(N, N)]
    with nm.tolerance(max(nm.get_eps(), 1e-8)):
        sig = nm.symmetric_signature(gram)
    return QuadraticForm(gram, A, fan, list(bodies), sig, tuple(N), tc, span, meta or {})


def polarize(f, h0: np.ndarray, s: float, basis: np.ndarray) -> np.ndarray:
    """Gram matrix (in the given basis columns) of a quadratic f valid near h0."""
    k = basis.shape[1]
    f0 = f(h0)
    single = [f(h0 + s * basis[:, i]) for i in range(k)]
    A = np.zeros((k, k))
    for i in range(k):
        A[i, i] = (f(h0 + 2 * s * basis[:, i]) - 2 * single[i] + f0) / (2 * s * s)
        for j in range(i + 1, k):
            A[i, j] = A[j, i] = (f(h0 + s * basis[:, i] + s * basis[:, j]) - single[i] - single[j] + f0) / (2 * s * s)
    return A


def _interior_and_step(tc: TypeCone, G: GaleDiagram):
    y0 = tc.cone.interior_point()
    y0 = y0 / np.linalg.norm(y0)
    h0 = G.lift(y0)
    C = tc.functionals
    margin = float((C @ h0).min())
    if margin <= 0:
        raise InvariantViolation("interior point of the type cone has a non-positive edge")
    s = margin / (4.0 * np.abs(C).max())
    return h0, s


def _polarized_full(f, tc: TypeCone, G: GaleDiagram):
    n = G.config.n
    h0, s = _interior_and_step(tc, G)
    if tc.fan.simplicial:
        return polarize(f, h0, s, np.eye(n)), None
    # the type cone spans a proper subspace; polarize on span + translations
    E = tc.equations
    Kq = nm.kernel_basis(E) if E.shape[0] else np.eye(G.m)
    B = np.hstack([np.array([G.lift(k) for k in Kq.T]).T, G.config.Vf])
    Q = nm.row_space_basis(B.T).T
    As = polarize(f, h0, s, Q)
    Pinv = Q.T
    return Pinv.T @ As @ Pinv, Q


def q_form(fan: AbstractFan, bodies: Sequence[BodySpec], G: GaleDiagram, check: bool = True,
           tc: Optional[TypeCone] = None) -> QuadraticForm:
    V = G.config.Vf
    d = V.shape[1]
    _check_bodies(d, bodies)
    tc = tc or type_cone_inequalities(fan, G, check=check)
    meta = {}
    use_angles = d == 3 and bodies[0].kind == "ball" and fan.simplicial
    f = lambda h: q_value(V, h, bodies)  # noqa: E731
    if use_angles:
        A = area_form_from_angles(fan).full_gram / 3.0
        if check:
            Ap, _ = _polarized_full(f, tc, G)
            rel = np.abs(Ap - A).max() / np.abs(A).max()
            meta["finite_difference_rel_error"] = float(rel)
            if rel > 1e-6:
                raise InvariantViolation(f"angle formula and finite differences differ ({rel:.2e})")
        return _make_form(A, G, fan, bodies, tc, None, meta)
    A, span = _polarized_full(f, tc, G)
    return _make_form(A, G, fan, bodies, tc, span, meta)


def weighted_area_form(G: GaleDiagram, h0, fan: Optional[AbstractFan] = None) -> QuadraticForm:
    """Form of h -> sum_i h0_i area(F_i(h)) on the chamber of ``fan``."""
    from .cones import _in_int_clir, chamber_of, seed_chamber
    V = G.config.Vf
    if V.shape[1] != 3:
        raise InputError("weighted area form needs d = 3")
    h0 = np.asarray(h0, dtype=float)
    if not _in_int_clir(G.project(h0), G):
        raise NotInterior("pi(h0) is not in the interior of ir(V)")
    if fan is None:
        fan = chamber_of(G.project(h0), G)
        if not fan.simplicial:
            fan = seed_chamber(G).fan
    tc = type_cone_inequalities(fan, G, check=False)

    def f(h):
        P = solve_polytope(V, h)
        return float(h0 @ P.facet_areas) if P.dim == 3 else 0.0
    A, span = _polarized_full(f, tc, G)
    return _make_form(A, G, fan, [BodySpec.of(solve_polytope(V, h0))], tc, span, {"weights": list(map(float, h0))})


# ----------------------------------------------------------------------------
# Alexandrov-Fenchel


AF_EQ_TOL = 1e-10


@dataclass(frozen=True)
class AFResult:
    verdict: str            # "Strict" | "Equality" | "VIOLATION"
    gap: float
    scale: float
    values: tuple           # vol(K,K,..), vol(K,L,..), vol(L,L,..)


def af_check(V, hK, hL, bodies: Sequence[BodySpec], tol: float = AF_EQ_TOL) -> AFResult:
    hK = np.asarray(hK, dtype=float)
    hL = np.asarray(hL, dtype=float)
    kk = q_value(V, hK, bodies)
    ll = q_value(V, hL, bodies)
    ss = q_value(V, hK + hL, bodies)
    kl = (ss - kk - ll) / 2
    gap = kl * kl - kk * ll
    scale = max(abs(kk), abs(ll), abs(kl), 1e-300)
    if gap > tol * scale * scale:
        v = "Strict"
    elif gap >= -tol * scale * scale:
        v = "Equality"
    else:
        v = "VIOLATION"
    return AFResult(v, float(gap), float(scale), (kk, kl, ll))


# ----------------------------------------------------------------------------
# closed-form oracles


def tetra_face_areas(v0, v1, v2, v3, h0scale: float = 1.0) -> np.ndarray:
    """Face areas of {<v0,x> <= t|v0|, <vi,x> <= 0}, the tetrahedron of altitude t over F_0."""
    vs = [np.asarray(v, dtype=float) for v in (v0, v1, v2, v3)]
    D = lambda a, b, c: float(np.linalg.det(np.array([a, b, c])))  # noqa: E731
    lam = np.array([D(vs[1], vs[2], vs[3]), -D(vs[0], vs[2], vs[3]),
                    D(vs[0], vs[1], vs[3]), -D(vs[0], vs[1], vs[2])])
    scale = np.abs(lam).max()
    if scale == 0 or not (np.all(lam > 1e-12 * scale) or np.all(lam < -1e-12 * scale)):
        raise NotSpanning("v0..v3 do not positively span R^3")
    lam = np.abs(lam)
    nv = np.array([np.linalg.norm(v) for v in vs])
    d012, d023, d013 = D(vs[0], vs[1], vs[2]), D(vs[0], vs[2], vs[3]), D(vs[0], vs[1], vs[3])
    a0 = nv[0] ** 3 * lam[0] ** 2 / (2 * abs(d012 * d023 * d013))
    areas = a0 * (lam * nv) / (lam[0] * nv[0])
    return areas * h0scale ** 2


def _spherical_angle(vi, vj, vk) -> float:
    """Angle at vi between the great arcs to vj and vk."""
    a = vj - (vj @ vi) * vi
    b = vk - (vk @ vi) * vi
    c = a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.acos(max(-1.0, min(1.0, float(c))))


def area_form_from_angles(fan: AbstractFan) -> QuadraticForm:
    """Surface-area form of a complete simplicial fan in R^3 from normal-fan angles.

    Returns a form with full_gram = a (area(h) = h^T a h); the quotient part is
    left empty since no Gale section is attached.
    """
    if fan.d != 3:
        raise InputError("needs d = 3")
    if not fan.simplicial or not fan.complete:
        raise NotSimplicial("needs a complete simplicial fan")
    U = fan.V / np.linalg.norm(fan.V, axis=1, keepdims=True)
    n = fan.n
    a = np.zeros((n, n))
    third = {}
    for sigma, (r1, r2) in fan.walls.items():
        i, j = sorted(sigma)
        k = next(iter(r1 - sigma))
        l = next(iter(r2 - sigma))
        third[(i, j)] = third[(j, i)] = (k, l)

    def phi(i, j):
        return math.acos(max(-1.0, min(1.0, float(U[i] @ U[j]))))

    for (i, j), (k, l) in third.items():
        if i > j:
            continue
        pij = phi(i, j)
        csc = 1 / math.sin(pij)
        # mixed coefficient: uses angles at v_i
        two_aij = (math.tan(phi(i, k) / 2) * csc / math.sin(_spherical_angle(U[i], U[j], U[k]))
                   + math.tan(phi(i, l) / 2) * csc / math.sin(_spherical_angle(U[i], U[j], U[l]))
                   - math.tan(pij / 2) * csc * (1 / math.tan(_spherical_angle(U[i], U[j], U[k]))
                                                + 1 / math.tan(_spherical_angle(U[i], U[j], U[l]))))
        a[i, j] = a[j, i] = two_aij / 2
    for i in range(n):
        s = 0.0
        for j in range(n):
            if (i, j) not in third:
                continue
            k, l = third[(i, j)]
            pij = phi(i, j)
            s += math.tan(pij / 2) / math.sin(pij) * (1 / math.tan(_spherical_angle(U[j], U[i], U[k]))
                                                      + 1 / math.tan(_spherical_angle(U[j], U[i], U[l])))
        a[i, i] = -s / 2
    with nm.tolerance(1e-8):
        sig = nm.symmetric_signature(a)
    return QuadraticForm(np.zeros((0, 0)), a, fan, [BodySpec.ball()], sig)


def form_relative_error(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.abs(A - B).max() / max(np.abs(A).max(), np.abs(B).max(), 1e-300))
