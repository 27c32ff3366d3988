"""Concrete polytopes P(V, h) = {x : V x <= h}.

Vertices come from a scan over d-subsets of the inequalities; everything
else (faces, normal fan, edge lengths, volumes) is read off the vertex
incidences.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from . import numeric as nm
from .config import GaleDiagram, VectorConfiguration
from .errors import (Empty, LowDimensional, NonConvex, NotAWall, NotAWeight, NotPolytopal,
                     NotSimple, OutsideSupport, SupportMismatch, TooDeep, Unbounded)
from .polyhedral import AbstractFan, PolyCone, TypeCone, cone_rays, in_pos

MAX_D = 4
MAX_N = 16


def _as_V(V) -> np.ndarray:
    if isinstance(V, VectorConfiguration):
        return V.Vf
    return nm.as_float(V)


def _affine_rank(P: np.ndarray) -> int:
    if len(P) <= 1:
        return 0
    return nm.rank(P[1:] - P[0])


@dataclass(eq=False)
class ConcretePolytope:
    V: np.ndarray
    h: np.ndarray
    vertices: np.ndarray
    vertex_facets: list     # vertex -> frozenset of tight inequality indices
    dim: int

    @property
    def d(self) -> int:
        return self.V.shape[1]

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @property
    def scale(self) -> float:
        return max(1.0, float(np.abs(self.vertices).max()) if len(self.vertices) else 1.0)

    def face_vertices(self, sigma) -> list:
        """Vertices of the face {x in P : <v_i, x> = h_i for i in sigma}."""
        sigma = frozenset(sigma)
        return [k for k, T in enumerate(self.vertex_facets) if sigma <= T]

    @cached_property
    def facets(self) -> list:
        """Indices i whose face F_i has dimension dim - 1 (irredundant inequalities)."""
        out = []
        for i in range(self.n):
            S = self.face_vertices([i])
            if S and _affine_rank(self.vertices[S]) == self.dim - 1:
                out.append(i)
        return out

    @cached_property
    def edges(self) -> list:
        """Pairs of vertex indices spanning an edge."""
        out = []
        for u, w in itertools.combinations(range(len(self.vertices)), 2):
            common = self.vertex_facets[u] & self.vertex_facets[w]
            if len(self.face_vertices(common)) == 2:
                out.append((u, w))
        return out

    def edge_cone(self, u: int, w: int) -> frozenset:
        fs = set(self.facets)
        return frozenset(self.vertex_facets[u] & self.vertex_facets[w] & fs)

    @property
    def is_simple(self) -> bool:
        fs = set(self.facets)
        return self.dim == self.d and all(len(T & fs) == self.d for T in self.vertex_facets)

    def face_volume(self, S, k: Optional[int] = None) -> float:
        """k-dimensional volume of the face with vertex set S (pyramids from the centroid)."""
        S = sorted(S)
        pts = self.vertices[S]
        if k is None:
            k = _affine_rank(pts)
        if k == 0:
            return 1.0
        if k == 1:
            return float(max(np.linalg.norm(p - q) for p, q in itertools.combinations(pts, 2)))
        apex = pts.mean(axis=0)
        subs = set()
        for j in self.facets:
            G = frozenset(s for s in S if j in self.vertex_facets[s])
            if len(G) >= k and G != frozenset(S) and _affine_rank(self.vertices[sorted(G)]) == k - 1:
                subs.add(G)
        total = 0.0
        for G in subs:
            g = self.vertices[sorted(G)]
            D = g[1:] - g[0]
            Q = nm.row_space_basis(D)
            w = apex - g[0]
            w = w - Q.T @ (Q @ w)
            total += np.linalg.norm(w) * self.face_volume(G, k - 1) / k
        return float(total)

    @cached_property
    def facet_areas(self) -> np.ndarray:
        """(d-1)-volumes of F_i for every inequality (zero for non-facets)."""
        out = np.zeros(self.n)
        if self.dim < self.d:
            return out
        for i in self.facets:
            out[i] = self.face_volume(self.face_vertices([i]), self.d - 1)
        return out

    @property
    def surface_area(self) -> float:
        return float(self.facet_areas.sum())


def _feasible(V, h) -> bool:
    d = V.shape[1]
    res = linprog(np.zeros(d), A_ub=V, b_ub=h, bounds=[(None, None)] * d, method="highs")
    return res.status == 0


def _positively_spanning(V) -> bool:
    n = V.shape[0]
    res = linprog(np.zeros(n), A_eq=V.T, b_eq=np.zeros(V.shape[1]),
                  bounds=[(1, None)] * n, method="highs")
    return res.status == 0


def solve_polytope(V, h, max_d: Optional[int] = None, max_n: Optional[int] = None) -> ConcretePolytope:
    """Vertex enumeration of P(V, h)."""
    from .errors import TooLarge
    max_d = MAX_D if max_d is None else max_d
    max_n = MAX_N if max_n is None else max_n
    V = _as_V(V)
    h = np.asarray(h, dtype=float)
    n, d = V.shape
    if d > max_d or n > max_n:
        raise TooLarge(f"n = {n}, d = {d} exceeds caps ({max_n}, {max_d})")
    eps = nm.get_eps()
    scale = max(1.0, float(np.abs(h).max()))
    tol = 10 * eps * scale
    if not _feasible(V, h + tol):
        raise Empty("P(V, h) is empty")
    subsets = [S for S in itertools.combinations(range(n), d)]
    idx = np.array(subsets)
    M = V[idx]
    dets = np.linalg.det(M)
    good = np.abs(dets) > 1e3 * eps
    idx, M = idx[good], M[good]
    X = np.linalg.solve(M, h[idx][..., None])[..., 0] if len(idx) else np.zeros((0, d))
    ok = np.all(X @ V.T <= h + tol, axis=1)
    X = X[ok]
    verts = []
    for x in X:
        for k, y in enumerate(verts):
            if np.linalg.norm(x - y) <= tol * 10:
                break
        else:
            verts.append(x)
    verts = np.array(verts).reshape(-1, d)
    if not _positively_spanning(V):
        rec, lin = cone_rays(-V)
        P = None
        if len(verts):
            T = [frozenset(np.where(np.abs(V @ x - h) <= tol * 10)[0].tolist()) for x in verts]
            P = ConcretePolytope(V, h, verts, T, d)
        raise Unbounded("pos(V) does not span; P(V, h) is unbounded",
                        recession=np.vstack([rec, lin, -lin]), polytope=P)
    T = [frozenset(np.where(np.abs(V @ x - h) <= tol * 10)[0].tolist()) for x in verts]
    dim = _affine_rank(verts)
    return ConcretePolytope(V, h, verts, T, dim)


def support_function(P: ConcretePolytope, v) -> float:
    v = np.asarray(v, dtype=float)
    if P.dim < 0 or not len(P.vertices):
        raise OutsideSupport("empty polytope")
    return float((P.vertices @ v).max())


def normal_fan(P: ConcretePolytope) -> AbstractFan:
    if P.dim < P.d:
        raise LowDimensional(f"dim P = {P.dim} < {P.d}")
    fs = set(P.facets)
    return AbstractFan(P.V, frozenset(frozenset(T & fs) for T in P.vertex_facets))


def volume(P: ConcretePolytope) -> float:
    if P.dim < P.d:
        return 0.0
    return P.face_volume(range(len(P.vertices)), P.d)


# ----------------------------------------------------------------------------
# edge-length functionals


def _wall_normal(V: np.ndarray, sigma, toward: int) -> np.ndarray:
    """Unit normal of span(V_sigma) with positive product with V[toward]."""
    K = nm.kernel_basis(V[sorted(sigma)]) if sigma else np.eye(V.shape[1])
    if K.shape[1] != 1:
        raise NotAWall("wall does not span a hyperplane")
    e = K[:, 0] / np.linalg.norm(K[:, 0])
    return e if V[toward] @ e > 0 else -e


def _wall_data(fan: AbstractFan, sigma):
    sigma = frozenset(sigma)
    flank = fan.walls.get(sigma)
    if flank is None or len(flank) != 2:
        raise NotAWall(f"{sorted(sigma)} is not shared by two maximal cones")
    rho1, rho2 = flank
    i1 = min(rho1 - sigma)
    i2 = min(rho2 - sigma)
    return rho1, rho2, i1, i2


def edge_length_functional(fan: AbstractFan, sigma) -> np.ndarray:
    """Coefficients c with l_sigma(h) = <c, h>, the length of the edge F_sigma.

    The vertex of the first flanking cone (in canonical order) minus the
    vertex of the second equals l_sigma(h) * e_sigma.
    """
    V = fan.V
    rho1, rho2, i1, i2 = _wall_data(fan, sigma)
    sig = sorted(sigma)
    js = []
    for j in sig:
        if nm.rank(V[js + [j]]) == len(js) + 1:
            js.append(j)
    e = _wall_normal(V, sig, i1)
    idx = [i1, i2] + js
    K = nm.kernel_basis(V[idx].T)
    if K.shape[1] != 1:
        raise NotAWall("no unique circuit across the wall")
    k = K[:, 0]
    c = np.zeros(V.shape[0])
    for i, coef in zip(idx, k):
        c[i] += coef
    return c / (k[0] * (V[i1] @ e))


def cone_vertex(fan_V: np.ndarray, rho, h) -> np.ndarray:
    """The point with <v_i, x> = h_i on rho (least squares for non-simplicial rho)."""
    r = sorted(rho)
    x, *_ = np.linalg.lstsq(fan_V[r], np.asarray(h, dtype=float)[r], rcond=None)
    return x


def edge_length_gradient(fan: AbstractFan, sigma, h) -> float:
    """Signed length <p_1 - p_2, e_sigma> from the linear pieces of the support function."""
    rho1, rho2, i1, _ = _wall_data(fan, sigma)
    e = _wall_normal(fan.V, sorted(sigma), i1)
    return float((cone_vertex(fan.V, rho1, h) - cone_vertex(fan.V, rho2, h)) @ e)


def type_cone_inequalities(fan: AbstractFan, G: GaleDiagram, check: bool = True) -> TypeCone:
    from .cones import is_polytopal, span_equations
    if check and not is_polytopal(fan, G):
        raise NotPolytopal("fan is not polytopal")
    walls = sorted(fan.walls, key=lambda s: tuple(sorted(s)))
    C = np.array([edge_length_functional(fan, s) for s in walls])
    ineq = np.array([G.functional(c) for c in C])
    eqs = np.zeros((0, G.m))
    if not fan.simplicial:
        E = span_equations(fan, G)
        if len(E):
            eqs = np.array([G.functional(c) for c in E])
    cone = PolyCone.from_inequalities(ineq, eqs)
    facets = cone.match_facets(ineq)
    return TypeCone(fan, cone, walls, C, ineq, eqs, facets)


# ----------------------------------------------------------------------------
# truncation and Minkowski refinement


def truncate_face(P: ConcretePolytope, sigma, depth: float) -> ConcretePolytope:
    """Cut off the face F_sigma by a hyperplane at the given depth."""
    S = P.face_vertices(sigma)
    if not S or len(S) == len(P.vertices):
        raise TooDeep("sigma does not name a proper face")
    fs = set(P.facets)
    normal_cone = frozenset.intersection(*[P.vertex_facets[s] for s in S]) & fs
    U = P.V[sorted(normal_cone)]
    u = (U / np.linalg.norm(U, axis=1, keepdims=True)).sum(axis=0)
    u /= np.linalg.norm(u)
    top = support_function(P, u)
    hn = top - depth
    others = [k for k in range(len(P.vertices)) if k not in S]
    tol = 10 * nm.get_eps() * P.scale
    if depth <= 0 or any(P.vertices[k] @ u >= hn - tol for k in others):
        raise TooDeep(f"depth {depth} cuts vertices outside the face")
    return solve_polytope(np.vstack([P.V, u]), np.append(P.h, hn))


def minkowski_refinement(fan1: AbstractFan, fan2: AbstractFan) -> AbstractFan:
    """Coarsest common refinement, over V extended by any new rays."""
    if fan1.d != fan2.d:
        raise SupportMismatch("different ambient dimensions")
    if fan1.complete != fan2.complete:
        raise SupportMismatch("one fan is complete, the other is not")
    if not fan1.complete:
        for fa, fb in ((fan1, fan2), (fan2, fan1)):
            for i in fa.rays:
                if not any(in_pos(fa.V[i], fb.V[sorted(r)]) for r in fb.maximal):
                    raise SupportMismatch("supports differ")
    V = list(fan1.V)
    if fan2.V.shape != fan1.V.shape or not np.allclose(fan2.V, fan1.V):
        V += list(fan2.V)
    d = fan1.d

    def index_of(u):
        u = u / np.linalg.norm(u)
        for k, w in enumerate(V):
            if np.linalg.norm(u - w / np.linalg.norm(w)) <= 1e-7:
                return k
        V.append(u)
        return len(V) - 1

    maximal = set()
    for r1 in fan1.maximal:
        c1 = PolyCone.from_generators(fan1.V[sorted(r1)])
        for r2 in fan2.maximal:
            c2 = PolyCone.from_generators(fan2.V[sorted(r2)])
            inter = PolyCone.from_inequalities(np.vstack([c1.halfspaces, c2.halfspaces]),
                                               np.vstack([c1.equations, c2.equations]))
            if inter.dim == d:
                maximal.add(frozenset(index_of(r) for r in inter.rays))
    return AbstractFan(np.array(V), frozenset(maximal))


# ----------------------------------------------------------------------------
# 1-weights and Christoffel reconstruction


def _sigma_over_tau(V: np.ndarray, sigma, tau) -> np.ndarray:
    """Unit vector in span(sigma), orthogonal to span(tau), pointing into sigma."""
    i = min(set(sigma) - set(tau))
    v = V[i]
    if tau:
        Q = nm.row_space_basis(V[sorted(tau)])
        v = v - Q.T @ (Q @ v)
    return v / np.linalg.norm(v)


@dataclass(eq=False)
class WeightVector:
    fan: AbstractFan
    a: dict = field(default_factory=dict)   # wall -> weight

    @property
    def total(self) -> float:
        return float(sum(abs(x) for x in self.a.values()))

    def closure_residual(self) -> float:
        V = self.fan.V
        worst = 0.0
        for tau in self.fan.cones(self.fan.d - 2):
            s = np.zeros(self.fan.d)
            for sigma, w in self.a.items():
                if tau < sigma:
                    s += w * _sigma_over_tau(V, sigma, tau)
            worst = max(worst, float(np.linalg.norm(s)))
        return worst


def edge_weights(P: ConcretePolytope) -> WeightVector:
    if not P.is_simple:
        raise NotSimple("edge weights need a simple polytope")
    fan = normal_fan(P)
    a = {}
    for u, w in P.edges:
        a[P.edge_cone(u, w)] = float(np.linalg.norm(P.vertices[u] - P.vertices[w]))
    return WeightVector(fan, a)


def christoffel_reconstruct(fan: AbstractFan, weights: WeightVector) -> ConcretePolytope:
    """Rebuild the polytope from its edge lengths by walking the vertex graph."""
    eps = nm.get_eps()
    total = weights.total
    if weights.closure_residual() > eps * max(total, 1.0):
        raise NotAWeight(f"closure residual {weights.closure_residual():.3e}")
    V = fan.V
    cones = sorted(fan.maximal, key=lambda c: tuple(sorted(c)))
    pos = {cones[0]: np.zeros(fan.d)}
    steps = []
    for sigma, (r1, r2) in fan.walls.items():
        if sigma not in weights.a:
            raise NotAWeight(f"missing weight for wall {sorted(sigma)}")
        i1 = min(r1 - sigma)
        e = _wall_normal(V, sorted(sigma), i1)
        steps.append((r1, r2, weights.a[sigma] * e))
    adj = {c: [] for c in cones}
    for r1, r2, s in steps:
        adj[r2].append((r1, s))
        adj[r1].append((r2, -s))
    queue = deque([cones[0]])
    while queue:
        c = queue.popleft()
        for nb, s in adj[c]:
            if nb not in pos:
                pos[nb] = pos[c] + s
                queue.append(nb)
    res = max(np.linalg.norm(pos[r1] - pos[r2] - s) for r1, r2, s in steps)
    if res > eps * max(total, 1.0):
        raise NotAWeight(f"cycle residual {res:.3e}")
    h = np.zeros(V.shape[0])
    for c in cones:
        for i in c:
            h[i] = V[i] @ pos[c]
    for sigma in fan.walls:
        if edge_length_functional(fan, sigma) @ h < -eps * max(total, 1.0):
            raise NonConvex("reconstructed support vector violates a type-cone inequality")
    return solve_polytope(V, h)
