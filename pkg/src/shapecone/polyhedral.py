"""Polyhedral cones and abstract fans.

Cones are converted between generator and inequality descriptions with the
double description method (Motzkin's incremental algorithm with the
combinatorial adjacency test), after splitting off the lineality space.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.optimize import linprog, nnls

from . import numeric as nm


def _unit_rows(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float).reshape(-1, A.shape[-1] if np.ndim(A) > 1 else len(A))
    nrm = np.linalg.norm(A, axis=1)
    keep = nrm > 1e-14
    return A[keep] / nrm[keep, None]


def _dedupe(R: np.ndarray, tol: float) -> np.ndarray:
    out = []
    for r in R:
        if not out or np.min(np.linalg.norm(np.asarray(out) - r, axis=1)) > tol:
            out.append(r)
    return np.array(out).reshape(-1, R.shape[1])


def cone_rays(A, eps: Optional[float] = None):
    """Extreme rays and lineality basis of {y : A y >= 0}.

    Returns ``(rays, lineality)``; rays are unit vectors orthogonal to the
    lineality space, lineality rows are orthonormal.
    """
    A = np.asarray(A, dtype=float)
    m = A.shape[1]
    eps = nm.get_eps() if eps is None else eps
    A = _unit_rows(A) if A.shape[0] else A.reshape(0, m)
    if A.shape[0] == 0:
        return np.zeros((0, m)), np.eye(m)
    L = nm.kernel_basis(A).T
    Q = nm.row_space_basis(A)
    r = Q.shape[0]
    Ar = A @ Q.T
    k = Ar.shape[0]
    if r == 0:
        return np.zeros((0, m)), L
    # initial simplicial cone from r independent inequalities
    S = []
    for i in range(k):
        if nm.rank(Ar[S + [i]]) == len(S) + 1:
            S.append(i)
            if len(S) == r:
                break
    Binv = np.linalg.inv(Ar[S])
    R = Binv.T.copy()
    R /= np.linalg.norm(R, axis=1, keepdims=True)
    order = list(S) + [i for i in range(k) if i not in S]
    col = {row: c for c, row in enumerate(order)}
    T = np.zeros((r, k), dtype=bool)
    for j in range(r):
        for i in S:
            if i != S[j]:
                T[j, col[i]] = True
    for step in range(r, k):
        i = order[step]
        s = R @ Ar[i]
        pos = np.where(s > eps)[0]
        neg = np.where(s < -eps)[0]
        zer = np.where(np.abs(s) <= eps)[0]
        keep = np.concatenate([pos, zer]).astype(int)
        newR = [R[keep]]
        Tk = T[keep].copy()
        Tk[np.isin(keep, zer), step] = True
        newT = [Tk]
        if len(pos) and len(neg):
            Tproc = T[:, :step]
            miss = (~Tproc).astype(np.float32)
            Tf = Tproc.astype(np.float32)
            cnt = Tf[pos] @ Tf[neg].T
            pi, qi = np.nonzero(cnt >= r - 2 - 0.5)
            for c0 in range(0, len(pi), 4096):
                P_, N_ = pos[pi[c0:c0 + 4096]], neg[qi[c0:c0 + 4096]]
                cm = Tproc[P_] & Tproc[N_]
                # rays whose tight set contains the common set
                holders = ((cm.astype(np.float32) @ miss.T) < 0.5).sum(axis=1)
                adj = holders <= 2
                P_, N_, cm = P_[adj], N_[adj], cm[adj]
                v = s[P_][:, None] * R[N_] - s[N_][:, None] * R[P_]
                nv = np.linalg.norm(v, axis=1)
                good = nv > 1e-15
                newR.append(v[good] / nv[good, None])
                t = np.zeros((int(good.sum()), k), dtype=bool)
                t[:, :step] = cm[good]
                t[:, step] = True
                newT.append(t)
        R = np.vstack(newR) if newR else np.zeros((0, r))
        T = np.vstack(newT) if newT else np.zeros((0, k), dtype=bool)
    rays = R @ Q
    if rays.size:
        rays /= np.linalg.norm(rays, axis=1, keepdims=True)
        rays = _dedupe(rays, 1e3 * eps)
    return rays.reshape(-1, m), L


def _match_parallel(normal: np.ndarray, A: np.ndarray, P: np.ndarray) -> list:
    """Indices k with A_k P parallel (same direction) to normal P."""
    n0 = normal @ P
    n0 = n0 / np.linalg.norm(n0)
    out = []
    for k, a in enumerate(A):
        ap = a @ P
        na = np.linalg.norm(ap)
        if na > 1e-12 and ap @ n0 / na > 1 - 1e-7:
            out.append(k)
    return out


@dataclass(eq=False)
class PolyCone:
    """A polyhedral cone with both descriptions.

    ``rays`` + ``lineality`` generate the cone; ``halfspaces`` (a . y >= 0,
    irredundant) and ``equations`` (a . y = 0) cut it out.
    """

    rays: np.ndarray
    lineality: np.ndarray
    halfspaces: np.ndarray
    equations: np.ndarray
    ambient_dim: int

    @classmethod
    def from_generators(cls, W, eps: Optional[float] = None) -> "PolyCone":
        W = np.asarray(W, dtype=float)
        m = W.shape[1]
        if W.shape[0] == 0:
            return cls.from_inequalities(np.zeros((0, m)), np.eye(m), eps)
        H, E = cone_rays(W, eps)
        return cls._finish(H, E, m, eps)

    @classmethod
    def from_inequalities(cls, A, E=None, eps: Optional[float] = None) -> "PolyCone":
        A = np.asarray(A, dtype=float)
        m = A.shape[1]
        E = np.zeros((0, m)) if E is None else np.asarray(E, dtype=float).reshape(-1, m)
        rays, lin = cone_rays(np.vstack([A, E, -E]), eps)
        gens = np.vstack([rays, lin, -lin])
        if gens.shape[0] == 0:
            return cls(np.zeros((0, m)), np.zeros((0, m)), np.zeros((0, m)), np.eye(m), m)
        H, Eq = cone_rays(gens, eps)
        return cls(rays, lin, H, Eq, m)

    @classmethod
    def _finish(cls, H, E, m, eps):
        rays, lin = cone_rays(np.vstack([H, E, -E]), eps)
        return cls(rays, lin, H, E, m)

    @property
    def dim(self) -> int:
        return self.ambient_dim - self.equations.shape[0]

    @property
    def is_pointed(self) -> bool:
        return self.lineality.shape[0] == 0

    @property
    def is_full_dimensional(self) -> bool:
        return self.equations.shape[0] == 0

    def contains(self, y, strict: bool = False, eps: Optional[float] = None) -> bool:
        """Membership; ``strict`` tests the relative interior."""
        y = np.asarray(y, dtype=float)
        eps = nm.get_eps() if eps is None else eps
        scale = max(np.linalg.norm(y), 1e-300)
        if self.equations.shape[0] and np.abs(self.equations @ y).max() > eps * scale:
            return False
        if not self.halfspaces.shape[0]:
            return True
        v = self.halfspaces @ y
        return bool(np.all(v > eps * scale)) if strict else bool(np.all(v >= -eps * scale))

    def interior_point(self) -> np.ndarray:
        """A point of the relative interior (sum of unit rays)."""
        if self.rays.shape[0] == 0:
            return np.zeros(self.ambient_dim)
        return self.rays.sum(axis=0)

    def tight_rays(self, a, eps: Optional[float] = None) -> np.ndarray:
        eps = nm.get_eps() if eps is None else eps
        a = np.asarray(a, dtype=float)
        return np.where(np.abs(self.rays @ a) <= 1e3 * eps)[0]

    def facet_point(self, k: int) -> np.ndarray:
        """A relative-interior point of facet k."""
        idx = self.tight_rays(self.halfspaces[k])
        p = self.rays[idx].sum(axis=0)
        if self.lineality.shape[0]:
            p = p + 0.0
        return p

    def match_facets(self, A) -> list:
        """For each facet, indices of rows of A supporting it (same direction modulo equations)."""
        P = np.eye(self.ambient_dim)
        if self.equations.shape[0]:
            P = P - self.equations.T @ np.linalg.pinv(self.equations.T)
        return [_match_parallel(h, np.asarray(A, dtype=float), P) for h in self.halfspaces]

    def same_as(self, other: "PolyCone", eps: float = 1e-7) -> bool:
        if self.dim != other.dim or self.lineality.shape[0] != other.lineality.shape[0]:
            return False
        return all(other.contains(r, eps=eps) for r in self.rays) and \
            all(self.contains(r, eps=eps) for r in other.rays)


def in_pos(y, W, eps: Optional[float] = None) -> bool:
    """y in pos(W), via non-negative least squares."""
    W = np.asarray(W, dtype=float)
    y = np.asarray(y, dtype=float)
    eps = nm.get_eps() if eps is None else eps
    if W.shape[0] == 0:
        return bool(np.linalg.norm(y) <= eps)
    _, res = nnls(W.T, y)
    return bool(res <= eps * max(1.0, np.linalg.norm(y)) * 10)


def relint_margin(y, W) -> float:
    """Largest t such that y = sum c_i w_i with all c_i >= t and c_i <= 1 (-inf if infeasible).

    Positive margin means y lies in the relative interior of pos(W); the
    scale of y is normalised first.
    """
    W = np.asarray(W, dtype=float)
    y = np.asarray(y, dtype=float)
    k = W.shape[0]
    if k == 0:
        return np.inf if np.linalg.norm(y) == 0 else -np.inf
    ny = np.linalg.norm(y)
    y = y / ny if ny > 0 else y
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A_eq = np.hstack([W.T, np.zeros((W.shape[1], 1))])
    A_ub = np.hstack([-np.eye(k), np.ones((k, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(k), A_eq=A_eq, b_eq=y,
                  bounds=[(None, 10.0)] * k + [(None, 10.0)], method="highs")
    if res.status != 0:
        return -np.inf
    return float(-res.fun)


# ----------------------------------------------------------------------------
# fans


def cone_faces(V: np.ndarray, rho: frozenset, eps: Optional[float] = None) -> dict:
    """All faces of pos(V_rho), as index sets, mapped to their dimension."""
    idx = sorted(rho)
    Vr = V[idx]
    d = nm.rank(Vr)
    if len(idx) == d:
        out = {}
        for k in range(len(idx) + 1):
            for sub in itertools.combinations(idx, k):
                out[frozenset(sub)] = k
        return out
    eps = nm.get_eps() if eps is None else eps
    H, E = cone_rays(Vr, eps)
    facets = set()
    for a in H:
        facets.add(frozenset(i for i in idx if abs(V[i] @ a) <= 1e3 * eps))
    faces = {frozenset(idx)}
    frontier = set(facets)
    while frontier:
        faces |= frontier
        nxt = set()
        for f, g in itertools.combinations(faces, 2):
            h = f & g
            if h not in faces:
                nxt.add(h)
        frontier = nxt
    return {f: (nm.rank(V[sorted(f)]) if f else 0) for f in faces}


def _key(cones) -> tuple:
    return tuple(sorted(tuple(sorted(c)) for c in cones))


@dataclass(eq=False)
class AbstractFan:
    """A fan over the rows of V, stored by its maximal cones (0-based index sets)."""

    V: np.ndarray
    maximal: frozenset

    def __post_init__(self):
        self.V = nm.as_float(self.V)
        self.maximal = frozenset(frozenset(c) for c in self.maximal)

    @property
    def d(self) -> int:
        return self.V.shape[1]

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @cached_property
    def key(self) -> tuple:
        return _key(self.maximal)

    def __eq__(self, other):
        return isinstance(other, AbstractFan) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    @cached_property
    def simplicial(self) -> bool:
        return all(len(c) == nm.rank(self.V[sorted(c)]) for c in self._all_faces)

    @cached_property
    def _all_faces(self) -> dict:
        out = {}
        for rho in self.maximal:
            out.update(cone_faces(self.V, rho))
        return out

    def cones(self, k: int) -> list:
        """Cones of dimension k, sorted."""
        return sorted((c for c, dim in self._all_faces.items() if dim == k), key=lambda c: tuple(sorted(c)))

    @property
    def rays(self) -> list:
        return sorted(set().union(*self.maximal))

    @cached_property
    def walls(self) -> dict:
        """(d-1)-cones mapped to the maximal cones containing them."""
        out = {}
        for sigma in self.cones(self.d - 1):
            out[sigma] = tuple(sorted((r for r in self.maximal if sigma <= r), key=lambda c: tuple(sorted(c))))
        return out

    @cached_property
    def complete(self) -> bool:
        return all(len(v) == 2 for v in self.walls.values()) and len(self.maximal) > 0

    @cached_property
    def pointed(self) -> bool:
        for rho in self.maximal:
            W = self.V[sorted(rho)]
            _, L = cone_rays(W)
            if L.shape[0]:
                return False
            # pos(W) pointed iff some a has a . w > 0 for all w
            m = W.shape[0]
            res = linprog(np.r_[np.zeros(self.d), -1.0],
                          A_ub=np.hstack([-W, np.ones((m, 1))]), b_ub=np.zeros(m),
                          bounds=[(-1, 1)] * self.d + [(None, 1)], method="highs")
            if res.status != 0 or -res.fun <= nm.get_eps():
                return False
        return True

    def refines(self, other: "AbstractFan") -> bool:
        """Every maximal cone of self lies in a maximal cone of other."""
        for rho in self.maximal:
            if not any(rho <= big or all(in_pos(self.V[i], other.V[sorted(big)]) for i in rho)
                       for big in other.maximal):
                return False
        return True

    def as_lists(self) -> list:
        return [list(c) for c in self.key]


@dataclass(eq=False)
class TypeCone:
    """Closure of a type cone in quotient coordinates.

    ``functionals[k]`` is the full-coordinate coefficient vector of the edge
    functional of wall ``walls[k]``; ``inequalities[k]`` is the same
    functional in quotient coordinates.  ``facets[j]`` lists the wall indices
    supporting facet j of ``cone``.
    """

    fan: AbstractFan
    cone: PolyCone
    walls: list
    functionals: np.ndarray
    inequalities: np.ndarray
    equations: np.ndarray
    facets: list = field(default_factory=list)

    @property
    def rays(self) -> np.ndarray:
        return self.cone.rays

    @property
    def dim(self) -> int:
        return self.cone.dim

    @property
    def key(self) -> tuple:
        return self.fan.key

    def facet_walls(self, j: int) -> list:
        return [self.walls[k] for k in self.facets[j]]
