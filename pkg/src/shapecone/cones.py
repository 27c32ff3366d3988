"""Domains co(V) and clir(V), chamber fans and type cones.

Everything here works in quotient coordinates y = pi(h) in R^{n-d}.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from . import numeric as nm
from .config import GaleDiagram, VectorConfiguration, enumerate_circuits, gale_dual
from .errors import InvariantViolation, NotAFacet, NotInterior, TooLarge
from .polyhedral import AbstractFan, PolyCone, TypeCone, cone_faces
from .polytope import edge_length_functional, solve_polytope, type_cone_inequalities

__all__ = [
    "PolyCone", "AbstractFan", "TypeCone", "DomainPair", "compatibility_domain", "k_core",
    "irredundancy_domain", "interior_membership", "chamber_of", "is_polytopal",
    "span_equations", "wall_cross", "Flip", "BoundaryClir", "ChamberComplex",
    "explore_chambers", "enumerate_type_cones", "arrangement_chambers", "deletion", "seed_chamber",
    "domains",
]

CAP_N, CAP_D, CAP_M = 16, 4, 9


def _cache(G: GaleDiagram, key: str, fn):
    store = G.__dict__.setdefault("_cache", {})
    if key not in store:
        store[key] = fn()
    return store[key]


def _circuits(G: GaleDiagram) -> list:
    return _cache(G, "circuits", lambda: enumerate_circuits(G.config, G))


def _clir_rows(G: GaleDiagram):
    """(A, circuits): clir = {A y >= 0}, one row per positive or hyperbolic circuit."""
    def build():
        rows, cs = [], []
        for C in _circuits(G):
            if C.kind == "positive":
                rows.append(C.muf)
            elif C.kind == "hyperbolic":
                rows.append(-C.muf)
            else:
                continue
            cs.append(C)
        return np.array(rows).reshape(-1, G.m), cs
    return _cache(G, "clir_rows", build)


def _in_int_clir(y, G: GaleDiagram) -> bool:
    A, _ = _clir_rows(G)
    if not A.shape[0]:
        return True
    scale = max(np.linalg.norm(y), 1e-300)
    return bool(np.all(A @ y > nm.get_eps() * scale))


# ----------------------------------------------------------------------------
# domains


def compatibility_domain(config: VectorConfiguration, G: Optional[GaleDiagram] = None) -> PolyCone:
    """co(V) = pos(Vbar), cross-checked against the positive-circuit inequalities."""
    G = G or gale_dual(config)
    gen = PolyCone.from_generators(G.Vbarf)
    pos = [C.muf for C in _circuits(G) if C.kind == "positive"]
    hrep = PolyCone.from_inequalities(np.array(pos).reshape(-1, G.m))
    if not gen.same_as(hrep):
        raise InvariantViolation("pos(Vbar) differs from the positive-circuit cone")
    return gen


def k_core(W, k: int) -> PolyCone:
    """Intersection of pos(W minus S) over all (k-1)-subsets S."""
    W = np.asarray(W, dtype=float)
    if k < 1:
        raise ValueError("k must be at least 1")
    if k == 1:
        return PolyCone.from_generators(W)
    H, E = [], []
    n = W.shape[0]
    for S in itertools.combinations(range(n), k - 1):
        keep = [i for i in range(n) if i not in S]
        c = PolyCone.from_generators(W[keep])
        H.append(c.halfspaces)
        E.append(c.equations)
    return PolyCone.from_inequalities(np.vstack(H), np.vstack(E))


@dataclass(eq=False)
class DomainPair:
    co: PolyCone
    clir: PolyCone
    facet_circuits: dict = field(default_factory=dict)   # clir facet index -> Circuit


def irredundancy_domain(config: VectorConfiguration, G: Optional[GaleDiagram] = None,
                        circuits: Optional[list] = None, check_core: bool = True) -> DomainPair:
    G = G or gale_dual(config)
    if circuits is not None:
        G.__dict__.setdefault("_cache", {})["circuits"] = circuits
    A, cs = _clir_rows(G)
    co = compatibility_domain(config, G)
    clir = PolyCone.from_inequalities(A)
    fc = {}
    for j, match in enumerate(clir.match_facets(A)):
        if not match:
            raise InvariantViolation(f"clir facet {j} has no supporting circuit")
        fc[j] = cs[match[0]]
    if check_core and not clir.same_as(k_core(G.Vbarf, 2)):
        raise InvariantViolation("clir differs from the 2-core of the Gale dual")
    return DomainPair(co, clir, fc)


def domains(G: GaleDiagram) -> DomainPair:
    return _cache(G, "domains", lambda: irredundancy_domain(G.config, G))


def interior_membership(y, dp: DomainPair, G: Optional[GaleDiagram] = None, h=None) -> str:
    """IntIr | BoundaryIr | IntCoOnly | BoundaryCo | Outside.

    With ``G`` (and optionally a lift ``h``) the IntIr verdict is cross-checked
    against the polytope: dim P = d and every inequality defines a facet.
    """
    y = np.asarray(y, dtype=float)
    if not dp.co.contains(y):
        verdict = "Outside"
    elif not dp.co.contains(y, strict=True):
        verdict = "BoundaryCo"
    elif dp.clir.contains(y, strict=True):
        verdict = "IntIr"
    elif dp.clir.contains(y):
        verdict = "BoundaryIr"
    else:
        verdict = "IntCoOnly"
    if G is not None and verdict in ("IntIr", "IntCoOnly"):
        hh = G.lift(y) if h is None else np.asarray(h, dtype=float)
        P = solve_polytope(G.config.Vf, hh)
        geo = P.dim == G.config.d and len(P.facets) == G.config.n
        if geo != (verdict == "IntIr"):
            raise InvariantViolation(f"membership {verdict} disagrees with the polytope")
    return verdict


def deletion(config: VectorConfiguration, i: int):
    """Drop v_i; chambers of int co outside ir correspond to polytopes with facet i redundant."""
    sub = config.delete(i)
    return sub, gale_dual(sub)


# ----------------------------------------------------------------------------
# chamber fan


def _bases(G: GaleDiagram):
    def build():
        W = G.Vbarf
        n, m = W.shape
        out = [J for J in itertools.combinations(range(n), m)
               if abs(np.linalg.det(W[list(J)])) > 1e3 * nm.get_eps()]
        return np.array(out, dtype=int).reshape(-1, m)
    return _cache(G, "bases", build)


def chamber_of(y, G: GaleDiagram, check: bool = True) -> AbstractFan:
    """The fan {sigma : y in relint pos(Vbar_{[n] minus sigma})}, by maximal cones."""
    y = np.asarray(y, dtype=float)
    if check and not _in_int_clir(y, G):
        raise NotInterior("y is not in the interior of clir(V)")
    W = G.Vbarf
    n = W.shape[0]
    J = _bases(G)
    M = np.transpose(W[J], (0, 2, 1))
    c = np.linalg.solve(M, np.broadcast_to(y, (len(J), len(y)))[..., None])[..., 0]
    scale = max(np.linalg.norm(y), 1e-300)
    tol = 1e2 * nm.get_eps() * scale
    sigmas = set()
    for Jk, ck in zip(J, c):
        if np.all(ck >= -tol):
            supp = {int(j) for j, x in zip(Jk, ck) if x > tol}
            sigmas.add(frozenset(range(n)) - supp)
    maximal = [s for s in sigmas if not any(s < t for t in sigmas)]
    return AbstractFan(G.config.Vf, frozenset(maximal))


def _polytopal_lp(fan: AbstractFan, G: GaleDiagram):
    """Maximise t with y = sum c_i vbar_i over [n] minus rho, c >= t, for every rho."""
    W = G.Vbarf
    n, m = W.shape
    blocks = [sorted(set(range(n)) - rho) for rho in sorted(fan.maximal, key=lambda r: tuple(sorted(r)))]
    nv = m + sum(len(b) for b in blocks) + 1
    Aeq, beq, Aub = [], [], []
    off = m
    for b in blocks:
        for r in range(m):
            row = np.zeros(nv)
            row[r] = -1.0
            row[off:off + len(b)] = W[b, r]
            Aeq.append(row)
            beq.append(0.0)
        for k in range(len(b)):
            row = np.zeros(nv)
            row[off + k] = -1.0
            row[-1] = 1.0
            Aub.append(row)
        off += len(b)
    cost = np.zeros(nv)
    cost[-1] = -1.0
    bounds = [(None, None)] * m + [(None, 1.0)] * (nv - m - 1) + [(None, 1.0)]
    res = linprog(cost, A_ub=np.array(Aub) if Aub else None, b_ub=np.zeros(len(Aub)) if Aub else None,
                  A_eq=np.array(Aeq), b_eq=np.array(beq), bounds=bounds, method="highs")
    if res.status != 0:
        return -np.inf, None
    return float(-res.fun), res.x[:m]


POLYTOPAL_MARGIN = 1e-7


def is_polytopal(fan: AbstractFan, G: GaleDiagram) -> bool:
    if not fan.maximal or not fan.complete:
        return False
    t, _ = _polytopal_lp(fan, G)
    return t > POLYTOPAL_MARGIN


def _refinement(fan: AbstractFan, G: GaleDiagram, seed: int) -> AbstractFan:
    _, y = _polytopal_lp(fan, G)
    rng = np.random.default_rng(seed)
    for k in range(40):
        z = y + 1e-3 * np.linalg.norm(y) * rng.standard_normal(len(y)) / (1 + k % 4)
        if not _in_int_clir(z, G):
            continue
        ref = chamber_of(z, G)
        if ref.simplicial and ref.refines(fan):
            return ref
    raise InvariantViolation("no simplicial refinement found")


def _interior_walls(fan: AbstractFan, ref: AbstractFan) -> list:
    V = fan.V
    d = fan.d
    facets_of = {}
    for rho in fan.maximal:
        facets_of[rho] = [f for f, k in cone_faces(V, rho).items() if k == d - 1]
    out = []
    for s in ref.walls:
        for rho in fan.maximal:
            if s <= rho and not any(s <= f for f in facets_of[rho]):
                out.append(s)
                break
    return sorted(out, key=lambda s: tuple(sorted(s)))


def span_equations(fan: AbstractFan, G: GaleDiagram, seeds=(0, 1)) -> np.ndarray:
    """Full-coordinate functionals cutting out span(T(fan)) for a non-simplicial fan."""
    if fan.simplicial:
        return np.zeros((0, fan.n))
    spans = []
    for s in seeds:
        ref = _refinement(fan, G, s)
        rows = [edge_length_functional(ref, w) for w in _interior_walls(fan, ref)]
        spans.append(np.array(rows).reshape(-1, fan.n))
    r0 = nm.rank(spans[0])
    for E in spans[1:]:
        if nm.rank(E) != r0 or nm.rank(np.vstack([spans[0], E])) != r0:
            raise InvariantViolation("span equations depend on the refinement")
    return spans[0]


# ----------------------------------------------------------------------------
# wall crossing


@dataclass(eq=False)
class Flip:
    to: TypeCone
    facet: int
    back_facet: int
    removed: list       # walls of the old fan that collapse on the facet
    added: list         # walls of the new fan that collapse on the facet


@dataclass(eq=False)
class BoundaryClir:
    facet: int
    circuits: list      # supporting circuits of clir through the facet

    @property
    def truncated_faces(self) -> list:
        """For hyperbolic circuits: the face F_{C^-} that appears when crossing outward."""
        return [c.negative for c in self.circuits if c.kind == "hyperbolic"]


def _facet_of(tc: TypeCone, p) -> Optional[int]:
    """Index of the facet of tc whose relative interior contains p."""
    scale = max(np.linalg.norm(p), 1e-300)
    vals = tc.cone.halfspaces @ p
    tight = np.where(np.abs(vals) <= 1e-7 * scale)[0]
    if len(tight) == 1 and tc.cone.contains(p, eps=1e-7):
        return int(tight[0])
    return None


def _collapsing(tc: TypeCone, p) -> list:
    scale = max(np.linalg.norm(p), 1e-300)
    return [w for w, a in zip(tc.walls, tc.inequalities) if abs(a @ p) <= 1e-7 * scale]


def wall_cross(tc: TypeCone, facet: int, G: GaleDiagram):
    if not 0 <= facet < tc.cone.halfspaces.shape[0]:
        raise NotAFacet(f"type cone has no facet {facet}")
    p = tc.cone.facet_point(facet)
    p = p / np.linalg.norm(p)
    A, cs = _clir_rows(G)
    if A.shape[0]:
        on = np.where(np.abs(A @ p) <= 1e-7)[0]
        if len(on):
            return BoundaryClir(facet, [cs[k] for k in on])
    a = tc.cone.halfspaces[facet]
    a = a / np.linalg.norm(a)
    delta = 1e-2
    for _ in range(30):
        z = p - delta * a
        if _in_int_clir(z, G):
            fan = chamber_of(z, G)
            if fan != tc.fan and fan.simplicial:
                to = type_cone_inequalities(fan, G, check=False)
                back = _facet_of(to, p)
                if back is not None and to.dim == G.m:
                    return Flip(to, facet, back, _collapsing(tc, p), _collapsing(to, p))
        delta /= 2
    raise InvariantViolation(f"could not cross facet {facet}")


# ----------------------------------------------------------------------------
# enumeration


@dataclass(eq=False)
class ChamberComplex:
    type_cones: list
    flips: list = field(default_factory=list)       # (i, facet_i, j, facet_j)
    boundary: list = field(default_factory=list)    # (i, facet_i, [circuit supports])

    def flip_graph(self) -> dict:
        g = {i: set() for i in range(len(self.type_cones))}
        for i, _, j, _ in self.flips:
            g[i].add(j)
            g[j].add(i)
        return {i: sorted(v) for i, v in g.items()}

    def index_of(self, fan: AbstractFan) -> int:
        for i, tc in enumerate(self.type_cones):
            if tc.fan == fan:
                return i
        raise KeyError("fan not in complex")


def _check_caps(G: GaleDiagram):
    n, d = G.config.n, G.config.d
    if n > CAP_N or d > CAP_D or G.m > CAP_M:
        raise TooLarge(f"n = {n}, d = {d}, n - d = {G.m} exceeds caps ({CAP_N}, {CAP_D}, {CAP_M})")


def seed_chamber(G: GaleDiagram) -> TypeCone:
    y = G.project(np.ones(G.config.n))
    rng = np.random.default_rng(0)
    z = y
    for k in range(50):
        fan = chamber_of(z, G)
        if fan.simplicial:
            return type_cone_inequalities(fan, G, check=False)
        z = y + 1e-3 * np.linalg.norm(y) * rng.standard_normal(len(y))
    raise InvariantViolation("no simplicial chamber near pi(1)")


def explore_chambers(G: GaleDiagram, max_chambers: int = 5000) -> ChamberComplex:
    """Flip-BFS over full-dimensional chambers, seeded near pi(1)."""
    _check_caps(G)
    start = seed_chamber(G)
    cones = [start]
    index = {start.key: 0}
    cx = ChamberComplex(cones)
    seen = set()
    queue = deque([0])
    while queue:
        i = queue.popleft()
        tc = cones[i]
        for k in range(tc.cone.halfspaces.shape[0]):
            if (i, k) in seen:
                continue
            seen.add((i, k))
            res = wall_cross(tc, k, G)
            if isinstance(res, BoundaryClir):
                cx.boundary.append((i, k, [c.support for c in res.circuits]))
                continue
            j = index.get(res.to.key)
            if j is None:
                if len(cones) >= max_chambers:
                    raise TooLarge(f"more than {max_chambers} chambers")
                j = len(cones)
                index[res.to.key] = j
                cones.append(res.to)
                queue.append(j)
            seen.add((j, res.back_facet))
            cx.flips.append((i, k, j, res.back_facet))
    return cx


def enumerate_type_cones(config: VectorConfiguration, G: Optional[GaleDiagram] = None) -> list:
    G = G or gale_dual(config)
    return explore_chambers(G).type_cones


def arrangement_chambers(G: GaleDiagram) -> set:
    """Fan keys of full-dimensional chambers by slicing clir with all circuit hyperplanes.

    Independent of the flip walk; intended for n - d <= 4.
    """
    _check_caps(G)
    if G.m > 4:
        raise TooLarge("arrangement slicing is limited to n - d <= 4")
    A, _ = _clir_rows(G)
    normals = []
    for C in _circuits(G):
        mu = C.muf / np.linalg.norm(C.muf)
        if not any(min(np.linalg.norm(mu - u), np.linalg.norm(mu + u)) < 1e-9 for u in normals):
            normals.append(mu)
    cells = [A]
    for a in normals:
        nxt = []
        for H in cells:
            cone = PolyCone.from_inequalities(H)
            v = cone.rays @ a
            if v.max(initial=0) > 1e-9 and v.min(initial=0) < -1e-9:
                nxt += [np.vstack([H, a]), np.vstack([H, -a])]
            else:
                nxt.append(H)
        cells = nxt
    keys = set()
    for H in cells:
        cone = PolyCone.from_inequalities(H)
        if cone.dim < G.m:
            continue
        keys.add(chamber_of(cone.interior_point(), G).key)
    return keys
