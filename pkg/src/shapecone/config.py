"""Vector configurations, Gale duality and circuits.

A configuration is an n x d matrix V of rank d whose rows are the facet
normals.  Its Gale dual is an n x (n-d) matrix Vbar with ``V.T @ Vbar = 0``.
We fix the dual canonically: a d-subset B of rows of V with maximal |det|
is the *section* (support numbers h_B are pinned to zero), and the rows of
Vbar on the complement N form the identity.  With this choice the quotient
map h -> Vbar.T h restricted to {h_B = 0} is just h -> h_N.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from . import numeric as nm
from .errors import InvalidConfiguration, RankDeficient, TooLarge, ZeroDualVector

CIRCUIT_CAP = 20


@dataclass(eq=False)
class VectorConfiguration:
    """Rows of ``V`` are the vectors v_1..v_n (0-based internally)."""

    V: np.ndarray
    labels: tuple = ()
    unit_normalized: bool = False

    def __post_init__(self):
        V = self.V
        if V.ndim != 2 or V.shape[0] == 0:
            raise InvalidConfiguration("expected a non-empty n x d matrix")
        if not self.labels:
            self.labels = tuple(range(1, V.shape[0] + 1))
        Vf = nm.as_float(V)
        norms = np.linalg.norm(Vf, axis=1)
        eps = nm.get_eps()
        if np.any(norms <= eps):
            raise InvalidConfiguration("zero vector in configuration")
        if nm.rank(V) < V.shape[1]:
            raise RankDeficient(f"rank {nm.rank(V)} < d = {V.shape[1]}")
        U = Vf / norms[:, None]
        G = U @ U.T
        for i, j in zip(*np.triu_indices(len(U), 1)):
            if G[i, j] > 1 - eps:
                raise InvalidConfiguration(
                    f"v{self.labels[i]} and v{self.labels[j]} are positive multiples")
        if self.unit_normalized and np.any(np.abs(norms - 1) > 1e3 * eps):
            raise InvalidConfiguration("rows are not unit vectors")
        self._Vf = Vf

    @classmethod
    def from_rows(cls, rows, exact: Optional[bool] = None, labels=(), normalize: bool = False):
        """Build from nested sequences.  Rational input selects exact mode unless
        ``exact=False``; ``normalize`` rescales rows to unit length (floating)."""
        arr = np.asarray(rows, dtype=object)
        if arr.ndim != 2:
            raise InvalidConfiguration("rows must form a matrix")
        if exact is None:
            exact = nm.is_rational_input(arr) and not normalize
        if exact:
            V = nm.as_exact(arr)
        else:
            V = np.array([[float(nm.parse_scalar(x)) for x in r] for r in arr], dtype=float)
            if normalize:
                V = nm.normalize_rows(V)
        unit = bool(np.allclose(np.linalg.norm(nm.as_float(V), axis=1), 1.0, atol=1e-12))
        return cls(V, tuple(labels), unit)

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @property
    def d(self) -> int:
        return self.V.shape[1]

    @property
    def exact(self) -> bool:
        return nm.is_exact(self.V)

    @property
    def Vf(self) -> np.ndarray:
        return self._Vf

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self._Vf, axis=1)

    def delete(self, i: int) -> "VectorConfiguration":
        keep = [k for k in range(self.n) if k != i]
        return VectorConfiguration(self.V[keep], tuple(self.labels[k] for k in keep), self.unit_normalized)


@dataclass(eq=False)
class GaleDiagram:
    config: VectorConfiguration
    Vbar: np.ndarray
    section: tuple          # B, 0-based, |B| = d
    basis: tuple            # N = complement of B, |N| = n - d

    @property
    def projection(self) -> np.ndarray:
        return self.Vbar.T

    @property
    def Vbarf(self) -> np.ndarray:
        return nm.as_float(self.Vbar)

    @property
    def m(self) -> int:
        return self.Vbar.shape[1]

    def project(self, h) -> np.ndarray:
        """pi(h) = sum_i h_i vbar_i."""
        return self.Vbarf.T @ np.asarray(h, dtype=float)

    def lift(self, y) -> np.ndarray:
        """The section iota: y -> h with h_B = 0 and h_N = y."""
        h = np.zeros(self.config.n)
        h[list(self.basis)] = np.asarray(y, dtype=float)
        return h

    def functional(self, c) -> np.ndarray:
        """Quotient coefficients mu of a translation-invariant functional c on R^n."""
        c = np.asarray(c, dtype=float)
        mu = c[list(self.basis)]
        if np.linalg.norm(self.Vbarf @ mu - c) > 1e3 * nm.get_eps() * max(1.0, np.abs(c).max()):
            raise nm.Infeasible("functional is not translation invariant")
        return mu


def _choose_section(V: np.ndarray) -> tuple:
    n, d = V.shape
    exact = nm.is_exact(V)
    Vf = nm.as_float(V)
    best, best_val = None, -1.0
    # reverse-lex scan: on ties the later indices win, matching the usual
    # convention of pinning the last d support numbers
    for B in reversed(list(itertools.combinations(range(n), d))):
        if exact:
            val = abs(float(nm.det(V[list(B)])))
        else:
            val = abs(np.linalg.det(Vf[list(B)]))
        if val > best_val * (1 + 1e-9):
            best, best_val = B, val
    if best is None or best_val <= nm.get_eps():
        raise RankDeficient("no basis among the rows")
    return best


def gale_dual(config: VectorConfiguration, section: Optional[Sequence[int]] = None) -> GaleDiagram:
    V = config.V
    n, d = V.shape
    if nm.rank(V) < d:
        raise RankDeficient("configuration does not span")
    B = tuple(section) if section is not None else _choose_section(V)
    N = tuple(i for i in range(n) if i not in B)
    m = n - d
    VB, VN = V[list(B)], V[list(N)]
    if config.exact:
        # Vbar_B = -(VB^T)^{-1} VN^T, solved column by column
        VbarB = np.empty((d, m), dtype=object)
        for k in range(m):
            VbarB[:, k] = -nm.solve_linear(VB.T.copy(), VN[k])
        Vbar = np.empty((n, m), dtype=object)
        Vbar[:] = Fraction(0)
        for r, i in enumerate(N):
            Vbar[i, r] = Fraction(1)
    else:
        VbarB = -np.linalg.solve(VB.T, VN.T)
        Vbar = np.zeros((n, m))
        for r, i in enumerate(N):
            Vbar[i, r] = 1.0
    for r, i in enumerate(B):
        Vbar[i] = VbarB[r]
    return GaleDiagram(config, Vbar, B, N)


def gale_involution_check(config: VectorConfiguration) -> bool:
    """The dual of the dual spans the same column space as V.

    The dual configuration may contain repeated vectors, so the second
    kernel is computed directly rather than through a new configuration.
    """
    G = gale_dual(config)
    W = G.Vbar if config.exact else G.Vbarf
    K = nm.kernel_basis(W.T.copy())
    if K.shape[1] != config.d:
        return False
    stacked = np.hstack([nm.as_float(config.V), nm.as_float(K)])
    return nm.rank(stacked) == config.d


# ----------------------------------------------------------------------------
# circuits


@dataclass(eq=False)
class Circuit:
    support: tuple          # sorted 0-based indices
    lam: np.ndarray         # full length-n coefficient vector, zero off the support
    kind: str               # "positive" | "hyperbolic" | "mixed"
    p: Optional[int]        # distinguished index for hyperbolic circuits
    mu: np.ndarray          # quotient functional with Vbar @ mu = lam

    @property
    def negative(self) -> tuple:
        lf = nm.as_float(self.lam)
        return tuple(i for i in self.support if lf[i] < 0)

    @property
    def lamf(self) -> np.ndarray:
        return nm.as_float(self.lam)

    @property
    def muf(self) -> np.ndarray:
        return nm.as_float(self.mu)

    def coefficients(self) -> dict:
        lf = self.lamf
        return {i: lf[i] for i in self.support}

    def describe(self, labels=None) -> str:
        labels = labels or {}
        terms = " ".join(f"{c:+.6g}*v{labels.get(i, i + 1)}" for i, c in self.coefficients().items())
        return f"{self.kind}: {terms} = 0"


def _circuit_kernel(VS, exact: bool):
    K = nm.kernel_basis(VS.T.copy() if exact else nm.as_float(VS).T)
    if K.shape[1] != 1:
        return None
    k = K[:, 0]
    if exact:
        if any(x == 0 for x in k):
            return None
        return k
    k = k / np.abs(k).max()
    if np.any(np.abs(k) <= 1e3 * nm.get_eps()):
        return None
    return k


def _classify(lam_c, exact: bool):
    signs = [1 if x > 0 else -1 for x in lam_c]
    npos = signs.count(1)
    nneg = len(signs) - npos
    if nneg == 0 or npos == 0:
        s = sum(lam_c)
        return "positive", None, [x / s for x in lam_c]
    if npos == 1 or nneg == 1:
        minority = 1 if npos == 1 else -1
        k = signs.index(minority)
        piv = lam_c[k]
        return "hyperbolic", k, [x / piv for x in lam_c]
    big = max(lam_c, key=lambda x: abs(x))
    scale = abs(big) if lam_c[0] > 0 else -abs(big)
    return "mixed", None, [x / scale for x in lam_c]


def enumerate_circuits(config: VectorConfiguration, G: Optional[GaleDiagram] = None,
                       max_n: int = CIRCUIT_CAP) -> list:
    """All circuits, scanning subsets of size <= d + 1, sorted by support."""
    n, d = config.n, config.d
    if n > max_n:
        raise TooLarge(f"n = {n} exceeds circuit cap {max_n}")
    G = G or gale_dual(config)
    exact = config.exact
    V = config.V if exact else config.Vf
    out = []
    for size in range(2, d + 2):
        for S in itertools.combinations(range(n), size):
            k = _circuit_kernel(V[list(S)], exact)
            if k is None:
                continue
            kind, pos, coeffs = _classify(list(k), exact)
            if exact:
                lam = np.empty(n, dtype=object)
                lam[:] = Fraction(0)
            else:
                lam = np.zeros(n)
            for i, c in zip(S, coeffs):
                lam[i] = c
            mu = lam[list(G.basis)].copy()
            out.append(Circuit(S, lam, kind, S[pos] if pos is not None else None, mu))
    out.sort(key=lambda c: (len(c.support), c.support))
    return out


def circuit_duality_holds(G: GaleDiagram, C: Circuit) -> bool:
    """[n] minus C is a cocircuit: its dual vectors span a hyperplane."""
    rest = [i for i in range(G.config.n) if i not in C.support]
    return nm.rank(G.Vbar[rest]) == G.m - 1


def is_positively_spanning(config: VectorConfiguration, G: Optional[GaleDiagram] = None) -> bool:
    """Exists mu with <mu, vbar_i> > 0 for all i."""
    G = G or gale_dual(config)
    W = G.Vbarf
    m = W.shape[1]
    # maximise t subject to W mu >= t, |mu|_inf <= 1
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A = np.hstack([-W, np.ones((W.shape[0], 1))])
    res = linprog(c, A_ub=A, b_ub=np.zeros(W.shape[0]),
                  bounds=[(-1, 1)] * m + [(None, 1)], method="highs")
    return bool(res.status == 0 and -res.fun > nm.get_eps())


def has_positive_dependence(config: VectorConfiguration) -> bool:
    """Exists lambda > 0 with sum lambda_i v_i = 0 (equivalent characterization)."""
    V = config.Vf
    n = V.shape[0]
    res = linprog(np.zeros(n), A_eq=V.T, b_eq=np.zeros(V.shape[1]),
                  bounds=[(1, None)] * n, method="highs")
    return bool(res.status == 0)


# ----------------------------------------------------------------------------
# affine Gale diagram


@dataclass(frozen=True)
class AffineGalePoint:
    point: tuple
    color: str     # "black" | "white"
    source: int
    alpha: float


@dataclass(eq=False)
class AffineGaleDiagram:
    normal: np.ndarray
    points: list = field(default_factory=list)

    def plane_coordinates(self) -> np.ndarray:
        """Coordinates of the points in an orthonormal basis of the hyperplane."""
        a = self.normal / np.linalg.norm(self.normal)
        basis = nm.kernel_basis(a[None, :])
        P = np.array([p.point for p in self.points])
        return P @ basis


def affine_gale(G: GaleDiagram) -> AffineGaleDiagram:
    W = G.Vbarf
    norms = np.linalg.norm(W, axis=1)
    eps = nm.get_eps()
    if np.any(norms <= eps):
        i = int(np.argmin(norms))
        raise ZeroDualVector(f"vbar_{i + 1} = 0")
    ones = np.ones(W.shape[0])
    mu, *_ = np.linalg.lstsq(W, ones, rcond=None)
    if np.linalg.norm(W @ mu - ones) <= 1e3 * eps * np.sqrt(len(ones)):
        # the dual vectors already lie on {<mu, y> = 1}
        a = mu
    else:
        a = (W / norms[:, None]).sum(axis=0)
        if np.linalg.norm(a) <= eps:
            a = np.zeros(W.shape[1])
            a[0] = 1.0
    vals = W @ a
    if np.any(np.abs(vals) <= eps * np.abs(vals).max()):
        raise InvalidConfiguration("a dual vector is parallel to the affine hyperplane")
    alpha = 1.0 / vals
    pts = [AffineGalePoint(tuple(alpha[i] * W[i]), "black" if alpha[i] > 0 else "white", i, float(alpha[i]))
           for i in range(W.shape[0])]
    return AffineGaleDiagram(a, pts)
