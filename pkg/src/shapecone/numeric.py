"""Scalar policy and dense linear algebra.

Matrices are numpy arrays.  A ``float64`` array is in floating mode, an
``object`` array whose entries are ``fractions.Fraction`` is in exact mode.
Exact mode is chosen automatically when every input coordinate is rational
(ints, Fractions or ``"p/q"`` strings).

All sign decisions in floating mode go through the global tolerance, which
defaults to 1e-9 and can be overridden with ``tolerance(eps)``::

    with tolerance(1e-7):
        r = rank(M)
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Rational

import numpy as np

from .errors import Infeasible, NotSymmetric

DEFAULT_EPS = 1e-9
_EPS = contextvars.ContextVar("shapecone_eps", default=DEFAULT_EPS)


def get_eps() -> float:
    return _EPS.get()


def set_eps(eps: float) -> None:
    if not eps > 0:
        raise ValueError("tolerance must be positive")
    _EPS.set(float(eps))


@contextlib.contextmanager
def tolerance(eps: float):
    """Temporarily override the global tolerance."""
    token = _EPS.set(float(eps))
    try:
        yield
    finally:
        _EPS.reset(token)


# ----------------------------------------------------------------------------
# scalar handling


def parse_scalar(x):
    """Turn an input coordinate into a Fraction when it is rational, else a float."""
    if isinstance(x, bool):
        raise TypeError("booleans are not coordinates")
    if isinstance(x, (Fraction, Integral)):
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        s = x.strip()
        try:
            return Fraction(s)
        except ValueError:
            return float(s)
    return float(x)


def is_rational_input(values) -> bool:
    """True iff every entry is an int, Fraction, or a rational string."""
    for x in np.asarray(values, dtype=object).ravel():
        if isinstance(x, bool):
            return False
        if isinstance(x, (Integral, Fraction)):
            continue
        if isinstance(x, str):
            try:
                Fraction(x.strip())
                continue
            except ValueError:
                return False
        return False
    return True


def as_exact(M) -> np.ndarray:
    """Object array of Fractions (floats are converted exactly)."""
    A = np.asarray(M, dtype=object)
    out = np.empty(A.shape, dtype=object)
    for idx, x in np.ndenumerate(A):
        out[idx] = x if isinstance(x, Fraction) else Fraction(parse_scalar(x))
    return out


def as_float(M) -> np.ndarray:
    A = np.asarray(M)
    if A.dtype == object:
        return np.vectorize(float, otypes=[float])(A) if A.size else A.astype(float)
    return A.astype(float)


def is_exact(M) -> bool:
    return isinstance(M, np.ndarray) and M.dtype == object


def sign(x, scale: float = 1.0) -> int:
    """Sign with the global tolerance (exact for Fractions)."""
    if isinstance(x, Fraction):
        return (x > 0) - (x < 0)
    tol = get_eps() * max(scale, 1e-300)
    if x > tol:
        return 1
    if x < -tol:
        return -1
    return 0


def fmt_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# ----------------------------------------------------------------------------
# exact elimination


def _rref_exact(M: np.ndarray):
    """Reduced row echelon form over the rationals. Returns (R, pivots)."""
    R = np.array(M, dtype=object, copy=True)
    rows, cols = R.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        p = next((i for i in range(r, rows) if R[i, c] != 0), None)
        if p is None:
            continue
        if p != r:
            R[[r, p]] = R[[p, r]]
        piv = R[r, c]
        R[r] = [x / piv for x in R[r]]
        for i in range(rows):
            if i != r and R[i, c] != 0:
                f = R[i, c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
    return R, pivots


def _svd_tol(s: np.ndarray) -> float:
    return get_eps() * (s[0] if s.size else 0.0)


def rank(M) -> int:
    if is_exact(M):
        if M.size == 0:
            return 0
        return len(_rref_exact(M)[1])
    A = as_float(M)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > _svd_tol(s)))


def kernel_basis(M) -> np.ndarray:
    """Columns spanning {x : Mx = 0}; a 0-column matrix when M has full column rank."""
    if is_exact(M):
        rows, cols = M.shape
        if rows == 0:
            return np.array([[Fraction(int(i == j)) for j in range(cols)] for i in range(cols)], dtype=object)
        R, pivots = _rref_exact(M)
        free = [c for c in range(cols) if c not in pivots]
        K = np.empty((cols, len(free)), dtype=object)
        K[:] = Fraction(0)
        for k, f in enumerate(free):
            K[f, k] = Fraction(1)
            for i, p in enumerate(pivots):
                K[p, k] = -R[i, f]
        return K
    A = as_float(M)
    rows, cols = A.shape
    if rows == 0 or not np.any(A):
        return np.eye(cols)
    _, s, vt = np.linalg.svd(A)
    r = int(np.sum(s > _svd_tol(s)))
    return vt[r:].T.copy()


def row_space_basis(M) -> np.ndarray:
    """Orthonormal basis (rows) of the row space, floating mode."""
    A = as_float(M)
    if A.size == 0 or not np.any(A):
        return np.zeros((0, A.shape[1]))
    _, s, vt = np.linalg.svd(A)
    r = int(np.sum(s > _svd_tol(s)))
    return vt[:r].copy()


def det(M):
    if is_exact(M):
        A = np.array(M, dtype=object, copy=True)
        n = A.shape[0]
        out = Fraction(1)
        for c in range(n):
            p = next((i for i in range(c, n) if A[i, c] != 0), None)
            if p is None:
                return Fraction(0)
            if p != c:
                A[[c, p]] = A[[p, c]]
                out = -out
            out *= A[c, c]
            for i in range(c + 1, n):
                f = A[i, c] / A[c, c]
                if f:
                    A[i] = [a - f * b for a, b in zip(A[i], A[c])]
        return out
    return float(np.linalg.det(as_float(M)))


def solve_linear(M, b):
    """Least-residual solution of Mx = b.

    Raises ``Infeasible`` when the residual exceeds eps * (|M| |x| + |b|).
    Exact inputs are solved exactly and must be consistent.
    """
    if is_exact(M) and is_exact(np.asarray(b, dtype=object)):
        A = np.asarray(M, dtype=object)
        bb = as_exact(b).reshape(-1, 1)
        R, pivots = _rref_exact(np.hstack([A, bb]))
        cols = A.shape[1]
        if cols in pivots:
            raise Infeasible("inconsistent exact system")
        x = np.empty(cols, dtype=object)
        x[:] = Fraction(0)
        for i, p in enumerate(pivots):
            x[p] = R[i, cols]
        return x
    A = as_float(M)
    bb = as_float(b)
    x, *_ = np.linalg.lstsq(A, bb, rcond=None)
    res = np.linalg.norm(A @ x - bb)
    bound = get_eps() * (np.linalg.norm(A, 2) * np.linalg.norm(x) + np.linalg.norm(bb))
    if res > max(bound, 1e-300):
        raise Infeasible(f"residual {res:.3e} exceeds {bound:.3e}")
    return x


# ----------------------------------------------------------------------------
# signatures


@dataclass(frozen=True)
class Signature:
    positive: int
    zero: int
    negative: int

    def as_tuple(self):
        return (self.positive, self.zero, self.negative)

    def __str__(self):
        return f"({self.positive},{self.zero},{self.negative})"


def _signature_exact(Q: np.ndarray) -> Signature:
    A = np.array(Q, dtype=object, copy=True)
    n = A.shape[0]
    pos = neg = 0
    active = list(range(n))
    while active:
        piv = next((i for i in active if A[i, i] != 0), None)
        if piv is None:
            pair = next(((i, j) for i in active for j in active if i < j and A[i, j] != 0), None)
            if pair is None:
                break
            i, j = pair
            # congruence e_i <- e_i + e_j creates a nonzero diagonal 2 a_ij
            A[i, :] = A[i, :] + A[j, :]
            A[:, i] = A[:, i] + A[:, j]
            piv = i
        p = A[piv, piv]
        if p > 0:
            pos += 1
        else:
            neg += 1
        rest = [k for k in active if k != piv]
        for k in rest:
            f = A[k, piv] / p
            if f:
                for m in rest:
                    A[k, m] -= f * A[piv, m]
        for k in rest:
            A[k, piv] = A[piv, k] = Fraction(0)
        active = rest
    return Signature(pos, n - pos - neg, neg)


def symmetric_signature(Q) -> Signature:
    """Inertia of a symmetric matrix.

    Exact matrices are diagonalized by congruence; floating matrices use
    eigenvalues, with |lambda| <= eps * |Q| counted as zero.
    """
    if is_exact(Q):
        A = np.asarray(Q, dtype=object)
        if any(A[i, j] != A[j, i] for i in range(A.shape[0]) for j in range(i)):
            raise NotSymmetric("exact matrix is not symmetric")
        return _signature_exact(A)
    A = as_float(Q)
    if A.shape[0] != A.shape[1]:
        raise NotSymmetric("matrix is not square")
    scale = np.abs(A).max() if A.size else 0.0
    if A.size and np.abs(A - A.T).max() > get_eps() * max(scale, 1.0):
        raise NotSymmetric("asymmetry exceeds tolerance")
    if A.size == 0:
        return Signature(0, 0, 0)
    w = np.linalg.eigvalsh((A + A.T) / 2)
    tol = get_eps() * np.linalg.norm(A, 2)
    pos = int(np.sum(w > tol))
    neg = int(np.sum(w < -tol))
    return Signature(pos, len(w) - pos - neg, neg)


def normalize_rows(M: np.ndarray) -> np.ndarray:
    A = as_float(M)
    nrm = np.linalg.norm(A, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return A / nrm
