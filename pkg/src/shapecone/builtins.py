"""Named example configurations.

All generators are deterministic for fixed parameters (and seed).
"""
from __future__ import annotations

import math
import re
from typing import Optional, Sequence

import numpy as np

from .config import VectorConfiguration
from .errors import BadAngles, InputError


def parallelepiped(vectors: Optional[Sequence[Sequence[float]]] = None) -> VectorConfiguration:
    """v_1, v_2, v_3 and their negatives.  Default: the coordinate box (exact)."""
    if vectors is None:
        rows = [[1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, 0, 0], [0, -1, 0], [0, 0, -1]]
        return VectorConfiguration.from_rows(rows)
    U = np.asarray(vectors, dtype=float)
    U = U / np.linalg.norm(U, axis=1, keepdims=True)
    return VectorConfiguration.from_rows(np.vstack([U, -U]), exact=False)


def regular_angles(n: int) -> list:
    return [2 * math.pi / n] * n


def check_angles(alpha: Sequence[float]) -> None:
    a = np.asarray(alpha, dtype=float)
    if len(a) < 3 or np.any(a <= 0) or np.any(a >= math.pi) or abs(a.sum() - 2 * math.pi) > 1e-9:
        raise BadAngles("need n >= 3 angles in (0, pi) summing to 2 pi")


def polygon_normals(alpha: Sequence[float]) -> np.ndarray:
    """Unit vectors with the angle from v_i to v_{i+1} equal to alpha_{i+1}.

    ``alpha[0]`` is the angle from v_n to v_1; v_1 = (1, 0).
    """
    check_angles(alpha)
    theta = np.concatenate([[0.0], np.cumsum(alpha[1:])])
    return np.column_stack([np.cos(theta), np.sin(theta)])


def ngon(alpha: Sequence[float] = None) -> VectorConfiguration:
    alpha = regular_angles(5) if alpha is None else list(alpha)
    return VectorConfiguration.from_rows(polygon_normals(alpha), exact=False)


def prism(alpha: Sequence[float] = None) -> VectorConfiguration:
    """Polygon normals in the plane plus +-e_3 (last two rows)."""
    alpha = regular_angles(5) if alpha is None else list(alpha)
    P = polygon_normals(alpha)
    rows = np.vstack([np.column_stack([P, np.zeros(len(P))]), [[0, 0, 1.0], [0, 0, -1.0]]])
    return VectorConfiguration.from_rows(rows, exact=False)


def _triangle_normals() -> np.ndarray:
    t = 2 * math.pi / 3
    return np.array([[math.cos(k * t), math.sin(k * t)] for k in range(3)])


def bipyramid_rows(lam: float = 0.6) -> np.ndarray:
    """v_{1,2,3} = lam u_i + mu e_3, v_{4,5,6} = lam u_i - mu e_3 with lam^2 + mu^2 = 1."""
    if not 0 < lam < 1:
        raise InputError("bipyramid parameter must lie in (0, 1)")
    mu = math.sqrt(1 - lam * lam)
    U = _triangle_normals()
    up = np.column_stack([lam * U, np.full(3, mu)])
    down = np.column_stack([lam * U, np.full(3, -mu)])
    return np.vstack([up, down])


def bipyramid(lam: float = 0.6) -> VectorConfiguration:
    return VectorConfiguration.from_rows(bipyramid_rows(lam), exact=False)


def perturbed_bipyramid(seed: int = 0, magnitude: float = 0.05, lam: float = 0.6) -> VectorConfiguration:
    rng = np.random.default_rng(seed)
    V = bipyramid_rows(lam) + magnitude * rng.standard_normal((6, 3))
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    return VectorConfiguration.from_rows(V, exact=False)


def dodecahedron() -> VectorConfiguration:
    """Face normals of the regular dodecahedron (vertices of an icosahedron)."""
    phi = (1 + math.sqrt(5)) / 2
    rows = []
    for s1 in (1, -1):
        for s2 in (1, -1):
            rows += [(0, s1, s2 * phi), (s1, s2 * phi, 0), (s2 * phi, 0, s1)]
    return VectorConfiguration.from_rows(rows, exact=False, normalize=True)


def tetrahedron_normals() -> np.ndarray:
    return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float) / math.sqrt(3)


_CALL = re.compile(r"^\s*([a-z\-]+)\s*(?:\((.*)\))?\s*$")


def parse_builtin(spec: str, seed: Optional[int] = None) -> VectorConfiguration:
    """Parse ``NAME`` or ``NAME(arg, ...)``.

    ngon / prism take either a single integer n (regular) or the n angles in
    radians; bipyramid takes lambda; perturbed-bipyramid takes
    (seed, magnitude).
    """
    m = _CALL.match(spec)
    if not m:
        raise InputError(f"cannot parse builtin {spec!r}")
    name, argstr = m.group(1), m.group(2)
    try:
        args = [float(a) for a in argstr.split(",")] if argstr and argstr.strip() else []
    except ValueError as exc:
        raise InputError(f"bad builtin arguments in {spec!r}") from exc
    if name == "parallelepiped":
        return parallelepiped()
    if name in ("ngon", "prism"):
        if len(args) == 1 and float(args[0]).is_integer():
            alpha = regular_angles(int(args[0]))
        elif args:
            alpha = args
        else:
            alpha = None
        try:
            return ngon(alpha) if name == "ngon" else prism(alpha)
        except BadAngles as exc:
            raise InputError(str(exc)) from exc
    if name == "bipyramid":
        return bipyramid(*args[:1]) if args else bipyramid()
    if name == "dodecahedron":
        return dodecahedron()
    if name == "perturbed-bipyramid":
        s = int(args[0]) if args else (seed if seed is not None else 0)
        mag = args[1] if len(args) > 1 else 0.05
        return perturbed_bipyramid(s, mag)
    raise InputError(f"unknown builtin {name!r}")
