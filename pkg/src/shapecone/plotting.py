"""SVG figures: affine Gale diagrams and chamber / cell pictures for n - d <= 3."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import numeric as nm  # noqa: E402
from .config import GaleDiagram, affine_gale  # noqa: E402

plt.rcParams["svg.hashsalt"] = "shapecone"


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_affine_gale(G: GaleDiagram, path) -> Optional[Path]:
    """Black points for positive, white for negative scaling; labels are 1-based."""
    if G.m not in (2, 3):
        return None
    A = affine_gale(G)
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    if G.m == 3:
        P = A.plane_coordinates()
    else:
        P = np.column_stack([A.plane_coordinates()[:, 0], np.zeros(len(A.points))])
    seen = {}
    for p, xy in zip(A.points, P):
        key = tuple(np.round(xy, 9))
        off = seen.get(key, 0)
        seen[key] = off + 1
        ax.scatter([xy[0]], [xy[1]], s=60, facecolors="k" if p.color == "black" else "w", edgecolors="k",
                   zorder=3)
        ax.annotate(str(G.config.labels[p.source]), xy, textcoords="offset points",
                    xytext=(6, 6 + 10 * off), fontsize=9)
    ax.set_aspect("equal")
    ax.set_title("affine Gale diagram")
    ax.margins(0.2)
    return _save(fig, path)


def _slice_frame(A: np.ndarray):
    """Direction a with a . y > 0 on the cone {A y >= 0}, and a basis of a-perp."""
    a = (A / np.linalg.norm(A, axis=1, keepdims=True)).sum(axis=0)
    a /= np.linalg.norm(a)
    return a, nm.kernel_basis(a[None, :])


def _polygon(rays: np.ndarray, a: np.ndarray, B: np.ndarray) -> np.ndarray:
    pts = np.array([r / (r @ a) for r in rays]) @ B
    c = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0]))
    return pts[order]


def plot_chambers(G: GaleDiagram, cones, path, clir_rows: Optional[np.ndarray] = None,
                  annotations: Optional[dict] = None, title: str = "type cones") -> Optional[Path]:
    """Draw each 3-dimensional cone as a polygon in an affine slice."""
    if G.m != 3 or not cones:
        return None
    A = clir_rows if clir_rows is not None and len(clir_rows) else np.vstack([c.cone.halfspaces for c in cones])
    a, B = _slice_frame(A)
    fig, ax = plt.subplots(figsize=(5, 5))
    for i, tc in enumerate(cones):
        R = tc.cone.rays
        if len(R) < 3 or np.any(R @ a <= 0):
            continue
        poly = _polygon(R, a, B)
        ax.fill(poly[:, 0], poly[:, 1], alpha=0.25, edgecolor="k", linewidth=0.8)
        c = poly.mean(axis=0)
        ax.annotate(str(i), c, ha="center", va="center", fontsize=9)
    for xy, text in (annotations or {}).items():
        ax.annotate(text, xy, fontsize=7, color="tab:red")
    ax.set_aspect("equal")
    ax.set_title(title)
    ax.margins(0.1)
    return _save(fig, path)


def project_to_slice(G: GaleDiagram, cones, clir_rows, y) -> tuple:
    A = clir_rows if clir_rows is not None and len(clir_rows) else np.vstack([c.cone.halfspaces for c in cones])
    a, B = _slice_frame(A)
    y = np.asarray(y, dtype=float)
    return tuple(float(v) for v in (y / (y @ a)) @ B)


def degrees(x: float) -> str:
    return f"{math.degrees(x):.2f}"
