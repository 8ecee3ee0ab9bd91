"""Crack-surface definitions: analytic height families, heightmaps, polygonal domains.

A surface is a graph z = zeta(x, y) over a simple polygon.  The analytic
families cover the synthetic cases used throughout the test suite; arbitrary
surfaces enter through a gridded heightmap sampled from CSV.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

SURFACE_KINDS = ("plane", "ridge", "paraboloid", "sinusoid", "heightmap")

# required parameter names per analytic family
_REQUIRED_PARAMS = {
    "plane": ("a", "b"),
    "ridge": ("amplitude", "wavelength"),
    "paraboloid": ("a", "b"),
    "sinusoid": ("ax", "ay"),
    "heightmap": (),
}


class SurfaceError(ValueError):
    """Invalid surface definition (bad polygon, missing parameters, ...)."""


# ---------------------------------------------------------------------------
# polygon utilities
# ---------------------------------------------------------------------------

def polygon_area(poly: np.ndarray) -> float:
    """Signed area (positive for counter-clockwise vertex order)."""
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _proper_intersect(p1, p2, q1, q2):
    """True if open segments p1p2 and q1q2 cross at an interior point."""
    d1 = np.cross(p2 - p1, q1 - p1)
    d2 = np.cross(p2 - p1, q2 - p1)
    d3 = np.cross(q2 - q1, p1 - q1)
    d4 = np.cross(q2 - q1, p2 - q1)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def polygon_is_simple(poly: np.ndarray) -> bool:
    """Check that no two non-adjacent edges intersect."""
    n = len(poly)
    segs = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _proper_intersect(*segs[i], *segs[j]):
                return False
    return True


def _point_segment_dist(pts, a, b):
    """Distances from points (p,2) to each segment a[k]->b[k], result (p,n)."""
    ab = b - a                                   # (n,2)
    ap = pts[:, None, :] - a[None, :, :]         # (p,n,2)
    denom = np.einsum("nk,nk->n", ab, ab)
    denom = np.where(denom == 0.0, 1.0, denom)
    t = np.clip(np.einsum("pnk,nk->pn", ap, ab) / denom, 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    return np.linalg.norm(pts[:, None, :] - closest, axis=2)


def points_in_polygon(pts, poly, tol: float = 1e-9):
    """Vectorized inside-or-on test with a boundary tolerance band."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    a = np.asarray(poly, dtype=float)
    b = np.roll(a, -1, axis=0)
    x, y = pts[:, 0:1], pts[:, 1:2]
    ay, by = a[:, 1][None, :], b[:, 1][None, :]
    ax, bx = a[:, 0][None, :], b[:, 0][None, :]
    straddle = (ay <= y) != (by <= y)
    dy = np.where(by == ay, 1.0, by - ay)
    xs = ax + (y - ay) * (bx - ax) / dy
    inside = (np.sum(straddle & (xs > x), axis=1) % 2) == 1
    on = _point_segment_dist(pts, a, b).min(axis=1) <= tol
    return inside | on


# ---------------------------------------------------------------------------
# heightmap support
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Heightmap:
    """Rectangular grid of surface samples with bilinear interpolation.

    Queries are clamped to the grid hull so evaluation inside the domain
    never fails even when roundoff pushes a point marginally outside.
    """

    xs: np.ndarray  # (nx,) strictly increasing
    ys: np.ndarray  # (ny,) strictly increasing
    z: np.ndarray   # (ny, nx)

    def evaluate(self, x, y):
        x = np.clip(np.asarray(x, dtype=float), self.xs[0], self.xs[-1])
        y = np.clip(np.asarray(y, dtype=float), self.ys[0], self.ys[-1])
        ix = np.clip(np.searchsorted(self.xs, x, side="right") - 1, 0, len(self.xs) - 2)
        iy = np.clip(np.searchsorted(self.ys, y, side="right") - 1, 0, len(self.ys) - 2)
        x0, x1 = self.xs[ix], self.xs[ix + 1]
        y0, y1 = self.ys[iy], self.ys[iy + 1]
        tx = (x - x0) / (x1 - x0)
        ty = (y - y0) / (y1 - y0)
        z00 = self.z[iy, ix]
        z10 = self.z[iy, ix + 1]
        z01 = self.z[iy + 1, ix]
        z11 = self.z[iy + 1, ix + 1]
        return (1 - ty) * ((1 - tx) * z00 + tx * z10) + ty * ((1 - tx) * z01 + tx * z11)


def load_heightmap_csv(path) -> Heightmap:
    """Read a heightmap grid: header row of x-coordinates, first column y-coordinates."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if len(rows) < 3 or len(rows[0]) < 3:
        raise SurfaceError(f"heightmap {path}: need at least a 2x2 grid of samples")
    try:
        xs = np.array([float(c) for c in rows[0][1:]])
        ys = np.array([float(r[0]) for r in rows[1:]])
        z = np.array([[float(c) for c in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise SurfaceError(f"heightmap {path}: non-numeric cell ({exc})") from exc
    if z.shape != (len(ys), len(xs)):
        raise SurfaceError(f"heightmap {path}: ragged grid")
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
        raise SurfaceError(f"heightmap {path}: coordinates must be strictly increasing")
    return Heightmap(xs=xs, ys=ys, z=z)


# ---------------------------------------------------------------------------
# surface spec
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceSpec:
    """A surface z = zeta(x, y) over a simple polygonal domain.

    kind selects the height family; params holds its named real parameters.
    The domain polygon must be simple, counter-clockwise, with >= 3 vertices.
    """

    kind: str
    params: dict = field(default_factory=dict)
    domain: np.ndarray = None
    heightmap: Heightmap | None = None

    def __post_init__(self):
        if self.kind not in SURFACE_KINDS:
            raise SurfaceError(f"unknown surface kind {self.kind!r}")
        for name in _REQUIRED_PARAMS[self.kind]:
            if name not in self.params:
                raise SurfaceError(f"surface kind {self.kind!r} requires parameter {name!r}")
        if self.kind == "heightmap" and self.heightmap is None:
            raise SurfaceError("heightmap surface requires grid data")
        poly = np.asarray(self.domain, dtype=float)
        if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
            raise SurfaceError("domain must be a list of >= 3 planar vertices")
        if abs(polygon_area(poly)) <= 0.0:
            raise SurfaceError("domain polygon has zero area")
        if polygon_area(poly) < 0:
            poly = poly[::-1].copy()  # normalize to counter-clockwise
        if not polygon_is_simple(poly):
            raise SurfaceError("domain polygon is self-intersecting")
        object.__setattr__(self, "domain", poly)
        if self.kind == "heightmap":
            hm = self.heightmap
            if (poly[:, 0].min() < hm.xs[0] - 1e-9 or poly[:, 0].max() > hm.xs[-1] + 1e-9
                    or poly[:, 1].min() < hm.ys[0] - 1e-9 or poly[:, 1].max() > hm.ys[-1] + 1e-9):
                raise SurfaceError("heightmap grid does not cover the domain polygon")

    def evaluate(self, x, y):
        """Height zeta at the given coordinates (vectorized)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        p = self.params
        if self.kind == "plane":
            return p["a"] * x + p["b"] * y
        if self.kind == "ridge":
            return p["amplitude"] * np.sin(2.0 * np.pi * x / p["wavelength"])
        if self.kind == "paraboloid":
            return p["a"] * x * x + p["b"] * y * y
        if self.kind == "sinusoid":
            amp = p.get("amplitude", 1.0)
            return amp * np.sin(p["ax"] * x) * np.sin(p["ay"] * y)
        return self.heightmap.evaluate(x, y)

    def evaluate_points(self, pts):
        pts = np.asarray(pts, dtype=float)
        return self.evaluate(pts[..., 0], pts[..., 1])


def unit_square(margin: float = 0.0) -> np.ndarray:
    """Convenience domain polygon: the unit square, optionally shrunk."""
    lo, hi = margin, 1.0 - margin
    return np.array([[lo, lo], [hi, lo], [hi, hi], [lo, hi]])
