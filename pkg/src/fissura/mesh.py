"""Admissible acute triangular meshes of polygonal domains.

The finite-volume analyses downstream need meshes whose triangles are all
strictly acute: the circumcenter then sits inside each element and the
segment joining the circumcenters of two neighbors is the perpendicular
bisector of their shared edge.  The generator lays down a column-offset
near-equilateral lattice (every triangle keeps one vertical edge, which
makes x-only surfaces lift with exactly zero y-slope) clipped to the
domain polygon, then optionally jitters interior vertices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .surface import SurfaceSpec, points_in_polygon

GEOM_TOL = 1e-9

# acute-safety window for the lattice aspect ratio dx / dy: the apex angle is
# 2*atan(dy/(2*dx)) and the base angles approach 90 deg as dx/dy grows.
_ASPECT_LO = 0.55
_ASPECT_HI = 1.80
# fitted edge length may deviate from the requested target by at most this factor
_FIT_LO = 2.0 / 3.0
_FIT_HI = 1.5


class MeshError(Exception):
    pass


class DomainTooSmall(MeshError):
    """No triangle of roughly the requested size fits inside the domain."""


class AcutenessUnachievable(MeshError):
    """Validation failed even after undoing all jitter (degenerate input)."""


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    value: float
    limit: float

    def as_dict(self):
        return {"kind": self.kind, "index": int(self.index),
                "value": float(self.value), "limit": float(self.limit)}


@dataclass
class Mesh2D:
    """Planar triangular mesh with circumcenter control points.

    vertices        (n, 2) float
    triangles       (m, 3) int, counter-clockwise
    edges           (E, 2) int vertex pairs, sorted per edge
    edge_tris       (E, 2) int adjacent triangles, -1 on the boundary side
    tri_edges       (m, 3) int edge id of local edge i = (v_i, v_{i+1})
    circumcenters   (m, 2) float control points x_K
    edge_midpoints  (E, 2) float transmission points y_sigma
    """

    vertices: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_tris: np.ndarray
    tri_edges: np.ndarray
    circumcenters: np.ndarray
    edge_midpoints: np.ndarray

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def interior_edges(self):
        return np.nonzero(self.edge_tris[:, 1] >= 0)[0]

    @property
    def boundary_vertices(self):
        bnd = self.edges[self.edge_tris[:, 1] < 0]
        return np.unique(bnd)

    def triangle_areas(self):
        a, b, c = (self.vertices[self.triangles[:, k]] for k in range(3))
        return 0.5 * np.cross(b - a, c - a)


# ---------------------------------------------------------------------------
# construction helpers
# ---------------------------------------------------------------------------

def circumcenters_of(vertices, triangles):
    """Circumcenters of all triangles (vectorized)."""
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    d = 2.0 * (a[:, 0] * (b[:, 1] - c[:, 1]) + b[:, 0] * (c[:, 1] - a[:, 1])
               + c[:, 0] * (a[:, 1] - b[:, 1]))
    a2 = np.einsum("ij,ij->i", a, a)
    b2 = np.einsum("ij,ij->i", b, b)
    c2 = np.einsum("ij,ij->i", c, c)
    ux = (a2 * (b[:, 1] - c[:, 1]) + b2 * (c[:, 1] - a[:, 1]) + c2 * (a[:, 1] - b[:, 1])) / d
    uy = (a2 * (c[:, 0] - b[:, 0]) + b2 * (a[:, 0] - c[:, 0]) + c2 * (b[:, 0] - a[:, 0])) / d
    return np.column_stack([ux, uy])


def _acute_mask(vertices, triangles, margin=0.0):
    """Per-triangle test: positively oriented and strictly acute.

    margin is a lower bound on each corner cosine; 0 accepts anything
    short of a right angle.
    """
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    area2 = np.cross(b - a, c - a)
    ok = area2 > 1e-14
    for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
        u, v = q - p, r - p
        dot = np.einsum("ij,ij->i", u, v)
        scale = np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
        ok &= dot > margin * scale
    return ok


def build_mesh(vertices, triangles) -> Mesh2D:
    """Assemble full mesh connectivity from vertex and triangle arrays.

    Triangles are re-oriented counter-clockwise; degenerate (zero-area)
    triangles are rejected.
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    if triangles.ndim != 2 or triangles.shape[1] != 3:
        raise MeshError("triangles must be an (m, 3) index array")
    if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
        raise MeshError("triangle index out of range")
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    area2 = np.cross(b - a, c - a)
    if np.any(np.abs(area2) <= 1e-14):
        raise MeshError("degenerate (zero-area) triangle")
    flip = area2 < 0
    triangles = triangles.copy()
    triangles[flip, 1], triangles[flip, 2] = triangles[flip, 2], triangles[flip, 1]

    edge_ids: dict[tuple[int, int], int] = {}
    edges = []
    edge_tris = []
    tri_edges = np.empty_like(triangles)
    for t, tri in enumerate(triangles):
        for i in range(3):
            key = (int(tri[i]), int(tri[(i + 1) % 3]))
            key = (min(key), max(key))
            e = edge_ids.get(key)
            if e is None:
                e = len(edges)
                edge_ids[key] = e
                edges.append(key)
                edge_tris.append([t, -1])
            else:
                if edge_tris[e][1] != -1:
                    raise MeshError(f"edge {key} shared by more than two triangles")
                edge_tris[e][1] = t
            tri_edges[t, i] = e
    edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
    edge_tris = np.array(edge_tris, dtype=np.int64).reshape(-1, 2)
    cc = circumcenters_of(vertices, triangles)
    mid = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])
    return Mesh2D(vertices=vertices, triangles=triangles, edges=edges,
                  edge_tris=edge_tris, tri_edges=tri_edges,
                  circumcenters=cc, edge_midpoints=mid)


# ---------------------------------------------------------------------------
# structured generator
# ---------------------------------------------------------------------------

def _fit_count(extent, step):
    n = int(round(extent / step))
    return max(n, 1)


def generate_mesh(spec: SurfaceSpec, target_edge_length: float,
                  jitter: float = 0.0, seed: int = 0) -> Mesh2D:
    """Build an acute triangular mesh of the largest structured sub-polygon.

    Column-offset lattice: vertices sit in vertical columns spaced ~0.87 of
    the (fitted) edge length, alternate columns shifted by half an edge, so
    every triangle has one vertical edge and near-60-degree angles.  Only
    triangles entirely inside the domain polygon are kept.  Optional jitter
    displaces interior vertices by a fraction of the edge length; triangles
    that lose acuteness have their vertices snapped back.
    """
    if target_edge_length <= 0:
        raise ValueError("target_edge_length must be positive")
    if not (0.0 <= jitter < 0.3):
        raise ValueError("jitter must lie in [0, 0.3)")
    poly = spec.domain
    xmin, ymin = poly.min(axis=0)
    xmax, ymax = poly.max(axis=0)
    width, height = xmax - xmin, ymax - ymin
    if width <= 0 or height <= 0:
        raise DomainTooSmall("domain has empty bounding box")

    n_rows = _fit_count(height, target_edge_length)
    dy = height / n_rows
    if not (_FIT_LO - 1e-12) * target_edge_length <= dy <= (_FIT_HI + 1e-12) * target_edge_length:
        raise DomainTooSmall(
            f"no edge length near {target_edge_length} fits a domain of height {height}")
    n_cols = _fit_count(width, np.sqrt(3.0) / 2.0 * dy)
    dx = width / n_cols
    if not _ASPECT_LO * dy <= dx <= _ASPECT_HI * dy:
        for cand in (n_cols - 1, n_cols + 1):
            if cand >= 1 and _ASPECT_LO * dy <= width / cand <= _ASPECT_HI * dy:
                n_cols, dx = cand, width / cand
                break
        else:
            raise DomainTooSmall(
                f"domain of width {width} cannot hold near-equilateral columns "
                f"of edge length {dy}")

    # lattice vertices, indexed (column, row)
    ids = {}
    verts = []
    for j in range(n_cols + 1):
        x = xmin + j * dx
        off = 0.5 * dy if j % 2 else 0.0
        n_in_col = n_rows if j % 2 else n_rows + 1
        for i in range(n_in_col):
            ids[(j, i)] = len(verts)
            verts.append((x, ymin + off + i * dy))
    verts = np.array(verts)

    tris = []
    for j in range(n_cols):
        even = j % 2 == 0
        # vertical edges of column j with apex in column j+1
        n_in_col = n_rows + 1 if even else n_rows
        for i in range(n_in_col - 1):
            apex = (j + 1, i) if even else (j + 1, i + 1)
            if apex in ids:
                tris.append((ids[(j, i)], ids[(j, i + 1)], ids[apex]))
        # vertical edges of column j+1 with apex in column j
        n_in_next = n_rows if even else n_rows + 1
        for i in range(n_in_next - 1):
            apex = (j, i + 1) if even else (j, i)
            if apex in ids:
                tris.append((ids[(j + 1, i)], ids[(j + 1, i + 1)], ids[apex]))
    if not tris:
        raise DomainTooSmall("lattice produced no triangles")
    tris = np.array(tris, dtype=np.int64)

    # keep triangles whose closure lies inside the polygon
    tol = GEOM_TOL * max(width, height, 1.0)
    pa, pb, pc = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    probes = np.concatenate([
        pa, pb, pc,
        0.5 * (pa + pb), 0.5 * (pb + pc), 0.5 * (pc + pa),
        (pa + pb + pc) / 3.0,
    ])
    ok = points_in_polygon(probes, poly, tol=tol).reshape(7, -1).all(axis=0)
    tris = tris[ok]
    if len(tris) == 0:
        raise DomainTooSmall("no lattice triangle fits inside the domain polygon")

    # compact vertex numbering
    used = np.unique(tris)
    remap = -np.ones(len(verts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    verts = verts[used]
    tris = remap[tris]

    if jitter > 0.0:
        verts = _apply_jitter(verts, tris, jitter * dy, seed)

    mesh = build_mesh(verts, tris)
    report = validate_mesh(mesh)
    if report:
        raise AcutenessUnachievable(
            f"generated mesh failed validation: {[v.as_dict() for v in report[:5]]}")
    return mesh


def _apply_jitter(verts, tris, radius, seed):
    """Displace interior vertices inside a disk, undoing moves that break acuteness."""
    boundary = _boundary_vertices(tris)
    rng = np.random.default_rng(seed)
    n = len(verts)
    r = radius * np.sqrt(rng.uniform(size=n))
    th = rng.uniform(0.0, 2.0 * np.pi, size=n)
    disp = np.column_stack([r * np.cos(th), r * np.sin(th)])
    disp[boundary] = 0.0
    out = verts + disp
    # restoring a vertex can break a neighbor that was fine, so iterate;
    # the unjittered configuration is valid, so this terminates
    for _ in range(n + 1):
        bad = ~_acute_mask(out, tris, margin=1e-6)
        if not bad.any():
            break
        out[np.unique(tris[bad])] = verts[np.unique(tris[bad])]
    return out


def _boundary_vertices(tris):
    counts = {}
    for tri in tris:
        for i in range(3):
            key = (int(tri[i]), int(tri[(i + 1) % 3]))
            key = (min(key), max(key))
            counts[key] = counts.get(key, 0) + 1
    bnd = {v for key, c in counts.items() if c == 1 for v in key}
    return np.array(sorted(bnd), dtype=np.int64)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_mesh(mesh: Mesh2D, tol: float = GEOM_TOL) -> list[Violation]:
    """Check all admissibility invariants; an empty list means the mesh is valid.

    Violations are data, not exceptions: acuteness per triangle corner,
    circumcenter correctness and interiority, transmission points at edge
    midpoints, and circumcenter-line orthogonality across interior edges.
    """
    out: list[Violation] = []
    v, t = mesh.vertices, mesh.triangles
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]

    area2 = np.cross(b - a, c - a)
    for k in np.nonzero(area2 <= 1e-14)[0]:
        out.append(Violation("degenerate_triangle", k, float(area2[k]), 1e-14))

    # acuteness: every corner cosine must exceed tol
    for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
        u, w = q - p, r - p
        cosv = (np.einsum("ij,ij->i", u, w)
                / (np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1)))
        for k in np.nonzero(cosv <= tol)[0]:
            out.append(Violation("non_acute_angle", k, float(cosv[k]), tol))

    # circumcenter consistency: equidistant from the three vertices
    cc = mesh.circumcenters
    ra = np.linalg.norm(cc - a, axis=1)
    rb = np.linalg.norm(cc - b, axis=1)
    rc = np.linalg.norm(cc - c, axis=1)
    spread = np.maximum(np.abs(ra - rb), np.maximum(np.abs(rb - rc), np.abs(ra - rc)))
    for k in np.nonzero(spread > tol * np.maximum(ra, 1.0))[0]:
        out.append(Violation("circumcenter_mismatch", k, float(spread[k]), tol))

    # circumcenter strictly inside its triangle (barycentric coordinates)
    w0 = np.cross(b - cc, c - cc)
    w1 = np.cross(c - cc, a - cc)
    w2 = np.cross(a - cc, b - cc)
    bary_min = np.minimum(w0, np.minimum(w1, w2)) / area2
    for k in np.nonzero(bary_min <= tol)[0]:
        out.append(Violation("circumcenter_outside", k, float(bary_min[k]), tol))

    # transmission points at edge midpoints
    mid = 0.5 * (v[mesh.edges[:, 0]] + v[mesh.edges[:, 1]])
    dev = np.linalg.norm(mesh.edge_midpoints - mid, axis=1)
    for e in np.nonzero(dev > tol)[0]:
        out.append(Violation("transmission_point_off_midpoint", e, float(dev[e]), tol))

    # non-manifold edges would have been rejected at build time; re-check shape
    if mesh.edge_tris.shape[1] != 2:
        out.append(Violation("edge_adjacency_shape", -1, float(mesh.edge_tris.shape[1]), 2))

    # orthogonality between the circumcenter line and each interior edge
    interior = mesh.interior_edges
    if len(interior):
        e = mesh.edges[interior]
        tan = v[e[:, 1]] - v[e[:, 0]]
        tan = tan / np.linalg.norm(tan, axis=1, keepdims=True)
        dcc = cc[mesh.edge_tris[interior, 0]] - cc[mesh.edge_tris[interior, 1]]
        ncc = np.linalg.norm(dcc, axis=1)
        cosang = np.abs(np.einsum("ij,ij->i", dcc, tan)) / np.where(ncc == 0, 1.0, ncc)
        for idx in np.nonzero((cosang > tol) | (ncc == 0))[0]:
            out.append(Violation("edge_orthogonality", int(interior[idx]),
                                 float(cosang[idx]), tol))
    return out


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------

def mesh_to_json(mesh: Mesh2D) -> dict:
    return {"vertices": mesh.vertices.tolist(), "triangles": mesh.triangles.tolist()}


def mesh_from_json(obj: dict) -> Mesh2D:
    if not isinstance(obj, dict) or "vertices" not in obj or "triangles" not in obj:
        raise MeshError("mesh JSON must contain 'vertices' and 'triangles'")
    return build_mesh(np.asarray(obj["vertices"], dtype=float),
                      np.asarray(obj["triangles"], dtype=np.int64))


def save_mesh(mesh: Mesh2D, path):
    with open(path, "w") as fh:
        json.dump(mesh_to_json(mesh), fh)


def load_mesh(path) -> Mesh2D:
    with open(path) as fh:
        return mesh_from_json(json.load(fh))
