"""Lift a planar mesh onto a crack surface and collect element geometry.

Each planar triangle maps to the plane through its three surface points
(the convex hull of the lifted vertices).  Control and transmission points
are lifted within that plane, not by evaluating the surface, so they stay
on the piecewise-linear approximation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import Mesh2D, validate_mesh
from .surface import SurfaceSpec


class InvalidMesh(ValueError):
    """The planar mesh violates admissibility and cannot be lifted."""


@dataclass
class LiftedTriangulation:
    """Geometric quantities of a lifted mesh consumed by the energy analyses.

    base                 the planar mesh
    lifted_vertices      (n, 3) vertex positions on the surface
    normals              (m, 3) unit element normals, upward component > 0
    areas                (m,)   lifted element areas
    control_points       (m, 3) in-plane lift of each circumcenter
    transmission_points  (E, 3) lifted edge midpoints
    influence_areas      (m, 3) lifted sub-triangle area per local edge
    edge_normals         (m, 3, 3) in-plane outward unit normal per local edge
    edge_drop            (m, 3) height of the element's control point minus the
                         neighbor control point (interior) or the lifted edge
                         midpoint (boundary); positive where the edge leads down
    neighbors            (m, 3) adjacent triangle per local edge, -1 on boundary
    """

    base: Mesh2D
    lifted_vertices: np.ndarray
    normals: np.ndarray
    areas: np.ndarray
    control_points: np.ndarray
    transmission_points: np.ndarray
    influence_areas: np.ndarray
    edge_normals: np.ndarray
    edge_drop: np.ndarray
    neighbors: np.ndarray

    @property
    def n_elements(self):
        return len(self.normals)

    @property
    def total_area(self):
        return float(self.areas.sum())

    def area_weights(self):
        return self.areas / self.areas.sum()


def lift(mesh: Mesh2D, spec: SurfaceSpec, validate: bool = True) -> LiftedTriangulation:
    """Lift an admissible planar mesh onto the surface."""
    if validate:
        report = validate_mesh(mesh)
        if report:
            raise InvalidMesh(f"mesh fails admissibility: {report[0].as_dict()} "
                              f"(+{len(report) - 1} more)" if len(report) > 1 else
                              f"mesh fails admissibility: {report[0].as_dict()}")
    v2 = mesh.vertices
    z = np.asarray(spec.evaluate(v2[:, 0], v2[:, 1]), dtype=float)
    w = np.column_stack([v2, z])

    t = mesh.triangles
    wa, wb, wc = w[t[:, 0]], w[t[:, 1]], w[t[:, 2]]
    raw = np.cross(wb - wa, wc - wa)
    nrm = np.linalg.norm(raw, axis=1)
    normals = raw / nrm[:, None]
    areas = 0.5 * nrm

    # control point: barycentric lift of the circumcenter into the element plane
    lam = _barycentric(v2, t, mesh.circumcenters)
    control = (lam[:, 0:1] * wa + lam[:, 1:2] * wb + lam[:, 2:3] * wc)

    # transmission point: midpoint of the lifted edge (shared by both planes)
    e = mesh.edges
    transmission = 0.5 * (w[e[:, 0]] + w[e[:, 1]])

    m = len(t)
    influence = np.empty((m, 3))
    edge_normals = np.empty((m, 3, 3))
    edge_drop = np.empty((m, 3))
    neighbors = np.empty((m, 3), dtype=np.int64)
    corners = (wa, wb, wc)
    for i in range(3):
        p0 = corners[i]
        p1 = corners[(i + 1) % 3]
        influence[:, i] = 0.5 * np.linalg.norm(np.cross(p0 - control, p1 - control), axis=1)
        nu = np.cross(normals, p1 - p0)
        nu /= np.linalg.norm(nu, axis=1, keepdims=True)
        mid = 0.5 * (p0 + p1)
        outward = np.einsum("ij,ij->i", nu, mid - control)
        nu[outward < 0] *= -1.0
        edge_normals[:, i, :] = nu

        eid = mesh.tri_edges[:, i]
        adj = mesh.edge_tris[eid]
        own = np.arange(m)
        nb = np.where(adj[:, 0] == own, adj[:, 1], adj[:, 0])
        neighbors[:, i] = nb
    # neighbor control heights need the full control array, so a second pass
    for i in range(3):
        nb = neighbors[:, i]
        interior = nb >= 0
        eid = mesh.tri_edges[:, i]
        other_z = np.where(interior, control[np.clip(nb, 0, None), 2], transmission[eid, 2])
        edge_drop[:, i] = control[:, 2] - other_z

    return LiftedTriangulation(
        base=mesh, lifted_vertices=w, normals=normals, areas=areas,
        control_points=control, transmission_points=transmission,
        influence_areas=influence, edge_normals=edge_normals,
        edge_drop=edge_drop, neighbors=neighbors)


def _barycentric(v2, tris, pts):
    """Barycentric coordinates of pts[k] within triangle tris[k]."""
    a = v2[tris[:, 0]]
    b = v2[tris[:, 1]]
    c = v2[tris[:, 2]]
    area2 = np.cross(b - a, c - a)
    l0 = np.cross(b - pts, c - pts) / area2
    l1 = np.cross(c - pts, a - pts) / area2
    l2 = 1.0 - l0 - l1
    return np.column_stack([l0, l1, l2])
