"""Element velocity fields driven by a horizontal master velocity.

A master velocity is a horizontal 2-vector; each element carries a 3-D
velocity obtained by bending the master direction into the element plane
while preserving its component along the plane's horizontal trace.  The
gravity variant additionally scales speeds by the free-fall magnitude
relative to the highest control point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lifting import LiftedTriangulation

UNIT_TOL = 1e-9


class InvalidNormal(ValueError):
    pass


class NotUnit(ValueError):
    pass


@dataclass(frozen=True)
class FluidParams:
    """Fluid and wall constants: viscosity, density, gravity, friction factor."""

    mu: float = 1.0e-3
    rho: float = 1.0e3
    g: float = 9.81
    gamma: float = 0.5

    def __post_init__(self):
        for name in ("mu", "rho", "g", "gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"fluid parameter {name} must be strictly positive")


@dataclass
class ElementField:
    """Per-element 3-D velocities, tagged by the generating operator."""

    values: np.ndarray  # (m, 3)
    kind: str           # "curvature_V" | "gravity_G"


def element_matrix(normal) -> np.ndarray:
    """3x2 matrix sending a master velocity to the element velocity.

    The image of a unit 2-vector is the unit tangent of the element plane
    whose horizontal trace component matches the master velocity; for a
    horizontal element the master velocity is embedded unchanged.
    """
    n = np.asarray(normal, dtype=float)
    if n.shape != (3,):
        raise InvalidNormal("normal must be a 3-vector")
    if abs(np.linalg.norm(n) - 1.0) > UNIT_TOL:
        raise InvalidNormal(f"normal must be unit length, got |n| = {np.linalg.norm(n)}")
    if n[2] <= 0:
        raise InvalidNormal("normal must point upward (vertical faces unsupported)")
    return _matrices(n[None, :])[0]


def _matrices(normals):
    """Vectorized element matrices for an (m, 3) array of unit normals.

    The bottom row carries -n1, -n2: together with the in-plane rotation of
    the cross-trace component this keeps the image tangent to the element
    (image . normal = 0) and of unchanged length.
    """
    n1, n2, n3 = normals[:, 0], normals[:, 1], normals[:, 2]
    f = 1.0 / (1.0 + n3)
    m = np.empty((len(normals), 3, 2))
    m[:, 0, 0] = 1.0 - n1 * n1 * f
    m[:, 0, 1] = -n1 * n2 * f
    m[:, 1, 0] = m[:, 0, 1]
    m[:, 1, 1] = 1.0 - n2 * n2 * f
    m[:, 2, 0] = -n1
    m[:, 2, 1] = -n2
    return m


def element_matrices(tri: LiftedTriangulation) -> np.ndarray:
    return _matrices(tri.normals)


def apply_V(tri: LiftedTriangulation, master) -> ElementField:
    """Curvature-hypothesis field: constant speed |master| on every element."""
    b = np.asarray(master, dtype=float)
    return ElementField(values=element_matrices(tri) @ b, kind="curvature_V")


def gravity_speeds(tri: LiftedTriangulation, fluid: FluidParams) -> np.ndarray:
    """Free-fall speed factor per element, equal to 1 at the highest control point."""
    z = tri.control_points[:, 2]
    return np.sqrt(1.0 + 2.0 * fluid.g * (z.max() - z))


def apply_G(tri: LiftedTriangulation, master, fluid: FluidParams) -> ElementField:
    """Gravity-hypothesis field: speeds grow with drop below the highest element."""
    b = np.asarray(master, dtype=float)
    s = gravity_speeds(tri, fluid)
    return ElementField(values=s[:, None] * (element_matrices(tri) @ b), kind="gravity_G")


def average(tri: LiftedTriangulation, field: ElementField) -> np.ndarray:
    """Area-weighted mean velocity over the triangulation."""
    return tri.area_weights() @ field.values


def mean_velocity_matrix(tri: LiftedTriangulation, fluid: FluidParams | None = None,
                         kind: str = "curvature_V") -> np.ndarray:
    """3x2 matrix of the linear map master velocity -> mean velocity."""
    mats = element_matrices(tri)
    if kind == "gravity_G":
        if fluid is None:
            raise ValueError("gravity mean velocity needs fluid parameters")
        mats = gravity_speeds(tri, fluid)[:, None, None] * mats
    return np.einsum("k,kij->ij", tri.area_weights(), mats)


def require_unit(master) -> np.ndarray:
    b = np.asarray(master, dtype=float)
    if abs(np.linalg.norm(b) - 1.0) > UNIT_TOL:
        raise NotUnit(f"master velocity must be unit length, got |b| = {np.linalg.norm(b)}")
    return b


def edge_flux_mismatch(tri: LiftedTriangulation, field: ElementField) -> float:
    """Largest mismatch of |edge-normal velocity component| across interior edges.

    The flow hypothesis asks the two sides of an edge to agree; for
    non-coplanar neighbors the discrete field only approximates this, so the
    mismatch is reported as a diagnostic rather than asserted.
    """
    mesh = tri.base
    interior = mesh.interior_edges
    if len(interior) == 0:
        return 0.0
    worst = 0.0
    local = _edge_local_indices(tri)
    for side in (0, 1):
        k = mesh.edge_tris[interior, side]
        nu = tri.edge_normals[k, local[interior, side], :]
        comp = np.abs(np.einsum("ij,ij->i", nu, field.values[k]))
        if side == 0:
            ref = comp
        else:
            worst = float(np.max(np.abs(comp - ref)))
    return worst


def _edge_local_indices(tri: LiftedTriangulation) -> np.ndarray:
    """(E, 2) local edge index of each edge within its two adjacent triangles."""
    mesh = tri.base
    out = -np.ones((mesh.n_edges, 2), dtype=np.int64)
    for i in range(3):
        eid = mesh.tri_edges[:, i]
        own = np.arange(mesh.n_triangles)
        first = mesh.edge_tris[eid, 0] == own
        out[eid[first], 0] = i
        out[eid[~first], 1] = i
    return out
