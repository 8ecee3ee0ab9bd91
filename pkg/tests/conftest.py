"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from fissura import FluidParams, SurfaceSpec, generate_mesh, lift, unit_square
from fissura.mesh import build_mesh


@pytest.fixture(scope="session")
def fluid():
    return FluidParams(mu=1.0e-3, rho=1.0e3, g=9.81, gamma=0.5)


@pytest.fixture(scope="session")
def flat_spec():
    return SurfaceSpec("plane", {"a": 0.0, "b": 0.0}, unit_square())


@pytest.fixture(scope="session")
def flat_tri(flat_spec):
    return lift(generate_mesh(flat_spec, 0.25), flat_spec)


@pytest.fixture(scope="session")
def incline_spec():
    return SurfaceSpec("plane", {"a": 0.5, "b": 0.0}, unit_square())


@pytest.fixture(scope="session")
def incline_tri(incline_spec):
    return lift(generate_mesh(incline_spec, 0.125), incline_spec)


@pytest.fixture(scope="session")
def ridge_spec():
    return SurfaceSpec("ridge", {"amplitude": 0.3, "wavelength": 1.0}, unit_square())


@pytest.fixture(scope="session")
def ridge_tri_500(ridge_spec):
    tri = lift(generate_mesh(ridge_spec, 1.0 / 15.0), ridge_spec)
    assert 400 <= tri.n_elements <= 650
    return tri


@pytest.fixture(scope="session")
def paraboloid_tri():
    spec = SurfaceSpec("paraboloid", {"a": 1.0, "b": 1.0},
                       np.array([[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]))
    return lift(generate_mesh(spec, 0.2), spec)


def binary_lattice_mesh(n: int = 8, shift: bool = True):
    """Structured column-offset mesh with power-of-two coordinates.

    All vertex coordinates are exact binary fractions (spacing 1/n with n a
    power of two), so coordinate differences, lifted plane fits and element
    normals of any affine surface agree bitwise across congruent elements.
    """
    dx = dy = 1.0 / n
    ids, verts = {}, []
    for j in range(n + 1):
        off = 0.5 * dy if (shift and j % 2) else 0.0
        count = n if (shift and j % 2) else n + 1
        for i in range(count):
            ids[(j, i)] = len(verts)
            verts.append((j * dx, off + i * dy))
    tris = []
    for j in range(n):
        even = (not shift) or j % 2 == 0
        n_col = n + 1 if even else n
        for i in range(n_col - 1):
            apex = (j + 1, i) if even else (j + 1, i + 1)
            if apex in ids:
                tris.append((ids[(j, i)], ids[(j, i + 1)], ids[apex]))
        n_next = n if even else n + 1
        for i in range(n_next - 1):
            apex = (j, i + 1) if even else (j, i)
            if apex in ids:
                tris.append((ids[(j + 1, i)], ids[(j + 1, i + 1)], ids[apex]))
    return build_mesh(np.array(verts, dtype=float), np.array(tris, dtype=np.int64))


def roof_mesh():
    """Two acute triangles sharing the vertical edge x = 0 (a ridge line)."""
    verts = np.array([[-1.0, 0.0], [0.0, -0.8], [0.0, 0.8], [1.0, 0.0]])
    tris = np.array([[0, 1, 2], [3, 2, 1]])
    return build_mesh(verts, tris)


def roof_surface():
    """z = -|x| over a domain containing the roof mesh."""
    poly = np.array([[-1.5, -1.5], [1.5, -1.5], [1.5, 1.5], [-1.5, 1.5]])
    xs = np.linspace(-1.5, 1.5, 61)
    ys = np.linspace(-1.5, 1.5, 5)
    z = -np.abs(xs)[None, :].repeat(len(ys), axis=0)
    from fissura.surface import Heightmap
    return SurfaceSpec("heightmap", {}, poly,
                       heightmap=Heightmap(xs=xs, ys=ys, z=z))


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

def brute_chord(verts: np.ndarray, t: float, n_offsets: int = 10000) -> float:
    """Max chord of a triangle along direction t by scanning parallel lines.

    Samples n_offsets uniform offsets plus the three vertex offsets and clips
    each scan line against the triangle's half-planes; no use of the
    middle-vertex shortcut under test.
    """
    d = np.array([np.cos(t), np.sin(t)])
    perp = np.array([-d[1], d[0]])
    offs_v = verts @ perp
    offs = np.unique(np.concatenate([
        np.linspace(offs_v.min(), offs_v.max(), n_offsets), offs_v]))
    base = offs[:, None] * perp[None, :]
    smin = np.full(len(offs), -np.inf)
    smax = np.full(len(offs), np.inf)
    feasible = np.ones(len(offs), dtype=bool)
    centroid = verts.mean(axis=0)
    for i in range(3):
        a, b = verts[i], verts[(i + 1) % 3]
        nrm = np.array([-(b - a)[1], (b - a)[0]])
        if np.dot(nrm, centroid - a) < 0:
            nrm = -nrm
        dn = float(np.dot(d, nrm))
        rhs = (a - base) @ nrm
        if abs(dn) < 1e-14:
            feasible &= rhs <= 1e-12
        elif dn > 0:
            smin = np.maximum(smin, rhs / dn)
        else:
            smax = np.minimum(smax, rhs / dn)
    lengths = np.where(feasible, np.maximum(smax - smin, 0.0), 0.0)
    return float(lengths.max())


def oracle_external_energy(tri, fluid, b) -> float:
    """Loop-based recomputation of the gravity external energy.

    Rebuilds the element velocity from the tangent construction (scaled by
    the free-fall factor), reconstructs edge normals from the lifted
    vertices, and accumulates the kinetic and released-potential terms edge
    by edge.
    """
    mesh = tri.base
    w3 = tri.lifted_vertices
    z = tri.control_points[:, 2]
    zmax = z.max()
    total = 0.0
    for k in range(tri.n_elements):
        n1, n2, n3 = tri.normals[k]
        mat = np.array([[1 - n1 * n1 / (1 + n3), -n1 * n2 / (1 + n3)],
                        [-n1 * n2 / (1 + n3), 1 - n2 * n2 / (1 + n3)],
                        [-n1, -n2]])
        s = np.sqrt(1.0 + 2.0 * fluid.g * (zmax - z[k]))
        u = s * (mat @ np.asarray(b, dtype=float))
        flux, drops = [], []
        for i in range(3):
            va = w3[mesh.triangles[k][i]]
            vb = w3[mesh.triangles[k][(i + 1) % 3]]
            nu = np.cross(tri.normals[k], vb - va)
            nu = nu / np.linalg.norm(nu)
            if np.dot(nu, 0.5 * (va + vb) - tri.control_points[k]) < 0:
                nu = -nu
            dval = float(np.dot(nu, u))
            if dval <= 1e-12:
                continue
            eid = mesh.tri_edges[k][i]
            kk, ll = mesh.edge_tris[eid]
            other = ll if kk == k else kk
            if other >= 0:
                drop = z[k] - tri.control_points[other][2]
            else:
                drop = z[k] - tri.transmission_points[eid][2]
            flux.append(dval)
            drops.append(drop)
        if not flux:
            continue
        flux = np.array(flux)
        drops = np.array(drops)
        wts = flux / flux.sum()
        kinetic = 0.5 * fluid.rho * float(np.sum(wts * flux ** 2))
        potential = fluid.rho * fluid.g * float(np.sum(wts * drops))
        total += tri.areas[k] * (1.0 / s) * (kinetic + potential)
    return total
