import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fissura import SurfaceSpec, unit_square
from fissura.mesh import (DomainTooSmall, build_mesh, generate_mesh,
                          mesh_from_json, mesh_to_json, validate_mesh)


@pytest.fixture(scope="module")
def flat_spec():
    return SurfaceSpec("plane", {"a": 0.0, "b": 0.0}, unit_square())


def test_structured_mesh_is_acute(flat_spec):
    mesh = generate_mesh(flat_spec, 0.5, jitter=0.0)
    assert validate_mesh(mesh) == []
    v, t = mesh.vertices, mesh.triangles
    for tri in t:
        for i in range(3):
            a, b, c = v[tri[i]], v[tri[(i + 1) % 3]], v[tri[(i + 2) % 3]]
            cosang = np.dot(b - a, c - a) / (np.linalg.norm(b - a) * np.linalg.norm(c - a))
            assert cosang > 1e-6  # every angle strictly below 90 degrees


def test_too_large_edge_raises(flat_spec):
    with pytest.raises(DomainTooSmall):
        generate_mesh(flat_spec, 2.0)


def test_jittered_mesh_validates(flat_spec):
    mesh = generate_mesh(flat_spec, 0.25, jitter=0.1, seed=42)
    assert validate_mesh(mesh) == []


def test_jitter_is_deterministic(flat_spec):
    m1 = generate_mesh(flat_spec, 0.25, jitter=0.1, seed=7)
    m2 = generate_mesh(flat_spec, 0.25, jitter=0.1, seed=7)
    assert np.array_equal(m1.vertices, m2.vertices)
    m3 = generate_mesh(flat_spec, 0.25, jitter=0.1, seed=8)
    assert not np.array_equal(m1.vertices, m3.vertices)


def test_boundary_vertices_stay_inside_domain(flat_spec):
    mesh = generate_mesh(flat_spec, 0.2, jitter=0.15, seed=3)
    eps = 1e-12
    assert mesh.vertices[:, 0].min() >= -eps and mesh.vertices[:, 0].max() <= 1 + eps
    assert mesh.vertices[:, 1].min() >= -eps and mesh.vertices[:, 1].max() <= 1 + eps


def test_right_triangle_flagged():
    mesh = build_mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                      np.array([[0, 1, 2]]))
    kinds = {v.kind for v in validate_mesh(mesh)}
    assert "non_acute_angle" in kinds


def test_perturbed_circumcenters_flagged():
    spec = SurfaceSpec("plane", {"a": 0.0, "b": 0.0}, unit_square())
    mesh = generate_mesh(spec, 0.25)
    mesh.circumcenters = mesh.circumcenters + np.array([[1e-3, 0.0]])
    kinds = {v.kind for v in validate_mesh(mesh)}
    # an independent dot-product check catches the broken orthogonality
    assert "edge_orthogonality" in kinds
    assert "circumcenter_mismatch" in kinds


def test_interior_edges_orthogonal(flat_spec):
    mesh = generate_mesh(flat_spec, 0.25, jitter=0.1, seed=5)
    v = mesh.vertices
    for e in mesh.interior_edges:
        k, l = mesh.edge_tris[e]
        tang = v[mesh.edges[e][1]] - v[mesh.edges[e][0]]
        tang = tang / np.linalg.norm(tang)
        d = mesh.circumcenters[k] - mesh.circumcenters[l]
        assert abs(np.dot(d, tang)) < 1e-9 * np.linalg.norm(d)


def test_circumcenter_strictly_interior(flat_spec):
    mesh = generate_mesh(flat_spec, 0.25, jitter=0.2, seed=11)
    v, t, cc = mesh.vertices, mesh.triangles, mesh.circumcenters
    a, b, c = v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]
    area2 = np.cross(b - a, c - a)
    w0 = np.cross(b - cc, c - cc) / area2
    w1 = np.cross(c - cc, a - cc) / area2
    w2 = np.cross(a - cc, b - cc) / area2
    assert min(w0.min(), w1.min(), w2.min()) > 0


def test_midpoints_are_edge_midpoints(flat_spec):
    mesh = generate_mesh(flat_spec, 0.25, jitter=0.1, seed=9)
    mid = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    assert np.allclose(mesh.edge_midpoints, mid, atol=0)


def test_json_roundtrip(flat_spec):
    mesh = generate_mesh(flat_spec, 0.25, jitter=0.05, seed=2)
    again = mesh_from_json(mesh_to_json(mesh))
    assert np.array_equal(mesh.triangles, again.triangles)
    assert np.allclose(mesh.vertices, again.vertices, atol=0)
    assert validate_mesh(again) == []


def test_nonconvex_domain_clips():
    poly = np.array([[0, 0], [2, 0], [2, 1], [1.2, 1], [1.2, 0.4],
                     [0.8, 0.4], [0.8, 1], [0, 1]], dtype=float)
    spec = SurfaceSpec("plane", {"a": 0.0, "b": 0.0}, poly)
    mesh = generate_mesh(spec, 0.15)
    assert validate_mesh(mesh) == []
    # no triangle may reach into the notch above y = 0.4, 0.8 < x < 1.2
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    inside_notch = (cent[:, 0] > 0.8) & (cent[:, 0] < 1.2) & (cent[:, 1] > 0.45)
    assert not inside_notch.any()


@settings(max_examples=20, deadline=None)
@given(edge=st.floats(0.08, 0.4), jitter=st.floats(0.0, 0.25),
       seed=st.integers(0, 1000))
def test_generated_meshes_always_validate(edge, jitter, seed):
    spec = SurfaceSpec("plane", {"a": 0.0, "b": 0.0}, unit_square())
    mesh = generate_mesh(spec, edge, jitter=jitter, seed=seed)
    assert validate_mesh(mesh) == []
