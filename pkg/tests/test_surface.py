import numpy as np
import pytest

from fissura.surface import (Heightmap, SurfaceError, SurfaceSpec,
                             load_heightmap_csv, points_in_polygon,
                             polygon_area, polygon_is_simple, unit_square)


def test_polygon_area_and_orientation():
    sq = unit_square()
    assert polygon_area(sq) == pytest.approx(1.0)
    spec = SurfaceSpec("plane", {"a": 0.0, "b": 0.0}, sq[::-1])
    assert polygon_area(spec.domain) > 0  # normalized to counter-clockwise


def test_simple_polygon_check():
    bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
    assert not polygon_is_simple(bowtie)
    with pytest.raises(SurfaceError):
        SurfaceSpec("plane", {"a": 0.0, "b": 0.0}, bowtie)


def test_domain_requires_three_vertices():
    with pytest.raises(SurfaceError):
        SurfaceSpec("plane", {"a": 0.0, "b": 0.0}, np.array([[0, 0], [1, 0]]))


def test_missing_parameter_rejected():
    with pytest.raises(SurfaceError):
        SurfaceSpec("ridge", {"amplitude": 0.3}, unit_square())


def test_points_in_polygon_boundary_band():
    sq = unit_square()
    pts = np.array([[0.5, 0.5], [1.0, 0.5], [1.0 + 1e-12, 0.5], [1.1, 0.5]])
    inside = points_in_polygon(pts, sq, tol=1e-9)
    assert list(inside) == [True, True, True, False]


def test_families_evaluate():
    sq = unit_square()
    plane = SurfaceSpec("plane", {"a": 2.0, "b": -1.0}, sq)
    assert plane.evaluate(0.5, 0.25) == pytest.approx(2 * 0.5 - 0.25)
    ridge = SurfaceSpec("ridge", {"amplitude": 0.3, "wavelength": 1.0}, sq)
    assert ridge.evaluate(0.25, 0.9) == pytest.approx(0.3)
    parab = SurfaceSpec("paraboloid", {"a": 1.0, "b": 2.0}, sq)
    assert parab.evaluate(0.5, 0.5) == pytest.approx(0.25 + 0.5)
    sinus = SurfaceSpec("sinusoid", {"ax": np.pi, "ay": np.pi}, sq)
    assert sinus.evaluate(0.5, 0.5) == pytest.approx(1.0)


def test_heightmap_roundtrip(tmp_path):
    path = tmp_path / "grid.csv"
    xs = np.linspace(0, 1, 5)
    ys = np.linspace(0, 1, 4)
    rows = ["," + ",".join(str(x) for x in xs)]
    for y in ys:
        rows.append(",".join([str(y)] + [str(x * y) for x in xs]))
    path.write_text("\n".join(rows) + "\n")
    hm = load_heightmap_csv(path)
    assert hm.evaluate(0.5, 0.5) == pytest.approx(0.25)
    # bilinear interpolation of a bilinear function is exact off-grid too
    assert hm.evaluate(0.3, 0.7) == pytest.approx(0.21)


def test_heightmap_clamps_at_hull():
    hm = Heightmap(xs=np.array([0.0, 1.0]), ys=np.array([0.0, 1.0]),
                   z=np.array([[0.0, 1.0], [0.0, 1.0]]))
    assert hm.evaluate(1.0 + 1e-13, 0.5) == pytest.approx(1.0)


def test_heightmap_must_cover_domain():
    hm = Heightmap(xs=np.array([0.0, 0.5]), ys=np.array([0.0, 1.0]),
                   z=np.zeros((2, 2)))
    with pytest.raises(SurfaceError):
        SurfaceSpec("heightmap", {}, unit_square(), heightmap=hm)
