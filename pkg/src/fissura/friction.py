"""Friction dissipation via maximal in-element chord lengths.

The friction loss of a unit master velocity is proportional to the average
stream-line length, i.e. half the longest segment of the element parallel
to the flow.  On a lifted element this is the planar chord of the projected
triangle along the master direction amplified by the in-plane stretch
1/sqrt(1 - (n . d)^2).  The objective over the master circle is piecewise
smooth between the projected side directions, which drives the minimizer
search: dense scan over [0, pi), golden-section refinement of near-minimal
brackets, and plateau detection for flat minima.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curvature import TWO_PI, DirectionDistribution
from .flow import FluidParams, mean_velocity_matrix
from .lifting import LiftedTriangulation

PI = np.pi
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
PLATEAU_REL = 1e-9
DEGENERATE_AREA = 1e-14
_CHUNK = 256  # directions per vectorized chord block


class DegenerateTriangle(ValueError):
    pass


# ---------------------------------------------------------------------------
# chord geometry
# ---------------------------------------------------------------------------

def chord_lengths_2d(tri_verts: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Max chord of each planar triangle along each direction, shape (m, n).

    The chord profile across offsets perpendicular to the direction is
    piecewise linear and peaks at the middle vertex, so the maximum runs
    from that vertex to the opposite side.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    d = np.stack([np.cos(ts), np.sin(ts)], axis=1)        # (n, 2)
    perp = np.stack([-np.sin(ts), np.cos(ts)], axis=1)    # (n, 2)
    offs = np.einsum("mvk,nk->mvn", tri_verts, perp)      # (m, 3, n)
    order = np.argsort(offs, axis=1)
    sorted_offs = np.take_along_axis(offs, order, axis=1)
    o_a, o_m, o_b = sorted_offs[:, 0, :], sorted_offs[:, 1, :], sorted_offs[:, 2, :]
    verts_n = np.broadcast_to(tri_verts[:, :, None, :],
                              (len(tri_verts), 3, len(ts), 2))
    picked = np.take_along_axis(verts_n, order[..., None], axis=1)
    va, vm, vb = picked[:, 0], picked[:, 1], picked[:, 2]  # (m, n, 2)
    extent = o_b - o_a
    scale = np.abs(offs).max(axis=1) + 1.0
    safe = extent > 1e-15 * scale
    tau = np.where(safe, (o_m - o_a) / np.where(safe, extent, 1.0), 0.0)
    p = va + tau[..., None] * (vb - va)
    chord = np.linalg.norm(p - vm, axis=2)
    # direction parallel to the dominant side: chord degenerates to that side
    longest = np.linalg.norm(vb - va, axis=2)
    return np.where(safe, chord, longest)


def amplifications(tri: LiftedTriangulation, ts: np.ndarray) -> np.ndarray:
    """In-plane stretch factor per (element, direction), shape (m, n)."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    d = np.stack([np.cos(ts), np.sin(ts)], axis=1)
    dot = tri.normals[:, :2] @ d.T
    return 1.0 / np.sqrt(1.0 - dot * dot)


def max_chord(tri: LiftedTriangulation, k: int, t: float) -> float:
    """Longest segment of the lifted element k parallel to the direction of t."""
    mesh = tri.base
    verts = mesh.vertices[mesh.triangles[k]]
    area = 0.5 * abs(np.cross(verts[1] - verts[0], verts[2] - verts[0]))
    if area < DEGENERATE_AREA:
        raise DegenerateTriangle(f"element {k} has projected area {area}")
    chord = chord_lengths_2d(verts[None, :, :], np.array([t]))[0, 0]
    amp = amplifications(tri, np.array([t]))[k, 0]
    return float(chord * amp)


@dataclass
class ChordFunction:
    """Per-element chord profile metadata: breakpoints and amplification."""

    triangle: int
    breakpoints: np.ndarray  # 3 side-direction parameters in [0, pi)
    normal: np.ndarray

    def amplification(self, t):
        t = np.asarray(t, dtype=float)
        dot = self.normal[0] * np.cos(t) + self.normal[1] * np.sin(t)
        return 1.0 / np.sqrt(1.0 - dot * dot)


def chord_function(tri: LiftedTriangulation, k: int) -> ChordFunction:
    mesh = tri.base
    verts = mesh.vertices[mesh.triangles[k]]
    sides = np.roll(verts, -1, axis=0) - verts
    angles = np.mod(np.arctan2(sides[:, 1], sides[:, 0]), PI)
    return ChordFunction(triangle=int(k), breakpoints=np.sort(angles),
                         normal=tri.normals[k].copy())


def side_breakpoints(tri: LiftedTriangulation) -> np.ndarray:
    """All projected side directions over the mesh, deduplicated, in [0, pi)."""
    mesh = tri.base
    e = mesh.edges
    sides = mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]]
    angles = np.mod(np.arctan2(sides[:, 1], sides[:, 0]), PI)
    angles = np.sort(angles)
    if len(angles) == 0:
        return angles
    keep = np.concatenate([[True], np.diff(angles) > 1e-12])
    return angles[keep]


# ---------------------------------------------------------------------------
# objective
# ---------------------------------------------------------------------------

def friction_profile(tri: LiftedTriangulation, fluid: FluidParams,
                     ts: np.ndarray, threads: int = 1) -> np.ndarray:
    """Friction objective X(t) for an array of master parameters.

    threads > 1 evaluates the direction chunks on a thread pool (the chord
    kernel is pure numpy and releases the GIL in its inner loops).
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    mesh = tri.base
    tri_verts = mesh.vertices[mesh.triangles]
    out = np.empty(len(ts))

    def block(lo):
        sub = ts[lo:lo + _CHUNK]
        chords = chord_lengths_2d(tri_verts, sub)
        amp = amplifications(tri, sub)
        out[lo:lo + _CHUNK] = 0.5 * fluid.gamma * (tri.areas @ (chords * amp))

    starts = range(0, len(ts), _CHUNK)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(block, starts))
    else:
        for lo in starts:
            block(lo)
    return out


def friction_functional(tri: LiftedTriangulation, fluid: FluidParams, master) -> float:
    """Friction dissipation of a master velocity (pi-periodic in its angle)."""
    b = np.asarray(master, dtype=float)
    t = float(np.arctan2(b[1], b[0]))
    return float(np.linalg.norm(b) * friction_profile(tri, fluid, np.array([t]))[0])


# ---------------------------------------------------------------------------
# minimization
# ---------------------------------------------------------------------------

@dataclass
class FrictionMinimum:
    value: float
    points: list = field(default_factory=list)   # isolated minimizers in [0, pi)
    arcs: list = field(default_factory=list)     # plateau arcs in [0, pi)
    breakpoints: np.ndarray | None = None
    scan_ts: np.ndarray | None = None
    scan_values: np.ndarray | None = None

    def as_report(self) -> dict:
        return {"min_value": float(self.value),
                "minimizers": {"points": [float(t) for t in self.points],
                               "arcs": [[float(a), float(b)] for a, b in self.arcs]}}


def _golden_section(f, lo, hi, tol=1e-10, max_iter=200):
    """Golden-section minimum of f on [lo, hi]; returns (t, f(t))."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    t = c if fc <= fd else d
    return t, min(fc, fd)


def _parabolic_polish(f, t, h=2e-5):
    """Fit a parabola through (t-h, t, t+h) and jump to its vertex.

    Golden section stalls once objective differences fall below roundoff
    (|t - t*| ~ sqrt(eps)); the three-point fit recovers the vertex to
    O(eps / h) because the finite differences stay well resolved.
    """
    f0, fm, fp = f(t), f(t - h), f(t + h)
    denom = fp - 2.0 * f0 + fm
    if denom <= 0.0:
        return t, f0
    step = 0.5 * h * (fm - fp) / denom
    if abs(step) > h:
        return t, f0
    t2 = t + step
    f2 = f(t2)
    return (t2, f2) if f2 <= f0 else (t, f0)


def minimize_friction(tri: LiftedTriangulation, fluid: FluidParams,
                      dense: int = 8192, seed_budget: int = 65536,
                      refine_tol: float = 1e-10, threads: int = 1) -> FrictionMinimum:
    """Global minimization of the friction objective over master directions.

    Works on [0, pi) (the objective is pi-periodic).  The evaluation grid is
    a dense uniform scan plus every projected side direction plus extra seeds
    inside each breakpoint interval (64 per interval, reduced proportionally
    when the interval count would blow the global budget).  Every grid-local
    minimum within 1e-4 of the best sample is refined by golden section; the
    minimizing set is reported as isolated points and/or plateau arcs where
    the objective stays within a 1e-9 relative band of the minimum.
    """
    bps = side_breakpoints(tri)
    ts = [np.arange(dense) * (PI / dense), bps]
    if len(bps) >= 1:
        n_int = len(bps)
        per = int(np.clip(seed_budget // max(n_int, 1), 4, 64))
        bounds = np.concatenate([bps, [bps[0] + PI]])
        widths = np.diff(bounds)
        frac = (np.arange(per) + 0.5) / per
        seeds = (bounds[:-1][:, None] + widths[:, None] * frac[None, :]).ravel()
        ts.append(np.mod(seeds, PI))
    grid = np.unique(np.concatenate(ts))
    values = friction_profile(tri, fluid, grid, threads=threads)

    single = lambda t: float(friction_profile(tri, fluid,
                                              np.array([np.mod(t, PI)]))[0])
    n = len(grid)
    prev = np.roll(values, 1)
    nxt = np.roll(values, -1)
    local_min = (values <= prev) & (values <= nxt)
    best = values.min()
    cand = np.nonzero(local_min & (values <= best * (1.0 + 1e-4)))[0]
    refined = []
    for i in cand:
        lo = grid[i - 1] if i > 0 else grid[-1] - PI
        hi = grid[(i + 1) % n] if i + 1 < n else grid[0] + PI
        t, v = _golden_section(single, lo, hi, tol=refine_tol)
        t, v = _parabolic_polish(single, t)
        refined.append((float(np.mod(t, PI)), v))
    x_min = min([v for _, v in refined] + [float(best)])

    band = x_min * (1.0 + PLATEAU_REL)
    arcs = _detect_plateaus(grid, values, band, single)
    points = []
    for t, v in sorted(refined):
        if any(a - 1e-9 <= t <= b + 1e-9 for a, b in arcs):
            continue
        if any(abs(t - q) <= 1e-9 or abs(abs(t - q) - PI) <= 1e-9 for q in points):
            continue
        if v <= band:
            points.append(t)
    if not points and not arcs:
        # the band was too tight for the refined value; keep the best point
        points = [min(refined, key=lambda r: r[1])[0]]
    return FrictionMinimum(value=x_min, points=sorted(points), arcs=arcs,
                           breakpoints=bps, scan_ts=grid, scan_values=values)


def _detect_plateaus(grid, values, band, single, probes: int = 3):
    """Maximal parameter runs (in [0, pi)) where the objective stays in band.

    A run needs at least three grid points and a non-trivial extent to count
    as an arc; candidates are validated by interior probes and their ends
    refined by bisection on the band predicate.
    """
    inside = values <= band
    if inside.all():
        return [(0.0, PI)]
    n = len(grid)
    runs = []
    starts = np.nonzero(inside & ~np.roll(inside, 1))[0]
    for s in starts:
        e = s
        while inside[(e + 1) % n]:
            e += 1
            if e - s >= n:
                break
        runs.append((s, e))
    arcs = []
    for s, e in runs:
        count = e - s + 1
        t_lo = grid[s % n]
        t_hi = grid[e % n] + (PI if e >= n else 0.0)
        if count < 3 or (t_hi - t_lo) < 1e-6:
            continue
        probe_ts = t_lo + (t_hi - t_lo) * (np.arange(probes) + 1) / (probes + 1)
        if any(single(t) > band * (1.0 + PLATEAU_REL) for t in probe_ts):
            continue
        lo = _bisect_band(single, t_lo, t_lo - (PI / n), band)
        hi = _bisect_band(single, t_hi, t_hi + (PI / n), band)
        arcs.append((lo, hi))
    # re-anchor each arc start into [0, pi); the extent is kept as-is
    out = []
    for lo, hi in arcs:
        lo_m = float(np.mod(lo, PI))
        out.append((lo_m, lo_m + (hi - lo)))
    return sorted(out)


def _bisect_band(single, t_in, t_out, band, iters: int = 50):
    """Refine the parameter where the objective leaves the band."""
    if single(t_out) <= band:
        return t_out
    for _ in range(iters):
        mid = 0.5 * (t_in + t_out)
        if single(mid) <= band:
            t_in = mid
        else:
            t_out = mid
    return t_in


# ---------------------------------------------------------------------------
# preferential directions
# ---------------------------------------------------------------------------

def _split_mod(a: float, b: float, period: float = TWO_PI) -> list:
    """Reduce the interval [a, b] mod period to non-wrapping segments."""
    span = b - a
    a = float(np.mod(a, period))
    if a + span <= period:
        return [(a, a + span)]
    return [(a, period), (0.0, a + span - period)]


def preferential_friction(tri: LiftedTriangulation, fluid: FluidParams,
                          minimum: FrictionMinimum | None = None) -> DirectionDistribution:
    """Friction-preferential directions on the full circle.

    The minimizing set on [0, pi) is duplicated at t + pi (a direction and its
    reverse are distinct flow states); finite sets get uniform atoms at the
    normalized mean velocities, plateau arcs get uniform parameter measure.
    Isolated points are dropped when arcs are present (they are null sets of
    the arc-length measure).
    """
    if minimum is None:
        minimum = minimize_friction(tri, fluid)
    push = mean_velocity_matrix(tri, kind="curvature_V")
    if minimum.arcs:
        arcs = []
        for a, b in minimum.arcs:
            arcs.extend(_split_mod(a, b))
            arcs.extend(_split_mod(a + PI, b + PI))
        return DirectionDistribution(arcs=sorted(arcs), arc_mass=1.0,
                                     push=push, map_tag="curvature")
    params = list(minimum.points) + [t + PI for t in minimum.points]
    p = 1.0 / len(params)
    dist = DirectionDistribution(push=push, map_tag="curvature")
    for t in params:
        v = push @ np.array([np.cos(t), np.sin(t)])
        dist.atoms.append((v / np.linalg.norm(v), p))
    return dist
