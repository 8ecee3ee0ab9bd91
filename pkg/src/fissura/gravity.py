"""Gravity-driven dissipation, external energy, and gravity-preferential directions.

Internal dissipation reuses the edge-strain pipeline with the gravity field,
whose speeds grow with drop height, so it is not a rescaling of the
curvature case.  Because that form is even in the master velocity, an
external-energy comparison (kinetic outflow plus potential released toward
the downstream edges) breaks the tie between a direction and its reverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curvature import (EPS_ABS, EPS_DEG, TWO_PI, DirectionDistribution,
                        EnergyForm, assemble_form, dissipation)
from .flow import (FluidParams, apply_G, element_matrices, gravity_speeds,
                   mean_velocity_matrix, require_unit)
from .lifting import LiftedTriangulation

DOWNSTREAM_TOL = 1e-12   # edge-grazing flow is excluded from the downstream set
TIE_REL = 1e-9           # relative tolerance declaring E(b) == E(-b) a tie
_TIE_FLOOR = 1e-30


def dissipation_grav(tri: LiftedTriangulation, fluid: FluidParams, master) -> float:
    """Strain-rate dissipation of the gravity field for a master velocity."""
    return dissipation(tri, fluid, apply_G(tri, master, fluid))


def assemble_form_grav(tri: LiftedTriangulation, fluid: FluidParams) -> EnergyForm:
    return assemble_form(lambda b: dissipation_grav(tri, fluid, b))


# ---------------------------------------------------------------------------
# external energy
# ---------------------------------------------------------------------------

def external_energy_batch(tri: LiftedTriangulation, fluid: FluidParams,
                          masters: np.ndarray) -> np.ndarray:
    """External energy of the gravity field for each unit master velocity.

    Per element, outflow is split over the downstream edges (positive
    edge-normal velocity component) in proportion to those components.  Each
    downstream edge contributes its kinetic outflow plus the potential energy
    released over the drop from the control point to the downstream neighbor
    control point (interior) or to the lifted edge midpoint (boundary).
    Elements with no downstream edge contribute nothing.
    """
    B = np.atleast_2d(np.asarray(masters, dtype=float))
    mats = element_matrices(tri)
    s = gravity_speeds(tri, fluid)
    u = np.einsum("mjc,nc->nmj", mats, B) * s[None, :, None]
    d = np.einsum("mej,nmj->nme", tri.edge_normals, u)
    downstream = d > DOWNSTREAM_TOL
    dmask = np.where(downstream, d, 0.0)
    den = dmask.sum(axis=2)
    per_edge = dmask * (0.5 * fluid.rho * d * d
                        + fluid.rho * fluid.g * tri.edge_drop[None, :, :])
    num = per_edge.sum(axis=2)
    # |K| * w(K) with layer height w the reciprocal speed (unit discharge)
    factor = tri.areas / s
    safe = den > 0.0
    contrib = np.where(safe, num / np.where(safe, den, 1.0), 0.0)
    return contrib @ factor


def external_energy(tri: LiftedTriangulation, fluid: FluidParams, master) -> float:
    b = require_unit(master)
    return float(external_energy_batch(tri, fluid, b[None, :])[0])


def downstream_counts(tri: LiftedTriangulation, fluid: FluidParams, master) -> np.ndarray:
    """Number of downstream edges per element for the gravity field."""
    fld = apply_G(tri, master, fluid)
    d = np.einsum("mej,mj->me", tri.edge_normals, fld.values)
    return (d > DOWNSTREAM_TOL).sum(axis=1)


def downstream_weights(tri: LiftedTriangulation, fluid: FluidParams, master) -> np.ndarray:
    """(m, 3) outflow fractions; rows with no downstream edge are all zero."""
    fld = apply_G(tri, master, fluid)
    d = np.einsum("mej,mj->me", tri.edge_normals, fld.values)
    dmask = np.where(d > DOWNSTREAM_TOL, d, 0.0)
    den = dmask.sum(axis=1, keepdims=True)
    return np.where(den > 0, dmask / np.where(den > 0, den, 1.0), 0.0)


def _is_tie(e_plus: float, e_minus: float) -> bool:
    return abs(e_plus - e_minus) <= TIE_REL * (abs(e_plus) + abs(e_minus) + _TIE_FLOOR)


def entropy_choice(tri: LiftedTriangulation, fluid: FluidParams, master) -> np.ndarray:
    """Pick the representative of {b, -b} with the larger external energy.

    Ties keep b: both directions then satisfy the maximality condition.
    """
    b = require_unit(master)
    e_plus, e_minus = external_energy_batch(tri, fluid, np.array([b, -b]))
    if _is_tie(e_plus, e_minus) or e_plus >= e_minus:
        return b
    return -b


# ---------------------------------------------------------------------------
# preferential directions
# ---------------------------------------------------------------------------

@dataclass
class GravityAnalysis:
    form: EnergyForm
    case: int
    distribution: DirectionDistribution
    r_grav_arcs: list = field(default_factory=list)
    energies: tuple | None = None  # (E(f1), E(-f1)) for the non-degenerate cases

    def as_report(self) -> dict:
        rep = {"case": int(self.case)}
        rep.update(self.form.as_report())
        rep["r_grav_arcs"] = [[float(a), float(b)] for a, b in self.r_grav_arcs]
        rep["distribution"] = self.distribution.as_report()
        return rep


def preferential_grav(tri: LiftedTriangulation, fluid: FluidParams,
                      n_scan: int = 4096) -> GravityAnalysis:
    """Resolve the gravity-preferential direction space.

    Case 1: distinct eigenvalues and a strict energy winner among the two
    low-dissipation directions -> one atom of probability 1.  Case 2: the
    energies tie -> two atoms of probability 1/2.  Case 3: degenerate form ->
    uniform distribution on the eligible master set (where the direction
    beats its reverse, ties included) pushed through the mean-velocity map.
    """
    form = assemble_form_grav(tri, fluid)
    push = mean_velocity_matrix(tri, fluid, kind="gravity_G")

    if not form.degenerate:
        f1 = form.f1
        e_plus, e_minus = external_energy_batch(tri, fluid, np.array([f1, -f1]))
        img = push @ f1
        img = img / np.linalg.norm(img)
        if _is_tie(e_plus, e_minus):
            dist = DirectionDistribution(atoms=[(img, 0.5), (-img, 0.5)],
                                         push=push, map_tag="gravity")
            return GravityAnalysis(form=form, case=2, distribution=dist,
                                   energies=(float(e_plus), float(e_minus)))
        winner = img if e_plus > e_minus else -img
        dist = DirectionDistribution(atoms=[(winner, 1.0)], push=push, map_tag="gravity")
        return GravityAnalysis(form=form, case=1, distribution=dist,
                               energies=(float(e_plus), float(e_minus)))

    if n_scan % 2:
        n_scan += 1  # antipodal reuse needs t and t+pi on the grid
    ts = np.arange(n_scan) * (TWO_PI / n_scan)
    dirs = np.column_stack([np.cos(ts), np.sin(ts)])
    energies = external_energy_batch(tri, fluid, dirs)
    opposite = np.roll(energies, -n_scan // 2)
    f_vals = energies - opposite
    tol = TIE_REL * (np.abs(energies) + np.abs(opposite) + _TIE_FLOOR)
    eligible = f_vals >= -tol
    arcs = _eligible_arcs(tri, fluid, ts, eligible)
    total = sum(b - a for a, b in arcs)
    if not total > 0.0:
        raise AssertionError("eligible master set has zero measure; "
                             "expected positive arc length in the degenerate case")
    dist = DirectionDistribution(arcs=arcs, arc_mass=1.0, push=push, map_tag="gravity")
    return GravityAnalysis(form=form, case=3, distribution=dist, r_grav_arcs=arcs)


def _eligible_arcs(tri, fluid, ts, eligible, refine_tol=1e-10):
    """Maximal eligible parameter arcs, boundaries refined by bisection."""
    n = len(ts)
    if eligible.all():
        return [(0.0, TWO_PI)]
    if not eligible.any():
        return []

    def is_eligible(t):
        e = external_energy_batch(
            tri, fluid, np.array([[np.cos(t), np.sin(t)], [-np.cos(t), -np.sin(t)]]))
        return e[0] - e[1] >= -TIE_REL * (abs(e[0]) + abs(e[1]) + _TIE_FLOOR)

    def refine(t_in, t_out):
        # boundary between an eligible and an ineligible sample
        for _ in range(60):
            mid = 0.5 * (t_in + t_out)
            if abs(t_out - t_in) < refine_tol:
                break
            if is_eligible(mid):
                t_in = mid
            else:
                t_out = mid
        return t_in

    step = TWO_PI / n
    arcs = []
    # walk runs of eligibility over the cyclic grid
    starts = np.nonzero(eligible & ~np.roll(eligible, 1))[0]
    for s in starts:
        e = s
        while eligible[(e + 1) % n]:
            e = e + 1
            if e - s >= n:
                break
        t_start = refine(ts[s % n], ts[s % n] - step)
        t_end = refine(ts[e % n], ts[e % n] + step)
        arcs.append((t_start, t_end))
    # normalize to non-wrapping intervals inside [0, 2*pi)
    out = []
    for a, b in arcs:
        a = float(np.mod(a, TWO_PI))
        b_rel = float(np.mod(b - a, TWO_PI))
        if b_rel == 0.0:
            b_rel = TWO_PI
        if a + b_rel <= TWO_PI:
            out.append((a, a + b_rel))
        else:
            out.append((a, TWO_PI))
            out.append((0.0, a + b_rel - TWO_PI))
    return sorted(out)
