"""Strain-rate dissipation across edges and curvature-preferential directions.

The discrete strain tensor across an interior edge is a symmetrized matrix
of coordinate difference quotients of the element velocities taken between
the two control points.  Summed with lifted influence-area weights it gives
a quadratic dissipation form in the master velocity, whose eigenstructure
determines the preferential flow directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .flow import ElementField, FluidParams, apply_V, mean_velocity_matrix
from .lifting import LiftedTriangulation

# a coordinate increment below this fraction of |dp| carries no directional
# information; the affected quotients are dropped (counted, not extrapolated)
DENOM_GUARD = 1e-12

# eigenvalue degeneracy thresholds: relative gap and absolute floor
EPS_DEG = 1e-9
EPS_ABS = 1e-14

TWO_PI = 2.0 * np.pi


class BoundaryEdge(ValueError):
    pass


@dataclass
class EdgeStrain:
    edge: int
    tensor: np.ndarray  # symmetric 3x3


def _edge_weights(tri: LiftedTriangulation):
    """Interior edge ids, their adjacent triangles, and lifted influence weights."""
    mesh = tri.base
    interior = mesh.interior_edges
    k = mesh.edge_tris[interior, 0]
    ell = mesh.edge_tris[interior, 1]
    # local index of the edge within each adjacent triangle
    loc_k = np.argmax(mesh.tri_edges[k] == interior[:, None], axis=1)
    loc_l = np.argmax(mesh.tri_edges[ell] == interior[:, None], axis=1)
    w = tri.influence_areas[k, loc_k] + tri.influence_areas[ell, loc_l]
    return interior, k, ell, w


def _strain_tensors(tri: LiftedTriangulation, values: np.ndarray):
    """Strain tensors for all interior edges; returns (tensors, dropped_quotients)."""
    mesh = tri.base
    interior = mesh.interior_edges
    k = mesh.edge_tris[interior, 0]
    ell = mesh.edge_tris[interior, 1]
    du = values[k] - values[ell]
    dp = tri.control_points[k] - tri.control_points[ell]
    scale = np.linalg.norm(dp, axis=1, keepdims=True)
    usable = np.abs(dp) >= DENOM_GUARD * scale
    inv = np.where(usable, 1.0 / np.where(usable, dp, 1.0), 0.0)
    q = du[:, :, None] * inv[:, None, :]          # q[e, k, l] = du_k / dp_l
    tensors = 0.5 * (q + q.transpose(0, 2, 1))
    dropped = 3 * int(np.count_nonzero(~usable))  # 3 numerators share each denominator
    return tensors, dropped


def edge_strain(tri: LiftedTriangulation, fld: ElementField, edge: int) -> EdgeStrain:
    """Strain tensor across one interior edge."""
    mesh = tri.base
    if mesh.edge_tris[edge, 1] < 0:
        raise BoundaryEdge(f"edge {edge} lies on the boundary")
    k, ell = mesh.edge_tris[edge]
    du = fld.values[k] - fld.values[ell]
    dp = tri.control_points[k] - tri.control_points[ell]
    scale = np.linalg.norm(dp)
    usable = np.abs(dp) >= DENOM_GUARD * scale
    inv = np.where(usable, 1.0 / np.where(usable, dp, 1.0), 0.0)
    q = np.outer(du, inv)
    return EdgeStrain(edge=int(edge), tensor=0.5 * (q + q.T))


def dissipation(tri: LiftedTriangulation, fluid: FluidParams, fld: ElementField) -> float:
    """Total strain-rate energy dissipation of a field over the triangulation."""
    value, _ = dissipation_with_diag(tri, fluid, fld)
    return value


def dissipation_with_diag(tri, fluid, fld):
    interior, k, ell, w = _edge_weights(tri)
    if len(interior) == 0:
        return 0.0, 0
    tensors, dropped = _strain_tensors(tri, fld.values)
    dd = np.einsum("eij,eij->e", tensors, tensors)
    return float(2.0 * fluid.mu / fluid.rho * np.dot(w, dd)), dropped


def dissipation_curv(tri: LiftedTriangulation, fluid: FluidParams, master) -> float:
    """Curvature dissipation of the master velocity's constant-speed field."""
    return dissipation(tri, fluid, apply_V(tri, master))


# ---------------------------------------------------------------------------
# quadratic forms
# ---------------------------------------------------------------------------

def eig_sym_2x2(m: np.ndarray):
    """Closed-form eigendecomposition of a symmetric 2x2 matrix.

    Returns (lam1, lam2, f1, f2) with lam1 <= lam2 and orthonormal vectors.
    """
    a, b, d = float(m[0, 0]), float(m[0, 1]), float(m[1, 1])
    mid = 0.5 * (a + d)
    r = np.hypot(0.5 * (a - d), b)
    lam1, lam2 = mid - r, mid + r
    scale = max(abs(a), abs(d), abs(b))
    if r <= EPS_DEG * max(scale, EPS_ABS):
        f1 = np.array([1.0, 0.0])
    else:
        u = np.array([b, lam1 - a])
        v = np.array([lam1 - d, b])
        f1 = u if np.dot(u, u) >= np.dot(v, v) else v
        f1 = f1 / np.linalg.norm(f1)
    f2 = np.array([-f1[1], f1[0]])
    return lam1, lam2, f1, f2


@dataclass
class EnergyForm:
    """Symmetric PSD 2x2 quadratic form with its eigendecomposition."""

    matrix: np.ndarray
    lam1: float
    lam2: float
    f1: np.ndarray
    f2: np.ndarray

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "EnergyForm":
        m = np.asarray(m, dtype=float)
        if abs(m[0, 1] - m[1, 0]) > 1e-12 * max(1.0, np.abs(m).max()):
            raise ValueError("energy form matrix must be symmetric")
        lam1, lam2, f1, f2 = eig_sym_2x2(m)
        if lam1 < -1e-10 * max(1.0, abs(lam2)):
            raise ValueError(f"energy form not positive semi-definite: lam1 = {lam1}")
        lam1 = max(lam1, 0.0)
        lam2 = max(lam2, 0.0)
        return cls(matrix=m, lam1=lam1, lam2=lam2, f1=f1, f2=f2)

    def __call__(self, b) -> float:
        b = np.asarray(b, dtype=float)
        return float(b @ self.matrix @ b)

    @property
    def degenerate(self) -> bool:
        """Both eigenvalues coincide within the configured tolerance."""
        return (self.lam2 - self.lam1) <= EPS_DEG * max(self.lam2, EPS_ABS)

    def as_report(self) -> dict:
        return {"lambda1": float(self.lam1), "lambda2": float(self.lam2),
                "f1": [float(x) for x in self.f1], "f2": [float(x) for x in self.f2]}


def assemble_form(evaluate) -> EnergyForm:
    """Build the 2x2 form of a quadratic functional from three evaluations.

    Polarization: m11 = Q(e1), m22 = Q(e2), m12 = (Q(e1+e2) - m11 - m22) / 2.
    Reuses the scalar evaluation path, and is exactly symmetric by construction.
    """
    m11 = evaluate(np.array([1.0, 0.0]))
    m22 = evaluate(np.array([0.0, 1.0]))
    m12 = 0.5 * (evaluate(np.array([1.0, 1.0])) - m11 - m22)
    return EnergyForm.from_matrix(np.array([[m11, m12], [m12, m22]]))


def assemble_form_curv(tri: LiftedTriangulation, fluid: FluidParams) -> EnergyForm:
    return assemble_form(lambda b: dissipation_curv(tri, fluid, b))


# ---------------------------------------------------------------------------
# direction distributions
# ---------------------------------------------------------------------------

@dataclass
class DirectionDistribution:
    """Probability space of unit flow directions: finite atoms and/or arcs.

    Arcs live in master-direction parameter space [0, 2*pi) and are pushed
    onto the sphere through the normalized mean-velocity map, represented by
    its 3x2 matrix.  Atom probabilities plus the total arc mass sum to one.
    """

    atoms: list = field(default_factory=list)       # [(unit 3-vector, prob)]
    arcs: list = field(default_factory=list)        # [(t0, t1)] with 0 <= t0 < t1 <= 2*pi
    arc_mass: float = 0.0
    push: np.ndarray | None = None                  # 3x2 mean-velocity matrix
    map_tag: str = "curvature"

    def total(self) -> float:
        return float(sum(p for _, p in self.atoms) + self.arc_mass)

    @property
    def is_atomic(self) -> bool:
        return not self.arcs

    def arc_length(self) -> float:
        return float(sum(b - a for a, b in self.arcs))

    def direction_at(self, t):
        """Pushforward of master parameter(s) t onto the unit sphere."""
        t = np.asarray(t, dtype=float)
        e = np.stack([np.cos(t), np.sin(t)], axis=-1)
        v = e @ self.push.T
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def arc_probability(self, t0: float, t1: float) -> float:
        """Probability of the pushforward image of the master arc from t0 to t1.

        The arc runs counter-clockwise; t1 may exceed 2*pi to express wrapping,
        but the span must not exceed a full turn.
        """
        if not self.arcs:
            return 0.0
        span = float(t1) - float(t0)
        if not 0.0 <= span <= TWO_PI + 1e-12:
            raise ValueError("arc query span must lie in [0, 2*pi]")
        t0 = float(np.mod(t0, TWO_PI))
        # represent the query as at most two non-wrapping intervals
        if t0 + span <= TWO_PI:
            query = [(t0, t0 + span)]
        else:
            query = [(t0, TWO_PI), (0.0, t0 + span - TWO_PI)]
        overlap = 0.0
        for qa, qb in query:
            for a, b in self.arcs:
                overlap += max(0.0, min(qb, b) - max(qa, a))
        return overlap / self.arc_length() * self.arc_mass

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n directions (atoms by probability, arcs uniform in parameter)."""
        probs = [p for _, p in self.atoms]
        lengths = [b - a for a, b in self.arcs]
        total_len = sum(lengths)
        weights = np.array(probs + [self.arc_mass * (l / total_len) for l in lengths]
                           if self.arcs else probs)
        weights = weights / weights.sum()
        choice = rng.choice(len(weights), size=n, p=weights)
        out = np.empty((n, 3))
        for i, c in enumerate(choice):
            if c < len(self.atoms):
                out[i] = self.atoms[c][0]
            else:
                a, b = self.arcs[c - len(self.atoms)]
                out[i] = self.direction_at(rng.uniform(a, b))
        return out

    def as_report(self) -> dict:
        rep = {}
        if self.atoms:
            rep["atoms"] = [{"dir": [float(x) for x in v], "p": float(p)}
                            for v, p in self.atoms]
        if self.arcs:
            rep["arcs"] = [[float(a), float(b)] for a, b in self.arcs]
            rep["arc_mass"] = float(self.arc_mass)
            rep["map"] = self.map_tag
        return rep


def preferential_curv(form: EnergyForm, tri: LiftedTriangulation) -> DirectionDistribution:
    """Preferential directions of the curvature dissipation form.

    Distinct eigenvalues give two equal-probability atoms at the normalized
    mean velocities of the two low-dissipation master directions; a
    degenerate form gives the uniform distribution over all master
    directions pushed through the mean-velocity map.
    """
    push = mean_velocity_matrix(tri, kind="curvature_V")
    if form.degenerate:
        return DirectionDistribution(arcs=[(0.0, TWO_PI)], arc_mass=1.0,
                                     push=push, map_tag="curvature")
    d = DirectionDistribution(push=push, map_tag="curvature")
    plus = push @ form.f1
    plus = plus / np.linalg.norm(plus)
    d.atoms = [(plus, 0.5), (-plus, 0.5)]
    return d
