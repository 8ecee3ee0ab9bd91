"""Weighted superposition of the three direction spaces and its entropy.

The three preferential-direction distributions combine through the convex
map (a1, a2, a3) -> normalize(p1 a1 + p2 a2 + p3 a3) under the product
measure; exact cancellation maps to the zero vector, the isotropic outcome.
Entropy is Shannon's, in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import DirectionDistribution

ZERO_TOL = 1e-12        # |p1 a1 + p2 a2 + p3 a3| below this is the zero atom
MERGE_TOL = 1e-10       # angular tolerance for merging coincident images
NORM_TOL = 1e-10


class NotNormalized(ValueError):
    pass


class CellOverlap(ValueError):
    pass


class UncoveredSample(ValueError):
    pass


@dataclass(frozen=True)
class SuperpositionWeights:
    p1: float
    p2: float
    p3: float

    def __post_init__(self):
        vals = (self.p1, self.p2, self.p3)
        if any(p < 0 for p in vals):
            raise ValueError("superposition weights must be non-negative")
        if abs(sum(vals) - 1.0) > 1e-12:
            raise ValueError(f"superposition weights must sum to 1, got {sum(vals)}")

    def as_array(self):
        return np.array([self.p1, self.p2, self.p3])


def compute_weights(min_curv: float, min_grav: float, min_friction: float
                    ) -> SuperpositionWeights:
    """Relative weights of the three effects from their minimal dissipations.

    All-zero minima (a flat horizontal crack) fall back to uniform weights:
    the medium is then isotropic and no effect dominates.
    """
    vals = np.array([min_curv, min_grav, min_friction], dtype=float)
    if np.any(vals < 0):
        raise ValueError("dissipation minima must be non-negative")
    total = float(vals.sum())
    if total < 1e-14:
        return SuperpositionWeights(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    p = vals / total
    # re-normalize the roundoff so the invariant holds exactly
    p = p / p.sum()
    return SuperpositionWeights(float(p[0]), float(p[1]), float(1.0 - p[0] - p[1]))


@dataclass
class GlobalDirectionSpace:
    """Discrete view of the superposed direction space on S^2 union {0}.

    exact is True when the space was enumerated from purely atomic inputs
    (probabilities are exact); otherwise samples carry Monte Carlo weights.
    """

    directions: np.ndarray   # (k, 3); zero rows are the isotropic atom
    probs: np.ndarray        # (k,)
    exact: bool
    premerge_count: int

    @property
    def zero_mass(self) -> float:
        zero = np.linalg.norm(self.directions, axis=1) < 0.5
        return float(self.probs[zero].sum())

    def total(self) -> float:
        return float(self.probs.sum())

    def as_report(self) -> dict:
        nonzero = np.linalg.norm(self.directions, axis=1) >= 0.5
        return {
            "zero_mass": self.zero_mass,
            "atoms": [{"dir": [float(x) for x in v], "p": float(p)}
                      for v, p in zip(self.directions[nonzero], self.probs[nonzero])],
        }


def _check_normalized(dist: DirectionDistribution, which: str):
    if abs(dist.total() - 1.0) > NORM_TOL:
        raise NotNormalized(f"{which} distribution has total probability {dist.total()}")


def superpose(d1: DirectionDistribution, d2: DirectionDistribution,
              d3: DirectionDistribution, weights: SuperpositionWeights,
              n_samples: int = 10000, seed: int = 0) -> GlobalDirectionSpace:
    """Combine the three spaces under the product measure.

    Purely atomic inputs are enumerated exactly and coincident images merged;
    any continuous component switches to Monte Carlo with n_samples triples,
    each component drawn independently.
    """
    for which, d in (("curvature", d1), ("gravity", d2), ("friction", d3)):
        _check_normalized(d, which)
    p = weights.as_array()

    if d1.is_atomic and d2.is_atomic and d3.is_atomic:
        dirs, probs = [], []
        for a1, q1 in d1.atoms:
            for a2, q2 in d2.atoms:
                for a3, q3 in d3.atoms:
                    v = p[0] * a1 + p[1] * a2 + p[2] * a3
                    nv = np.linalg.norm(v)
                    dirs.append(np.zeros(3) if nv < ZERO_TOL else v / nv)
                    probs.append(q1 * q2 * q3)
        premerge = len(dirs)
        dirs, probs = _merge(np.array(dirs), np.array(probs))
        return GlobalDirectionSpace(directions=dirs, probs=probs,
                                    exact=True, premerge_count=premerge)

    rng = np.random.default_rng(seed)
    s1 = d1.sample(rng, n_samples)
    s2 = d2.sample(rng, n_samples)
    s3 = d3.sample(rng, n_samples)
    v = p[0] * s1 + p[1] * s2 + p[2] * s3
    nv = np.linalg.norm(v, axis=1)
    zero = nv < ZERO_TOL
    v = np.where(zero[:, None], 0.0, v / np.where(zero, 1.0, nv)[:, None])
    probs = np.full(n_samples, 1.0 / n_samples)
    return GlobalDirectionSpace(directions=v, probs=probs,
                                exact=False, premerge_count=n_samples)


def _merge(dirs, probs):
    """Merge directions within MERGE_TOL (small-angle chord test); zeros merge too."""
    out_d, out_p = [], []
    for v, q in zip(dirs, probs):
        for i, u in enumerate(out_d):
            if np.linalg.norm(v - u) <= MERGE_TOL:
                out_p[i] += q
                break
        else:
            out_d.append(v)
            out_p.append(q)
    return np.array(out_d), np.array(out_p)


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------

def _plogp(p):
    p = np.asarray(p, dtype=float)
    mask = p > 0.0
    out = np.zeros_like(p)
    out[mask] = p[mask] * np.log(p[mask])
    return out


def partition_entropy(space: GlobalDirectionSpace, partition) -> float:
    """Shannon entropy of a measurable partition (cells given as predicates).

    Each sample of the space must belong to exactly one cell; violations
    raise CellOverlap / UncoveredSample.
    """
    masses = np.zeros(len(partition))
    for v, q in zip(space.directions, space.probs):
        hits = [i for i, cell in enumerate(partition) if cell(v)]
        if len(hits) == 0:
            raise UncoveredSample(f"direction {v} not covered by any cell")
        if len(hits) > 1:
            raise CellOverlap(f"direction {v} claimed by cells {hits}")
        masses[hits[0]] += q
    return float(-_plogp(masses).sum())


def sphere_bin_index(dirs: np.ndarray, bins: int) -> np.ndarray:
    """Equal-area bin index on S^2: bins z-bands x bins longitude sectors."""
    z = np.clip(dirs[:, 2], -1.0, 1.0)
    iz = np.clip(((z + 1.0) * 0.5 * bins).astype(int), 0, bins - 1)
    phi = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2.0 * np.pi)
    ip = np.clip((phi / (2.0 * np.pi) * bins).astype(int), 0, bins - 1)
    return iz * bins + ip


def geometric_entropy(space: GlobalDirectionSpace, bins: int = 16) -> dict:
    """Entropy report of the superposed space.

    Purely atomic (exact) spaces admit the exact value -sum p log p, which is
    the supremum over measurable partitions.  Sample-based spaces instead get
    a differential-entropy estimate over an equal-area longitude/latitude
    binning (bins x bins cells); the zero-vector mass is reported separately
    since no surface density exists when it is positive.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    report = {"zero_mass": space.zero_mass, "bins": int(bins),
              "atomic_entropy": None, "histogram_entropy": None}
    if space.exact:
        report["atomic_entropy"] = float(-_plogp(space.probs).sum())
        return report
    nonzero = np.linalg.norm(space.directions, axis=1) >= 0.5
    p_nz = space.probs[nonzero]
    if p_nz.sum() <= 0:
        report["histogram_entropy"] = 0.0
        return report
    idx = sphere_bin_index(space.directions[nonzero], bins)
    masses = np.bincount(idx, weights=p_nz, minlength=bins * bins)
    cell_area = 4.0 * np.pi / (bins * bins)
    dens_term = -_plogp(masses).sum() + masses.sum() * np.log(cell_area)
    report["histogram_entropy"] = float(dens_term)
    return report
