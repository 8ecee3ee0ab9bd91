"""Markov transmission matrix of a gridded fissured system.

A rectangular grid of square cells, each holding at most one analyzed
crack.  A cell's outgoing probabilities come from casting rays from its
centroid along the horizontal projections of its preferential directions
and recording the face each ray exits; crack-free cells spread uniformly
over their neighbors.  Rows are stochastic with zero diagonal and at most
four off-diagonal entries.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .superposition import GlobalDirectionSpace

HORIZONTAL_TOL = 1e-12
ROW_TOL = 1e-12

# face order: east, west, north, south
FACES = ("east", "west", "north", "south")
_OFFSETS = {"east": (1, 0), "west": (-1, 0), "north": (0, 1), "south": (0, -1)}


class NoNeighbors(UserWarning):
    """A cell has no neighboring cell (1x1 grid); its matrix row stays empty."""


@dataclass
class FissureGrid:
    """nx x ny grid of square cells; cells maps (ix, iy) -> crack analysis."""

    dims: tuple
    cell_size: float = 1.0
    cells: dict = field(default_factory=dict)

    def __post_init__(self):
        nx, ny = self.dims
        if nx < 1 or ny < 1:
            raise ValueError("grid dimensions must be at least 1x1")
        if not self.cell_size > 0:
            raise ValueError("cell size must be positive")
        for key in self.cells:
            ix, iy = key
            if not (0 <= ix < nx and 0 <= iy < ny):
                raise ValueError(f"crack cell {key} outside the grid")

    @property
    def n_cells(self):
        return self.dims[0] * self.dims[1]

    def cell_id(self, ix, iy):
        return iy * self.dims[0] + ix

    def neighbor_faces(self, ix, iy):
        nx, ny = self.dims
        out = {}
        for face, (dx, dy) in _OFFSETS.items():
            jx, jy = ix + dx, iy + dy
            if 0 <= jx < nx and 0 <= jy < ny:
                out[face] = self.cell_id(jx, jy)
        return out


def cell_transmission(space: GlobalDirectionSpace | None, has_neighbor: dict) -> dict:
    """Face -> probability map for one cell.

    Each sample's horizontal projection is cast from the centroid; ties at
    the cell corner split between the two faces, vertical/zero directions
    spread uniformly over the neighbor faces.  Mass landing on a wall without
    a neighbor is redistributed proportionally over the neighbored faces
    (uniformly if those carried nothing).
    """
    faces_present = [f for f in FACES if has_neighbor.get(f)]
    if not faces_present:
        warnings.warn("cell has no neighbors; emitting an empty row", NoNeighbors)
        return {}
    raw = dict.fromkeys(FACES, 0.0)
    if space is None:
        for f in faces_present:
            raw[f] = 1.0 / len(faces_present)
    else:
        for v, q in zip(space.directions, space.probs):
            hx, hy = float(v[0]), float(v[1])
            norm = np.hypot(hx, hy)
            if norm < HORIZONTAL_TOL:
                for f in faces_present:
                    raw[f] += q / len(faces_present)
                continue
            fx = "east" if hx > 0 else "west"
            fy = "north" if hy > 0 else "south"
            if abs(hx) > abs(hy):
                raw[fx] += q
            elif abs(hy) > abs(hx):
                raw[fy] += q
            else:
                raw[fx] += 0.5 * q
                raw[fy] += 0.5 * q
    kept = {f: raw[f] for f in faces_present}
    lost = sum(raw[f] for f in FACES if f not in faces_present)
    kept_total = sum(kept.values())
    if lost > 0.0:
        if kept_total > 0.0:
            kept = {f: w * (kept_total + lost) / kept_total for f, w in kept.items()}
        else:
            kept = {f: (kept_total + lost) / len(kept) for f in kept}
    total = sum(kept.values())
    if total > 0.0:
        kept = {f: w / total for f, w in kept.items()}
    return {f: w for f, w in kept.items() if w > 0.0}


@dataclass
class TransmissionMatrix:
    """Sparse row-stochastic cell-to-neighbor matrix."""

    n: int
    rows: list  # per cell: list of (neighbor id, probability)

    def row_sums(self):
        return np.array([sum(p for _, p in row) for row in self.rows])

    def to_dense(self):
        m = np.zeros((self.n, self.n))
        for i, row in enumerate(self.rows):
            for j, p in row:
                m[i, j] = p
        return m

    def nnz(self):
        return sum(len(row) for row in self.rows)

    def to_matrix_market(self) -> str:
        lines = ["%%MatrixMarket matrix coordinate real general",
                 f"{self.n} {self.n} {self.nnz()}"]
        for i, row in enumerate(self.rows):
            for j, p in sorted(row):
                lines.append(f"{i + 1} {j + 1} {p!r}")
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_matrix_market())


def build_matrix(grid: FissureGrid) -> TransmissionMatrix:
    """Assemble the transmission matrix; validates all row invariants."""
    nx, ny = grid.dims
    rows = []
    for iy in range(ny):
        for ix in range(nx):
            has = grid.neighbor_faces(ix, iy)
            trans = cell_transmission(grid.cells.get((ix, iy)), has)
            rows.append(sorted((has[f], p) for f, p in trans.items()))
    mat = TransmissionMatrix(n=grid.n_cells, rows=rows)
    _validate_matrix(mat, grid)
    return mat


def _validate_matrix(mat: TransmissionMatrix, grid: FissureGrid):
    nx, ny = grid.dims
    for i, row in enumerate(mat.rows):
        if not row:
            continue  # isolated cell (1x1 grid)
        s = sum(p for _, p in row)
        if abs(s - 1.0) > ROW_TOL:
            raise AssertionError(f"row {i} sums to {s}")
        if any(p < 0 for _, p in row):
            raise AssertionError(f"row {i} has a negative entry")
        if any(j == i for j, _ in row):
            raise AssertionError(f"row {i} has a diagonal entry")
        if len(row) > 4:
            raise AssertionError(f"row {i} has {len(row)} entries")
        ix, iy = i % nx, i // nx
        allowed = set(grid.neighbor_faces(ix, iy).values())
        if any(j not in allowed for j, _ in row):
            raise AssertionError(f"row {i} transmits to a non-adjacent cell")


@dataclass
class StationaryResult:
    vector: np.ndarray
    converged: bool
    iterations: int
    residual: float


def stationary(mat: TransmissionMatrix, tol: float = 1e-12,
               max_iter: int = 10000) -> StationaryResult:
    """Power iteration for the stationary distribution from the uniform start.

    Periodic chains (e.g. a 2-cell loop) can have the uniform vector exactly
    stationary while generic starts oscillate forever; the convergence flag
    therefore also requires a probe iteration from a basis vector to settle.
    """
    p = mat.to_dense()
    pi = np.full(mat.n, 1.0 / mat.n)
    it = 0
    resid = float(np.abs(pi @ p - pi).sum())
    while resid >= tol and it < max_iter:
        nxt = pi @ p
        total = nxt.sum()
        if total > 0:
            nxt = nxt / total
        resid = float(np.abs(nxt - pi).sum())
        pi = nxt
        it += 1
    converged = resid < tol

    probe = np.zeros(mat.n)
    probe[0] = 1.0
    probe_ok = False
    for _ in range(max_iter):
        nxt = probe @ p
        total = nxt.sum()
        if total > 0:
            nxt = nxt / total
        if np.abs(nxt - probe).sum() < max(tol, 1e-10):
            probe_ok = True
            break
        probe = nxt
    return StationaryResult(vector=pi, converged=converged and probe_ok,
                            iterations=it, residual=resid)


# ---------------------------------------------------------------------------
# JSON interchange for standalone grids
# ---------------------------------------------------------------------------

def grid_from_json(obj: dict) -> FissureGrid:
    """Grid spec: {dims: [nx, ny], cell_size, cells: [{cell: [ix, iy],
    atoms: [{dir: [x, y, z], p}, ...]}, ...]}."""
    if "dims" not in obj:
        raise ValueError("grid JSON requires 'dims'")
    dims = tuple(int(v) for v in obj["dims"])
    cells = {}
    for entry in obj.get("cells", []):
        key = tuple(int(v) for v in entry["cell"])
        atoms = entry.get("atoms", [])
        dirs = np.array([a["dir"] for a in atoms], dtype=float).reshape(-1, 3)
        probs = np.array([a["p"] for a in atoms], dtype=float)
        cells[key] = GlobalDirectionSpace(directions=dirs, probs=probs,
                                          exact=True, premerge_count=len(atoms))
    return FissureGrid(dims=dims, cell_size=float(obj.get("cell_size", 1.0)),
                       cells=cells)
