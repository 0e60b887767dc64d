"""Cell-list spatial index for fixed-radius neighbour queries.

Particles are bucketed into a uniform grid of cells at least as wide as the
interaction range, so a query only has to visit the cells adjacent to the
query point instead of scanning all particles.  The index is a snapshot: it
is rebuilt from scratch every step (build is O(N)) and never updated in
place.  Displacements returned by queries use the minimum-image convention
on periodic axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True, eq=False)
class Domain:
    """Rectangular box with per-axis boundary behaviour.

    Attributes
    ----------
    lo, hi : (2,) float arrays, corner coordinates with lo < hi per axis.
    periodic : (2,) bool array, True where the axis wraps.
    """

    lo: NDArray[np.float64]
    hi: NDArray[np.float64]
    periodic: NDArray[np.bool_]

    @classmethod
    def square(cls, size: float, periodic: bool = False) -> "Domain":
        """Square box of side `size` centred on the origin."""
        half = float(size) / 2.0
        if not half > 0.0:
            raise ValueError("domain size must be positive")
        return cls(
            lo=np.array([-half, -half]),
            hi=np.array([half, half]),
            periodic=np.array([periodic, periodic], dtype=bool),
        )

    @property
    def size(self) -> NDArray[np.float64]:
        return self.hi - self.lo

    def contains(self, points) -> NDArray[np.bool_]:
        """True for points inside the closed box (per row)."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((p >= self.lo) & (p <= self.hi), axis=1)

    def wrap_displacement(self, d):
        """Minimum-image displacement: wrap periodic axes into (-L/2, L/2]."""
        d = np.array(d, dtype=float, copy=True)
        span = self.size
        for ax in range(2):
            if self.periodic[ax]:
                d[..., ax] -= span[ax] * np.round(d[..., ax] / span[ax])
        return d


class Neighbor(NamedTuple):
    id: int
    dx: np.ndarray  # displacement query point -> particle, minimum image
    distance: float


class CellIndex:
    """Bucketed particle snapshot supporting fixed-radius queries.

    The mapping from integer cell coordinates to member particles is stored
    as a sorted permutation (`order`) plus per-cell offsets (`starts`), the
    flat-array equivalent of a dict of buckets.  Cell (cx, cy) holds
    ``order[starts[cy * n_cells_x + cx] : starts[... + 1]]`` in ascending
    particle-id order.
    """

    def __init__(self, positions, domain, cell_side, n_cells, eff_side,
                 cell_xy, order, starts):
        self.positions = positions
        self.domain = domain
        self.cell_side = cell_side
        self.n_cells = n_cells      # (2,) cells per axis
        self.eff_side = eff_side    # (2,) actual cell side = size / n_cells
        self.cell_xy = cell_xy      # (N, 2) integer cell coordinate per particle
        self.order = order
        self.starts = starts

    @classmethod
    def build(cls, positions, domain: Domain, cell_side: float) -> "CellIndex":
        """Bucket `positions` into cells of side >= cell_side.

        Raises ValueError for non-positive cell_side and for any particle
        outside the closed domain (that signals a missed boundary-condition
        application upstream or a NaN coordinate).
        """
        positions = np.ascontiguousarray(positions, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 2:
            raise ValueError("positions must have shape (N, 2)")
        if not cell_side > 0.0:
            raise ValueError("cell_side must be positive")
        if positions.size and not bool(domain.contains(positions).all()):
            bad = int(np.flatnonzero(~domain.contains(positions))[0])
            raise ValueError(
                f"particle {bad} at {positions[bad]} is outside the domain "
                "(boundary conditions not applied?)")

        # floor(size / cell_side) cells per axis so the actual cell side is
        # never below the requested one; a single cell is the degenerate case
        n_cells = np.maximum(np.floor(domain.size / cell_side).astype(np.int64), 1)
        eff_side = domain.size / n_cells
        cell_xy = np.floor((positions - domain.lo) / eff_side).astype(np.int64)
        np.clip(cell_xy, 0, n_cells - 1, out=cell_xy)  # closed upper edge
        flat = cell_xy[:, 1] * n_cells[0] + cell_xy[:, 0]
        order = np.argsort(flat, kind="stable").astype(np.int64)
        n_flat = int(n_cells[0] * n_cells[1])
        starts = np.searchsorted(flat[order], np.arange(n_flat + 1)).astype(np.int64)
        return cls(positions, domain, float(cell_side), n_cells, eff_side,
                   cell_xy, order, starts)

    def bucket(self, cx: int, cy: int) -> np.ndarray:
        """Particle ids stored in cell (cx, cy), ascending."""
        f = int(cy) * int(self.n_cells[0]) + int(cx)
        return self.order[self.starts[f]:self.starts[f + 1]]

    def _axis_cells(self, ax: int, centre: int, radius: float) -> np.ndarray:
        """Cell indices along one axis whose strip can intersect the query
        ball; each cell appears at most once even when a periodic ring wraps
        all the way around."""
        n = int(self.n_cells[ax])
        reach = int(np.ceil(radius / self.eff_side[ax]))
        if self.domain.periodic[ax]:
            if 2 * reach + 1 >= n:
                return np.arange(n)
            return (np.arange(centre - reach, centre + reach + 1)) % n
        idx = np.arange(centre - reach, centre + reach + 1)
        return idx[(idx >= 0) & (idx < n)]

    def _candidates(self, point, radius: float) -> np.ndarray:
        cpt = np.floor((point - self.domain.lo) / self.eff_side).astype(np.int64)
        cpt = np.clip(cpt, 0, self.n_cells - 1)
        ix = self._axis_cells(0, int(cpt[0]), radius)
        iy = self._axis_cells(1, int(cpt[1]), radius)
        flat = (iy[:, None] * self.n_cells[0] + ix[None, :]).ravel()
        lengths = self.starts[flat + 1] - self.starts[flat]
        total = int(lengths.sum())
        if total == 0:
            return np.empty(0, dtype=np.int64)
        heads = np.repeat(self.starts[flat], lengths)
        within = np.arange(total) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        return self.order[heads + within]

    def query(self, point, radius: float) -> list[Neighbor]:
        """All particles within `radius` of `point`, ascending id.

        A particle sitting exactly at the query point is returned with
        distance 0 (callers doing pair sums skip it).  Radii larger than the
        cell side are handled by searching the correspondingly wider ring of
        cells.
        """
        point = np.asarray(point, dtype=float)
        if not radius > 0.0:
            raise ValueError("query radius must be positive")
        if not bool(self.domain.contains(point)[0]):
            raise ValueError(f"query point {point} is outside the domain")
        cand = self._candidates(point, radius)
        if cand.size == 0:
            return []
        dx = self.domain.wrap_displacement(self.positions[cand] - point)
        dist = np.sqrt((dx * dx).sum(axis=1))
        keep = dist <= radius
        cand, dx, dist = cand[keep], dx[keep], dist[keep]
        srt = np.argsort(cand)
        return [Neighbor(int(c), d, float(r))
                for c, d, r in zip(cand[srt], dx[srt], dist[srt])]
