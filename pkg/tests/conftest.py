"""Shared test helpers: population factories and brute-force reference
implementations used as independent oracles by the test modules."""

import numpy as np

from chemosim.particles import Population


def make_pop(positions, species=None, ids=None):
    """Population wrapping explicit positions.

    Defaults: all particles Alpha, ids 0..N-1, zero drift and concentration,
    anchors at the initial positions, proposal buffer equal to positions.
    """
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    n = pos.shape[0]
    if species is None:
        kinds = np.zeros(n, dtype=np.uint8)
    else:
        kinds = np.asarray(species, dtype=np.uint8)
    return Population(
        ids=(np.arange(n, dtype=np.int64) if ids is None
             else np.asarray(ids, dtype=np.int64)),
        positions=pos.copy(),
        next_positions=pos.copy(),
        species=kinds.copy(),
        drift=np.zeros((n, 2)),
        local_concentration=np.zeros(n),
        start_anchor=pos.copy(),
    )


def brute_neighbors(positions, domain, point, radius):
    """All particles within `radius` of `point` by direct scan.

    Uses the same minimum-image displacement as the domain, so distances are
    bitwise comparable with the index's.  Returns (ids, dx, dist) with ids
    ascending.
    """
    point = np.asarray(point, dtype=float)
    dx = domain.wrap_displacement(np.asarray(positions, dtype=float) - point)
    dist = np.sqrt((dx * dx).sum(axis=1))
    ids = np.flatnonzero(dist <= radius)
    return ids, dx[ids], dist[ids]


def brute_soft_forces(positions, domain, epsilon, cutoff):
    """O(N^2) reference for the summed soft repulsion on every particle."""
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    out = np.zeros((n, 2))
    for i in range(n):
        dx = domain.wrap_displacement(pos - pos[i])
        r = np.sqrt((dx * dx).sum(axis=1))
        m = (r <= cutoff) & (r > 0.0)
        m[i] = False
        if m.any():
            scale = -(np.exp(-r[m] / epsilon) / (epsilon * r[m]))
            out[i] = (scale[:, None] * dx[m]).sum(axis=0)
    return out
