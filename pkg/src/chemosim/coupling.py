"""Particle <-> grid coupling: density deposits and field interpolation.

Deposits turn particle positions into nodal density arrays; interpolation
samples the concentration and its gradient back at particle positions.
Both work in grid units u = (x - lo) / spacing so a shift by exactly one
spacing permutes node values instead of re-rounding them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from .field import Field, Grid
from .particles import Population, Species


@dataclass(frozen=True)
class Kernel:
    """Deposit kernel choice.

    gaussian: K_h(x) = (2 pi h^2)^-1 exp(-|x|^2 / (2 h^2)), truncated at
    `cutoff` (Euclidean distance); h defaults to the interaction range.
    cic: cloud-in-cell, bilinear mass splitting among the four surrounding
    nodes, which conserves deposited mass exactly.
    """

    kind: str = "gaussian"
    h: float = 0.02
    cutoff: float = 0.06

    def __post_init__(self):
        if self.kind not in ("gaussian", "cic"):
            raise ValueError(f"unknown deposit kernel {self.kind!r}")
        if self.kind == "gaussian":
            if not self.h > 0:
                raise ValueError("kernel bandwidth must be positive")
            if not self.cutoff > 0:
                raise ValueError("kernel cutoff must be positive")


@njit(cache=True)
def _gauss_scatter(pos, lo0, lo1, d0, d1, n, per, h, cutoff, out):
    inv_norm = 1.0 / (2.0 * np.pi * h * h)
    two_h2 = 2.0 * h * h
    cut2 = cutoff * cutoff
    w0 = int(np.floor(cutoff / d0 + 0.5))
    w1 = int(np.floor(cutoff / d1 + 0.5))
    for p in range(pos.shape[0]):
        u0 = (pos[p, 0] - lo0) / d0
        u1 = (pos[p, 1] - lo1) / d1
        b0 = int(np.floor(u0 + 0.5))
        b1 = int(np.floor(u1 + 0.5))
        for o1 in range(-w1, w1 + 1):
            j = b1 + o1
            if per:
                j = j % n
            elif j < 0 or j >= n:
                continue
            dy = (u1 - (b1 + o1)) * d1
            dy2 = dy * dy
            for o0 in range(-w0, w0 + 1):
                i = b0 + o0
                if per:
                    i = i % n
                elif i < 0 or i >= n:
                    continue
                dxp = (u0 - (b0 + o0)) * d0
                r2 = dxp * dxp + dy2
                if r2 <= cut2:
                    out[j * n + i] += inv_norm * np.exp(-r2 / two_h2)


@njit(cache=True)
def _gauss_scatter_pair(pos, labels, lo0, lo1, d0, d1, n, per, h, cutoff,
                        out_a, out_b):
    # one pass over all particles, routed to the two density arrays by
    # species label; node sums match the per-species scatter bit for bit
    inv_norm = 1.0 / (2.0 * np.pi * h * h)
    two_h2 = 2.0 * h * h
    cut2 = cutoff * cutoff
    w0 = int(np.floor(cutoff / d0 + 0.5))
    w1 = int(np.floor(cutoff / d1 + 0.5))
    for p in range(pos.shape[0]):
        out = out_a if labels[p] == 0 else out_b
        u0 = (pos[p, 0] - lo0) / d0
        u1 = (pos[p, 1] - lo1) / d1
        b0 = int(np.floor(u0 + 0.5))
        b1 = int(np.floor(u1 + 0.5))
        for o1 in range(-w1, w1 + 1):
            j = b1 + o1
            if per:
                j = j % n
            elif j < 0 or j >= n:
                continue
            dy = (u1 - (b1 + o1)) * d1
            dy2 = dy * dy
            for o0 in range(-w0, w0 + 1):
                i = b0 + o0
                if per:
                    i = i % n
                elif i < 0 or i >= n:
                    continue
                dxp = (u0 - (b0 + o0)) * d0
                r2 = dxp * dxp + dy2
                if r2 <= cut2:
                    out[j * n + i] += inv_norm * np.exp(-r2 / two_h2)


def _cic_scatter(pos: np.ndarray, grid: Grid) -> np.ndarray:
    n = grid.n_c
    d0, d1 = grid.spacing
    out = np.zeros(n * n)
    if pos.shape[0] == 0:
        return out
    u = (pos - grid.lo) / grid.spacing
    if grid.boundary == "periodic":
        base = np.floor(u)
        frac = u - base
        b = base.astype(np.int64) % n
        b1 = (b + 1) % n
    else:
        b = np.clip(np.floor(u).astype(np.int64), 0, n - 2)
        frac = u - b
        b1 = b + 1
    fx, fy = frac[:, 0], frac[:, 1]
    unit = 1.0 / (d0 * d1)  # each particle deposits unit mass
    for ix, iy, w in (
        (b[:, 0], b[:, 1], (1 - fx) * (1 - fy)),
        (b1[:, 0], b[:, 1], fx * (1 - fy)),
        (b[:, 0], b1[:, 1], (1 - fx) * fy),
        (b1[:, 0], b1[:, 1], fx * fy),
    ):
        out += np.bincount(iy * n + ix, weights=w * unit, minlength=n * n)
    return out


def deposit(pop: Population, grid: Grid, kernel: Kernel,
            species: Species) -> np.ndarray:
    """Nodal number density of one species.

    Particle-centric scatter: each particle stamps its kernel onto the nodes
    within the cutoff (gaussian) or its four cell corners (cic).  Nodes past
    a neumann wall simply do not exist, so a gaussian deposit near a wall
    loses the clipped tail; it is not renormalised.
    """
    pos = np.ascontiguousarray(pop.positions[pop.species == species])
    if kernel.kind == "cic":
        return _cic_scatter(pos, grid)
    n = grid.n_c
    d0, d1 = grid.spacing
    per = grid.boundary == "periodic"
    if per and int(np.floor(kernel.cutoff / min(d0, d1) + 0.5)) * 2 + 1 > n:
        raise ValueError("gaussian cutoff spans more than the periodic grid")
    out = np.zeros(n * n)
    _gauss_scatter(pos, float(grid.lo[0]), float(grid.lo[1]),
                   float(d0), float(d1), n, per,
                   kernel.h, kernel.cutoff, out)
    return out


def deposit_both(pop: Population, grid: Grid,
                 kernel: Kernel) -> tuple[np.ndarray, np.ndarray]:
    """Nodal number densities of both species from one particle sweep.

    Returns ``(rho_alpha, rho_beta)``.  Node sums equal the per-species
    :func:`deposit` results exactly; the fused sweep just avoids masking and
    dispatching twice per step.
    """
    if kernel.kind == "cic":
        return (deposit(pop, grid, kernel, Species.ALPHA),
                deposit(pop, grid, kernel, Species.BETA))
    n = grid.n_c
    d0, d1 = grid.spacing
    per = grid.boundary == "periodic"
    if per and int(np.floor(kernel.cutoff / min(d0, d1) + 0.5)) * 2 + 1 > n:
        raise ValueError("gaussian cutoff spans more than the periodic grid")
    out_a = np.zeros(n * n)
    out_b = np.zeros(n * n)
    _gauss_scatter_pair(pop.positions, pop.species,
                        float(grid.lo[0]), float(grid.lo[1]),
                        float(d0), float(d1), n, per,
                        kernel.h, kernel.cutoff, out_a, out_b)
    return out_a, out_b


def deposit_gather(pop: Population, grid: Grid, kernel: Kernel,
                   species: Species) -> np.ndarray:
    """Node-centric reference deposit (gaussian only).

    Scans every node against every particle, O(N n_c^2); exists as the
    independent cross-check of the scatter path in the test suite.  The two
    enumerate the same particle/node pairs, so they agree to floating-point
    reassociation.
    """
    if kernel.kind != "gaussian":
        raise ValueError("gather reference is defined for the gaussian kernel")
    pos = pop.positions[pop.species == species]
    nodes = grid.node_positions()
    out = np.zeros(nodes.shape[0])
    inv_norm = 1.0 / (2.0 * np.pi * kernel.h ** 2)
    span = grid.hi - grid.lo
    for p in range(pos.shape[0]):
        d = nodes - pos[p]
        if grid.boundary == "periodic":
            d = d - span * np.round(d / span)
        r2 = (d * d).sum(axis=1)
        m = r2 <= kernel.cutoff ** 2
        out[m] += inv_norm * np.exp(-r2[m] / (2.0 * kernel.h ** 2))
    return out


@njit(cache=True)
def _bilinear(points, values, lo0, lo1, d0, d1, n, per, out):
    clamped = 0
    nm1 = n - 1
    for p in range(points.shape[0]):
        u0 = (points[p, 0] - lo0) / d0
        u1 = (points[p, 1] - lo1) / d1
        if per:
            f0f = np.floor(u0)
            f1f = np.floor(u1)
            b0 = int(f0f) % n
            b1 = int(f1f) % n
            f0 = u0 - f0f
            f1 = u1 - f1f
            c0 = (b0 + 1) % n
            c1 = (b1 + 1) % n
        else:
            if u0 < 0.0:
                u0 = 0.0
                clamped += 1
            elif u0 > nm1:
                u0 = float(nm1)
                clamped += 1
            if u1 < 0.0:
                u1 = 0.0
                clamped += 1
            elif u1 > nm1:
                u1 = float(nm1)
                clamped += 1
            b0 = min(int(np.floor(u0)), n - 2)
            b1 = min(int(np.floor(u1)), n - 2)
            f0 = u0 - b0
            f1 = u1 - b1
            c0 = b0 + 1
            c1 = b1 + 1
        w00 = (1.0 - f0) * (1.0 - f1)
        w10 = f0 * (1.0 - f1)
        w01 = (1.0 - f0) * f1
        w11 = f0 * f1
        r00 = b1 * n + b0
        r10 = b1 * n + c0
        r01 = c1 * n + b0
        r11 = c1 * n + c0
        for m in range(values.shape[1]):
            out[p, m] = (w00 * values[r00, m] + w10 * values[r10, m]
                         + w01 * values[r01, m] + w11 * values[r11, m])
    return clamped


def interpolate(grid: Grid, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Bilinear sample of one or more nodal arrays at arbitrary points.

    `values` is (n_c^2,) or (n_c^2, m) in flat node order; the result
    matches (k,) or (k, m).  The four weights always sum to one, so affine
    nodal data is reproduced exactly and a point exactly on a node returns
    that node's values.  Points outside the hull are clamped to the nearest
    face with a warning (transient excursions only; periodic grids wrap
    instead).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.asarray(values, dtype=float)
    squeeze_cols = vals.ndim == 1
    if squeeze_cols:
        vals = vals[:, None]
    out = np.empty((pts.shape[0], vals.shape[1]))
    clamped = _bilinear(pts, np.ascontiguousarray(vals),
                        float(grid.lo[0]), float(grid.lo[1]),
                        float(grid.spacing[0]), float(grid.spacing[1]),
                        grid.n_c, grid.boundary == "periodic", out)
    if clamped:
        warnings.warn(f"{clamped} interpolation point(s) outside the grid "
                      "hull were clamped", stacklevel=2)
    if squeeze_cols:
        out = out[:, 0]
    if np.asarray(points).ndim == 1:
        return out[0]
    return out


def field_at(field: Field, grid: Grid, points: np.ndarray):
    """(concentration, gradient) sampled at `points` in one pass."""
    stacked = np.column_stack([field.c, field.grad])
    out = np.atleast_2d(interpolate(grid, stacked, points))
    return out[:, 0], out[:, 1:3]


def refresh_particle_fields(pop: Population, field: Field, grid: Grid,
                            chi: float) -> None:
    """Update cached per-particle field samples and the chemotactic drift.

    Beta particles advect with chi * grad c at their position; Alpha
    particles never advect, so their drift is pinned to zero regardless of
    the local gradient.  Both species cache the local concentration (the
    Beta -> Alpha reaction rate needs it).
    """
    lo0, lo1 = float(grid.lo[0]), float(grid.lo[1])
    d0, d1 = float(grid.spacing[0]), float(grid.spacing[1])
    per = grid.boundary == "periodic"
    conc = np.empty((len(pop), 1))
    clamped = _bilinear(pop.positions, field.c[:, None], lo0, lo1, d0, d1,
                        grid.n_c, per, conc)
    clamped += _bilinear(pop.positions, field.grad, lo0, lo1, d0, d1,
                         grid.n_c, per, pop.drift)
    if clamped:
        warnings.warn(f"{clamped} interpolation point(s) outside the grid "
                      "hull were clamped", stacklevel=2)
    pop.local_concentration[:] = conc[:, 0]
    if chi != 1.0:
        pop.drift *= chi
    pop.drift[pop.species == Species.ALPHA] = 0.0
