"""Overdamped Brownian motion with short-range repulsion.

Position updates follow the Euler--Maruyama discretisation of the
overdamped Langevin equation: a Gaussian increment of per-axis variance
2 * D * dt, plus the chemotactic drift (Beta particles only) and the summed
pair-interaction force, each multiplied by dt.  A tamed variant bounds the
deterministic interaction increment so stiff force spikes cannot blow up a
trajectory.  Hard-sphere mode replaces the soft force with a positional
overlap correction applied to the proposed positions.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .particles import Population, Species
from .spatial_index import CellIndex, Domain


class SimulationError(RuntimeError):
    """A realisation reached a non-recoverable state (NaN position, runaway
    overshoot); the run should be aborted rather than patched over."""


@dataclass
class MotionParams:
    """Parameters of the position update.

    interaction selects the pair model: "soft" (exponential repulsion with
    range epsilon, cut off at `cutoff`), "hard" (hard-sphere overlap
    correction with diameter epsilon), or "none".  The resolution guard
    sqrt(2 (d_alpha + d_beta) dt) <= epsilon is a rule of thumb for resolving
    pair encounters; violating it only warns, and only when interactions are
    enabled, because the free-diffusion presets legitimately take much larger
    steps.
    """

    d_alpha: float = 0.1
    d_beta: float = 1.0
    chi: float = 1.0
    epsilon: float = 0.02
    dt: float = 5.29e-6
    interaction: str = "soft"
    cutoff: float = field(default=0.0)  # absolute force cutoff; 0 -> 5 epsilon
    integrator: str = "em"

    def __post_init__(self):
        if self.d_alpha < 0 or self.d_beta < 0:
            raise ValueError("diffusion coefficients must be non-negative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.interaction not in ("soft", "hard", "none"):
            raise ValueError(f"unknown interaction model {self.interaction!r}")
        if self.integrator not in ("em", "tamed"):
            raise ValueError(f"unknown integrator {self.integrator!r}")
        if self.interaction != "none":
            if not self.epsilon > 0:
                raise ValueError("epsilon must be positive for interacting runs")
            if self.cutoff == 0.0:
                self.cutoff = 5.0 * self.epsilon
            step_scale = math.sqrt(2.0 * (self.d_alpha + self.d_beta) * self.dt)
            if step_scale > self.epsilon:
                warnings.warn(
                    f"dt resolution guard violated: rms pair step {step_scale:.3g} "
                    f"exceeds epsilon {self.epsilon:.3g}; encounters may be skipped",
                    stacklevel=2)

    def diffusion_of(self, species: np.ndarray) -> np.ndarray:
        return np.where(species == Species.ALPHA, self.d_alpha, self.d_beta)


def pair_force(dx, r: float, epsilon: float):
    """Force on particle i from the soft potential u(r) = exp(-r / epsilon).

    dx is the minimum-image displacement from i to j, r its length.  The
    returned vector is -grad_i u = -(1/epsilon) exp(-r/epsilon) dx / r,
    i.e. repulsive, pushing i away from j.  Exact overlap (r = 0) has no
    defined direction and contributes zero force by convention.
    """
    dx = np.asarray(dx, dtype=float)
    if r == 0.0:
        return np.zeros_like(dx)
    return -(np.exp(-r / epsilon) / (epsilon * r)) * dx


@njit(cache=True)
def _axis_cells(centre, reach, n, periodic):
    if periodic and 2 * reach + 1 >= n:
        return np.arange(n)
    out = np.empty(2 * reach + 1, np.int64)
    k = 0
    for o in range(-reach, reach + 1):
        g = centre + o
        if periodic:
            g = g % n
        elif g < 0 or g >= n:
            continue
        out[k] = g
        k += 1
    return out[:k]


@njit(cache=True)
def _soft_forces(pos, cell_x, cell_y, order, starts, ncx, ncy, effx, effy,
                 perx, pery, lx, ly, eps, cutoff, out):
    n = pos.shape[0]
    cut2 = cutoff * cutoff
    rx = int(np.ceil(cutoff / effx))
    ry = int(np.ceil(cutoff / effy))
    for i in range(n):
        fx = 0.0
        fy = 0.0
        xi = pos[i, 0]
        yi = pos[i, 1]
        xcells = _axis_cells(cell_x[i], rx, ncx, perx)
        ycells = _axis_cells(cell_y[i], ry, ncy, pery)
        for gy in ycells:
            for gx in xcells:
                f = gy * ncx + gx
                for k in range(starts[f], starts[f + 1]):
                    j = order[k]
                    if j == i:
                        continue
                    dx0 = pos[j, 0] - xi
                    dx1 = pos[j, 1] - yi
                    if perx:
                        dx0 -= lx * np.round(dx0 / lx)
                    if pery:
                        dx1 -= ly * np.round(dx1 / ly)
                    r2 = dx0 * dx0 + dx1 * dx1
                    if r2 > cut2 or r2 == 0.0:
                        continue
                    r = np.sqrt(r2)
                    s = -(np.exp(-r / eps) / (eps * r))
                    fx += s * dx0
                    fy += s * dx1
        out[i, 0] = fx
        out[i, 1] = fy


def accumulate_forces(pop: Population, index: CellIndex,
                      params: MotionParams) -> np.ndarray:
    """Sum of pair_force over all neighbours within params.cutoff, per
    particle, found through the cell index.  Equals the brute-force O(N^2)
    pair sum up to floating-point reassociation."""
    out = np.empty_like(pop.positions)
    dom = index.domain
    _soft_forces(
        index.positions, index.cell_xy[:, 0].copy(), index.cell_xy[:, 1].copy(),
        index.order, index.starts,
        int(index.n_cells[0]), int(index.n_cells[1]),
        float(index.eff_side[0]), float(index.eff_side[1]),
        bool(dom.periodic[0]), bool(dom.periodic[1]),
        float(dom.size[0]), float(dom.size[1]),
        params.epsilon, params.cutoff, out)
    return out


@njit(cache=True)
def _soft_forces_fused(pos, lo0, lo1, size0, size1, per0, per1, eps, cutoff,
                       out):
    # self-contained binning sweep: counting-sort the particles into cells of
    # side >= cutoff, then sum forces over the 3 x 3 ring (deduplicated on
    # periodic axes with fewer than 3 cells)
    n = pos.shape[0]
    n0 = max(1, int(size0 / cutoff))
    n1 = max(1, int(size1 / cutoff))
    eff0 = size0 / n0
    eff1 = size1 / n1
    nflat = n0 * n1
    counts = np.zeros(nflat + 1, np.int64)
    cx = np.empty(n, np.int64)
    cy = np.empty(n, np.int64)
    for i in range(n):
        c0 = int(np.floor((pos[i, 0] - lo0) / eff0))
        if c0 < 0:
            c0 = 0
        elif c0 >= n0:
            c0 = n0 - 1
        c1 = int(np.floor((pos[i, 1] - lo1) / eff1))
        if c1 < 0:
            c1 = 0
        elif c1 >= n1:
            c1 = n1 - 1
        cx[i] = c0
        cy[i] = c1
        counts[c1 * n0 + c0 + 1] += 1
    starts = np.cumsum(counts)
    cursor = starts[:nflat].copy()
    order = np.empty(n, np.int64)
    for i in range(n):
        f = cy[i] * n0 + cx[i]
        order[cursor[f]] = i
        cursor[f] += 1
    cut2 = cutoff * cutoff
    for i in range(n):
        fx = 0.0
        fy = 0.0
        xi = pos[i, 0]
        yi = pos[i, 1]
        for o1 in range(-1, 2):
            g1 = cy[i] + o1
            if per1:
                if n1 == 1 and o1 != 0:
                    continue
                if n1 == 2 and o1 == 1:
                    continue
                g1 = g1 % n1
            elif g1 < 0 or g1 >= n1:
                continue
            for o0 in range(-1, 2):
                g0 = cx[i] + o0
                if per0:
                    if n0 == 1 and o0 != 0:
                        continue
                    if n0 == 2 and o0 == 1:
                        continue
                    g0 = g0 % n0
                elif g0 < 0 or g0 >= n0:
                    continue
                f = g1 * n0 + g0
                for k in range(starts[f], starts[f + 1]):
                    j = order[k]
                    if j == i:
                        continue
                    dx0 = pos[j, 0] - xi
                    dx1 = pos[j, 1] - yi
                    if per0:
                        dx0 -= size0 * np.round(dx0 / size0)
                    if per1:
                        dx1 -= size1 * np.round(dx1 / size1)
                    r2 = dx0 * dx0 + dx1 * dx1
                    if r2 > cut2 or r2 == 0.0:
                        continue
                    r = np.sqrt(r2)
                    s = -(np.exp(-r / eps) / (eps * r))
                    fx += s * dx0
                    fy += s * dx1
        out[i, 0] = fx
        out[i, 1] = fy


def soft_forces(pop: Population, domain: Domain,
                params: MotionParams) -> np.ndarray:
    """Soft pair forces without an externally built index.

    Bins the current positions internally (cells of side >= params.cutoff,
    so a single ring of neighbouring cells covers the interaction range) and
    computes the same per-particle force sums as accumulate_forces over a
    freshly built CellIndex, up to floating-point reassociation.  This is
    the per-step path of the engine; accumulate_forces remains the
    index-based form for callers that already have one.
    """
    out = np.empty_like(pop.positions)
    _soft_forces_fused(pop.positions,
                       float(domain.lo[0]), float(domain.lo[1]),
                       float(domain.size[0]), float(domain.size[1]),
                       bool(domain.periodic[0]), bool(domain.periodic[1]),
                       params.epsilon, params.cutoff, out)
    return out


def em_step(position, diffusion, drift, force, dt: float,
            rng: np.random.Generator):
    """Euler--Maruyama proposal: X + sqrt(2 D dt) xi + drift dt + force dt.

    Works on a single (2,) position or a batch (N, 2); `diffusion` is a
    scalar or an (N,) per-particle array.  Always draws one standard-normal
    pair per particle from `rng`, in row order.
    """
    position = np.asarray(position, dtype=float)
    xi = rng.standard_normal(position.shape)
    amp = np.sqrt(2.0 * np.asarray(diffusion, dtype=float) * dt)
    if amp.ndim == 1:
        amp = amp[:, None]
    return position + amp * xi + np.asarray(drift, dtype=float) * dt \
        + np.asarray(force, dtype=float) * dt


def tamed_step(position, diffusion, drift, force, dt: float,
               rng: np.random.Generator):
    """Tamed Euler proposal: the interaction increment force * dt is scaled
    by 1 / (1 + ||force|| dt), bounding its size below 1 for any force while
    agreeing with em_step to first order.  Noise and chemotactic drift are
    unchanged; with zero force this reduces exactly to em_step."""
    position = np.asarray(position, dtype=float)
    xi = rng.standard_normal(position.shape)
    amp = np.sqrt(2.0 * np.asarray(diffusion, dtype=float) * dt)
    if amp.ndim == 1:
        amp = amp[:, None]
    f = np.asarray(force, dtype=float)
    f = np.broadcast_to(f, position.shape)
    fnorm = np.sqrt((f * f).sum(axis=-1, keepdims=True))
    tamed = f * dt / (1.0 + fnorm * dt)
    return position + amp * xi + np.asarray(drift, dtype=float) * dt + tamed


_GOLDEN = 0.6180339887498949


def _tiebreak_direction(id_i: int, id_j: int) -> np.ndarray:
    # deterministic axis for coincident pairs, derived from the ids
    theta = 2.0 * math.pi * ((_GOLDEN * (id_i + 1) + _GOLDEN * _GOLDEN * (id_j + 1)) % 1.0)
    return np.array([math.cos(theta), math.sin(theta)])


def resolve_hard_sphere(pop: Population, domain: Domain,
                        params: MotionParams) -> np.ndarray:
    """Single overlap-correction sweep over the proposed positions.

    Every pair closer than epsilon when it is processed gets separated by an
    extra 2 * d_p along the centre line, d_p = epsilon - d_ij, split in
    proportion D_i / (D_i + D_j) (an immobile partner pushes the full amount
    onto the mobile one; two immobile ones split evenly).  Pairs are
    processed once, in ascending (i, j) id order, against the current state
    of the proposal buffer; corrections may create new overlaps, which wait
    for the next step's sweep.  Detection is a vectorised O(N^2) scan: the
    proposals may transiently sit outside the domain here (boundaries are
    applied afterwards), which the strict cell index would reject.
    """
    eps = params.epsilon
    prop = pop.next_positions
    n = len(pop)
    if n < 2:
        return prop
    delta = domain.wrap_displacement(prop[None, :, :] - prop[:, None, :])
    d2 = (delta * delta).sum(axis=2)
    iu, ju = np.triu_indices(n, k=1)
    hit = d2[iu, ju] < eps * eps
    if not np.any(hit):
        return prop
    dcoef = params.diffusion_of(pop.species)
    for i, j in zip(iu[hit], ju[hit]):
        dx = domain.wrap_displacement(prop[j] - prop[i])
        d = math.sqrt(float(dx @ dx))
        if d >= eps:
            continue  # separated by an earlier correction this sweep
        if d == 0.0:
            u = _tiebreak_direction(int(pop.ids[i]), int(pop.ids[j]))
        else:
            u = dx / d
        d_p = eps - d
        total = dcoef[i] + dcoef[j]
        share_i = 0.5 if total == 0.0 else dcoef[i] / total
        prop[i] -= u * (2.0 * d_p * share_i)
        prop[j] += u * (2.0 * d_p * (1.0 - share_i))
    return prop


@njit(cache=True)
def _boundaries_kernel(x, anchor, lo0, lo1, hi0, hi1, per0, per1):
    # returns (status, particle, axis): 0 ok, 1 non-finite coordinate,
    # 2 overshoot beyond one domain width, 3 reflection failed to settle
    n = x.shape[0]
    for i in range(n):
        if not (np.isfinite(x[i, 0]) and np.isfinite(x[i, 1])):
            return 1, i, 0
    for ax in range(2):
        lo = lo0 if ax == 0 else lo1
        hi = hi0 if ax == 0 else hi1
        per = per0 if ax == 0 else per1
        size = hi - lo
        for i in range(n):
            v = x[i, ax]
            if per:
                k = np.floor((v - lo) / size)
                if k != 0.0:
                    shift = k * size
                    v -= shift
                    anchor[i, ax] -= shift
                # floating-point edge: a wrap may land exactly on hi
                for _ in range(2):
                    if v >= hi:
                        v -= size
                        anchor[i, ax] -= size
                    elif v < lo:
                        v += size
                        anchor[i, ax] += size
                    else:
                        break
                x[i, ax] = v
            else:
                if v > hi + size or v < lo - size:
                    return 2, i, ax
                settled = False
                for _ in range(4):
                    if v > hi:
                        v = 2.0 * hi - v
                    elif v < lo:
                        v = 2.0 * lo - v
                    else:
                        settled = True
                        break
                if not settled:
                    return 3, i, ax
                x[i, ax] = v
    return 0, -1, -1


def apply_boundaries(pop: Population, domain: Domain) -> None:
    """Resolve the proposal buffer against the box and commit it.

    Reflecting axes mirror the coordinate about the violated face (repeated
    if a reflection lands outside again); landing exactly on a face is left
    alone.  Periodic axes wrap into [lo, hi) and translate start_anchor by
    the same lattice vector so displacement stays continuous.  Overshoots
    beyond one full domain width abort: they are impossible under any sane
    dt and indicate a parameter error, not something to silently fold back.
    """
    x = pop.next_positions
    status, i, ax = _boundaries_kernel(
        x, pop.start_anchor,
        float(domain.lo[0]), float(domain.lo[1]),
        float(domain.hi[0]), float(domain.hi[1]),
        bool(domain.periodic[0]), bool(domain.periodic[1]))
    if status == 1:
        raise SimulationError(
            f"non-finite coordinate for particle {i}: {x[i]}")
    if status == 2:
        raise SimulationError(
            f"particle {i} overshot axis {ax} by more than one "
            f"domain width (coordinate {x[i, ax]:.6g})")
    if status == 3:
        raise SimulationError(f"reflection failed to settle on axis {ax}")
    pop.positions[:, :] = x
