"""Particle state for the two cell species.

Storage is struct-of-arrays: one flat array per attribute, indexed by
insertion order.  Row i always refers to the same particle (ids equal the
initial indices and never change); species conversions edit the species
array in place without reordering anything.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .spatial_index import Domain


class Species(IntEnum):
    ALPHA = 0
    BETA = 1


@dataclass(frozen=True)
class Particle:
    """Read-only snapshot of one particle, for inspection and tests."""
    id: int
    position: np.ndarray
    next_position: np.ndarray
    species: Species
    drift: np.ndarray
    local_concentration: float
    start_anchor: np.ndarray


@dataclass
class Population:
    ids: np.ndarray                  # (N,) int64, stable
    positions: np.ndarray            # (N, 2)
    next_positions: np.ndarray       # (N, 2) proposal buffer
    species: np.ndarray              # (N,) uint8 Species values
    drift: np.ndarray                # (N, 2), zero for every Alpha
    local_concentration: np.ndarray  # (N,)
    start_anchor: np.ndarray         # (N, 2) unwrapped start, follows wraps

    def __len__(self) -> int:
        return self.ids.shape[0]

    @property
    def n_alpha(self) -> int:
        return int(np.count_nonzero(self.species == Species.ALPHA))

    @property
    def n_beta(self) -> int:
        return int(np.count_nonzero(self.species == Species.BETA))

    def particle(self, i: int) -> Particle:
        return Particle(
            id=int(self.ids[i]),
            position=self.positions[i].copy(),
            next_position=self.next_positions[i].copy(),
            species=Species(self.species[i]),
            drift=self.drift[i].copy(),
            local_concentration=float(self.local_concentration[i]),
            start_anchor=self.start_anchor[i].copy(),
        )


def species_counts(pop: Population) -> tuple[int, int]:
    """(n_alpha, n_beta); always sums to len(pop)."""
    n_a = pop.n_alpha
    return n_a, len(pop) - n_a


def init_population(n_alpha: int, n_beta: int, sigma: float,
                    domain: Domain, rng: np.random.Generator) -> Population:
    """Draw the initial particle state.

    Alpha particles are normal around the domain centre with standard
    deviation sigma * L per axis, redrawn until inside the box; Beta
    particles are uniform over the box.  Draw order (alphas first, then
    betas) is part of the reproducibility contract.  sigma is a fraction of
    the domain width; sigma = 0 degenerates to a point mass at the centre.
    """
    n_alpha, n_beta = int(n_alpha), int(n_beta)
    if n_alpha < 0 or n_beta < 0:
        raise ValueError("species counts must be non-negative")
    if n_alpha + n_beta == 0:
        raise ValueError("population must contain at least one particle")
    if not np.isfinite(sigma) or sigma < 0:
        raise ValueError("sigma must be a non-negative finite fraction")

    centre = 0.5 * (domain.lo + domain.hi)
    scale = sigma * domain.size

    pos_alpha = np.empty((n_alpha, 2))
    pending = np.arange(n_alpha)
    while pending.size:
        pos_alpha[pending] = centre + scale * rng.standard_normal((pending.size, 2))
        pending = pending[~domain.contains(pos_alpha[pending])]

    pos_beta = domain.lo + domain.size * rng.random((n_beta, 2))

    n = n_alpha + n_beta
    positions = np.vstack([pos_alpha, pos_beta]) if n else np.empty((0, 2))
    species = np.concatenate([
        np.full(n_alpha, Species.ALPHA, dtype=np.uint8),
        np.full(n_beta, Species.BETA, dtype=np.uint8),
    ])
    return Population(
        ids=np.arange(n, dtype=np.int64),
        positions=positions,
        next_positions=positions.copy(),
        species=species,
        drift=np.zeros((n, 2)),
        local_concentration=np.zeros(n),
        start_anchor=positions.copy(),
    )
