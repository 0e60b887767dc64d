"""Hybrid particle/continuum simulation of chemotactic cell populations.

Two Brownian cell species move in a square box: Alpha cells secrete a
chemical and diffuse slowly, Beta cells consume it and climb its gradient.
The chemical lives on a finite-difference grid coupled to the particles by
kernel density deposits and bilinear interpolation; cells switch species
stochastically.  The engine runs seeded realisations and averages
observables (species counts, position histograms, mean squared
displacement, field snapshots) over ensembles.
"""

__version__ = "0.1.0"

from .coupling import (Kernel, deposit, deposit_both, deposit_gather,
                       field_at, interpolate, refresh_particle_fields)
from .engine import (EXPERIMENTS, EnsembleResult, Observables, Realisation,
                     SimConfig, msd, run_ensemble, run_realisation)
from .field import (Field, FieldParams, Grid, Operators, build_operators,
                    discrete_mass, gradient, step_field)
from .motion import (MotionParams, SimulationError, accumulate_forces,
                     apply_boundaries, em_step, pair_force,
                     resolve_hard_sphere, soft_forces, tamed_step)
from .particles import Particle, Population, Species, init_population, species_counts
from .reactions import (AlphaEventClock, ReactionParams, beta_step_reactions,
                        exponential_waiting_time, fixed_step_reactions)
from .spatial_index import CellIndex, Domain, Neighbor

__all__ = [
    "__version__",
    "AlphaEventClock", "CellIndex", "Domain", "EnsembleResult", "EXPERIMENTS",
    "Field", "FieldParams", "Grid", "Kernel", "MotionParams", "Neighbor",
    "Observables", "Operators", "Particle", "Population", "Realisation",
    "ReactionParams", "SimConfig", "SimulationError", "Species",
    "accumulate_forces", "apply_boundaries", "beta_step_reactions",
    "build_operators", "deposit", "deposit_both", "deposit_gather",
    "discrete_mass", "em_step",
    "exponential_waiting_time", "field_at", "fixed_step_reactions",
    "gradient", "init_population", "interpolate", "msd", "pair_force",
    "refresh_particle_fields", "resolve_hard_sphere", "run_ensemble",
    "run_realisation", "soft_forces", "species_counts", "step_field",
    "tamed_step",
]
