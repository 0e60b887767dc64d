"""Simulation configuration, the per-step pipeline, and ensemble averaging.

A realisation couples the particle system to the chemical field in a fixed
per-step order: deposit densities, advance the field, refresh gradients and
drifts, sum pair forces, move particles, resolve hard-sphere overlaps,
apply boundaries, then run reactions.  The field moves first so the
particle drift is consistent with the start-of-step density.  Ensembles
average observables pointwise across independently seeded realisations.
"""

from __future__ import annotations

import math
import multiprocessing
import warnings
from dataclasses import asdict, dataclass, field as dataclass_field, fields

import numpy as np

from .coupling import Kernel, deposit_both, refresh_particle_fields
from .field import (Field, FieldParams, Grid, Operators, build_operators,
                    gradient, step_field)
from .motion import (MotionParams, SimulationError, apply_boundaries, em_step,
                     resolve_hard_sphere, soft_forces, tamed_step)
from .particles import Population, Species, init_population
from .reactions import (AlphaEventClock, ReactionParams, beta_step_reactions,
                        fixed_step_reactions)
from .spatial_index import Domain

EXPERIMENTS = ("fig1", "counts", "msd1", "msd2", "msd3", "custom")

# Per-experiment deltas against the default parameter set (which is itself
# the clustering experiment).  counts: species counts only need the reaction
# channel, so interactions and the chemical field are switched off and the
# step made much larger.  msd*: free or constant-drift motion on a periodic
# box under a frozen linear chemical profile; one-sided gradient stencils
# reproduce the linear profile exactly, hence the neumann field closure even
# though the particles wrap.
_PRESETS: dict[str, dict] = {
    "fig1": {},
    "custom": {},
    "counts": dict(interaction="none", d_c=0.0, k_alpha=0.0, k_beta=0.0,
                   dt=1e-4),
    "msd1": dict(n_alpha_0=100, n_beta_0=0, r_alpha=0.0),
    "msd2": dict(n_alpha_0=0, n_beta_0=100, r_alpha=0.0),
    "msd3": dict(n_alpha_0=50, n_beta_0=50, r_alpha=10.0),
}
for _name in ("msd1", "msd2", "msd3"):
    _PRESETS[_name].update(
        periodic=True, interaction="none", d_alpha=1.0, d_beta=1.0,
        r_beta=0.0, d_c=0.0, k_alpha=0.0, k_beta=0.0, gamma=0.0,
        initial_field="linear_x", field_boundary="neumann",
        dt=0.01, t_final=20.0)


@dataclass
class SimConfig:
    """Complete, flat description of one experiment.

    Field defaults reproduce the clustering experiment; the other presets
    are small deltas on top (see `preset`).  Optional fields resolve in
    __post_init__: dt from the pair-resolution rule (0.23 eps)^2 / (4 d_beta),
    bandwidth from the interaction range, field_boundary from the particle
    boundary.
    """

    experiment: str = "custom"
    # population
    n_alpha_0: int = 100
    n_beta_0: int = 100
    sigma: float = 0.1
    domain_size: float = 1.0
    periodic: bool = False
    # motion
    d_alpha: float = 0.1
    d_beta: float = 1.0
    chi: float = 1.0
    epsilon: float = 0.02
    interaction: str = "soft"          # soft | hard | none
    soft_cutoff_factor: float = 5.0
    integrator: str = "em"             # em | tamed
    dt: float | None = None
    t_final: float = 0.05
    # reactions
    r_alpha: float = 10.0
    r_beta: float = 0.0
    scheduler: str = "fixed"           # fixed | gillespie
    # chemical field
    d_c: float = 1.0
    k_alpha: float = 0.1
    k_beta: float = 0.03
    gamma: float = 0.0
    n_c: int = 52
    deposit: str = "gaussian"          # gaussian | cic
    bandwidth: float | None = None
    kernel_cutoff_factor: float = 3.0
    initial_field: str = "zero"        # zero | linear_x
    field_boundary: str = "auto"       # auto | neumann | periodic
    # ensemble and outputs
    samples: int = 1
    seed_base: int = 0
    output_every: int = 20
    hist_bins: int = 26
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.n_alpha_0 < 0 or self.n_beta_0 < 0:
            raise ValueError("initial counts must be non-negative")
        if self.n_alpha_0 + self.n_beta_0 < 1:
            raise ValueError("at least one particle is required")
        if not self.domain_size > 0:
            raise ValueError("domain_size must be positive")
        if self.dt is None:
            if not self.d_beta > 0:
                raise ValueError("dt must be given explicitly when d_beta = 0")
            self.dt = (0.23 * self.epsilon) ** 2 / (4.0 * self.d_beta)
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.bandwidth is None:
            self.bandwidth = self.epsilon
        if self.field_boundary == "auto":
            self.field_boundary = "periodic" if self.periodic else "neumann"
        if self.field_boundary not in ("neumann", "periodic"):
            raise ValueError(f"unknown field_boundary {self.field_boundary!r}")
        if self.initial_field not in ("zero", "linear_x"):
            raise ValueError(f"unknown initial_field {self.initial_field!r}")
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.seed_base < 0:
            raise ValueError("seed_base must be non-negative")
        if self.output_every < 1:
            raise ValueError("output_every must be at least 1")
        if self.hist_bins < 1:
            raise ValueError("hist_bins must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if not self.kernel_cutoff_factor > 0:
            raise ValueError("kernel_cutoff_factor must be positive")
        if not self.soft_cutoff_factor > 0:
            raise ValueError("soft_cutoff_factor must be positive")
        # constructing the component parameter sets validates the rest
        self.motion_params()
        self.reaction_params()
        self.field_params()
        self.kernel()
        self.grid()
        self._warn_explicit_sink()
        if self.scheduler == "fixed" and self.r_alpha * self.dt > 0.1:
            warnings.warn(
                f"per-step flip probability r_alpha dt = "
                f"{self.r_alpha * self.dt:.3g} is coarse; consider a smaller "
                "dt or the event-driven scheduler", stacklevel=2)

    def _warn_explicit_sink(self):
        """The field update treats consumption and decay explicitly; a large
        dt relative to those rates can drive the concentration negative.
        The density bound is the everything-in-one-spot worst case."""
        if self.k_beta == 0.0 and self.gamma == 0.0:
            return
        n_total = self.n_alpha_0 + self.n_beta_0
        if self.deposit == "gaussian":
            rho_max = n_total / (2.0 * math.pi * self.bandwidth ** 2)
        else:
            dx = float(np.prod(self.grid().spacing))
            rho_max = n_total / dx
        if self.dt * (self.gamma + self.k_beta * rho_max) >= 1.0:
            warnings.warn(
                "explicit consumption/decay terms may destabilise the field "
                f"update: dt (gamma + k_beta rho_max) = "
                f"{self.dt * (self.gamma + self.k_beta * rho_max):.3g} >= 1",
                stacklevel=3)

    @classmethod
    def preset(cls, name: str, **overrides) -> "SimConfig":
        """Named experiment parameter set, with optional field overrides."""
        if name not in _PRESETS:
            raise ValueError(f"unknown experiment preset {name!r}")
        params = {**_PRESETS[name], **overrides}
        params.setdefault("experiment", name)
        return cls(**params)

    # ---- derived quantities -------------------------------------------
    @property
    def n_total(self) -> int:
        return self.n_alpha_0 + self.n_beta_0

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def sample_seed(self, sample: int) -> int:
        """Root seed of one realisation: base + N * sample."""
        return self.seed_base + self.n_total * sample

    # ---- component parameter sets -------------------------------------
    def domain(self) -> Domain:
        return Domain.square(self.domain_size, periodic=self.periodic)

    def motion_params(self) -> MotionParams:
        cutoff = (self.soft_cutoff_factor * self.epsilon
                  if self.interaction == "soft" else 0.0)
        return MotionParams(d_alpha=self.d_alpha, d_beta=self.d_beta,
                            chi=self.chi, epsilon=self.epsilon, dt=self.dt,
                            interaction=self.interaction, cutoff=cutoff,
                            integrator=self.integrator)

    def reaction_params(self) -> ReactionParams:
        return ReactionParams(r_alpha=self.r_alpha, r_beta=self.r_beta,
                              scheduler=self.scheduler)

    def field_params(self) -> FieldParams:
        return FieldParams(d_c=self.d_c, k_alpha=self.k_alpha,
                           k_beta=self.k_beta, gamma=self.gamma)

    def kernel(self) -> Kernel:
        return Kernel(kind=self.deposit, h=self.bandwidth,
                      cutoff=self.kernel_cutoff_factor * self.bandwidth)

    def grid(self) -> Grid:
        return Grid.square(self.n_c, self.domain_size, self.field_boundary)

    def as_dict(self) -> dict:
        return asdict(self)


def msd(pop: Population) -> float:
    """Mean over particles of squared displacement from the start anchor."""
    if len(pop) == 0:
        raise ValueError("msd of an empty population")
    d = pop.positions - pop.start_anchor
    return float((d * d).sum(axis=1).mean())


@dataclass
class Observables:
    """Recorded series of one realisation (or ensemble member).

    counts and msd follow the dense cadence (step 0, every output_every
    steps, and the final step); histograms and field snapshots are taken at
    the four quarter times 0, T_f/3, 2 T_f/3, T_f.  Histogram axes are
    [time, y bin, x bin], normalized by the species count at that time.
    """

    times: np.ndarray           # (T,)
    counts: np.ndarray          # (T, 2) = (n_alpha, n_beta)
    msd: np.ndarray             # (T,)
    snapshot_times: np.ndarray  # (4,)
    hist_alpha: np.ndarray      # (4, B, B)
    hist_beta: np.ndarray       # (4, B, B)
    field_c: np.ndarray         # (4, n_c^2)


class Realisation:
    """One seeded run of the configured experiment.

    The root seed is seed_base + N * sample; three sub-streams are split
    from it in a fixed documented order (initialization, motion, reactions)
    so that, for example, two runs differing only in reaction rates share
    identical Brownian paths.
    """

    def __init__(self, config: SimConfig, sample: int):
        if sample < 0:
            raise ValueError("sample must be non-negative")
        self.config = config
        self.sample = sample
        self.seed = config.sample_seed(sample)
        streams = np.random.SeedSequence(self.seed).spawn(3)
        self.rng_init = np.random.default_rng(streams[0])
        self.rng_motion = np.random.default_rng(streams[1])
        self.rng_react = np.random.default_rng(streams[2])

        self.domain = config.domain()
        self.motion = config.motion_params()
        self.reaction = config.reaction_params()
        self.field_params = config.field_params()
        self.kernel = config.kernel()
        self.grid = config.grid()
        self.dt = config.dt
        self.n_steps = config.n_steps
        self.step_index = 0

        self.pop = init_population(config.n_alpha_0, config.n_beta_0,
                                   config.sigma, self.domain, self.rng_init)
        self._zero_force = np.zeros_like(self.pop.positions)

        # field state; a frozen field (no diffusion, sources, or decay)
        # never changes, so its gradient is computed once here
        fp = self.field_params
        self.field_active = (fp.d_c > 0 or fp.k_alpha > 0 or fp.k_beta > 0
                             or fp.gamma > 0)
        self.field = Field.zeros(self.grid)
        if config.initial_field == "linear_x":
            self.field.c = self.grid.node_positions()[:, 0].copy()
        self.ops = build_operators(self.grid, fp, self.dt)
        gradient(self.field, self.ops)
        self.refresh_active = self.field_active or config.initial_field != "zero"
        if self.refresh_active:
            refresh_particle_fields(self.pop, self.field, self.grid,
                                    self.motion.chi)

        self.reactions_active = (self.reaction.r_alpha > 0
                                 or self.reaction.r_beta > 0)
        self.clock = None
        if self.reactions_active and self.reaction.scheduler == "gillespie":
            self.clock = AlphaEventClock(self.pop.n_alpha,
                                         self.reaction.r_alpha, 0.0,
                                         self.rng_react)

        self._init_recording()

    # ---- recording -----------------------------------------------------
    def _init_recording(self):
        n, every = self.n_steps, self.config.output_every
        flags = np.zeros(n + 1, dtype=bool)
        flags[0] = True
        flags[::every] = True
        flags[n] = True
        self._record_flags = flags
        self._snapshot_steps = [round(k * n / 3) for k in range(4)]
        self._times: list[float] = []
        self._counts: list[tuple[int, int]] = []
        self._msd: list[float] = []
        b = self.config.hist_bins
        self._hist_alpha = np.zeros((4, b, b))
        self._hist_beta = np.zeros((4, b, b))
        self._field_c = np.zeros((4, self.grid.n_c ** 2))
        self._observe(0)

    def _species_hist(self, species: Species) -> np.ndarray:
        pos = self.pop.positions[self.pop.species == species]
        h, _, _ = np.histogram2d(
            pos[:, 0], pos[:, 1], bins=self.config.hist_bins,
            range=[[self.domain.lo[0], self.domain.hi[0]],
                   [self.domain.lo[1], self.domain.hi[1]]])
        h = h.T  # rows indexed by y bin, columns by x bin
        return h / pos.shape[0] if pos.shape[0] else h

    def _observe(self, step: int) -> None:
        if self._record_flags[step]:
            self._times.append(step * self.dt)
            self._counts.append((self.pop.n_alpha, self.pop.n_beta))
            self._msd.append(msd(self.pop))
        for k in range(4):
            if self._snapshot_steps[k] == step:
                self._hist_alpha[k] = self._species_hist(Species.ALPHA)
                self._hist_beta[k] = self._species_hist(Species.BETA)
                self._field_c[k] = self.field.c

    # ---- stepping ------------------------------------------------------
    @property
    def time(self) -> float:
        return self.step_index * self.dt

    def step(self) -> None:
        """Advance the whole system by dt (fixed sub-stage order)."""
        s = self.step_index
        try:
            self._step_inner()
        except (SimulationError, FloatingPointError, ValueError) as exc:
            raise SimulationError(f"step {s}: {exc}") from exc
        self.step_index = s + 1
        self._observe(self.step_index)

    def _step_inner(self) -> None:
        pop, motion, dt = self.pop, self.motion, self.dt
        if self.field_active:
            self.field.rho_alpha, self.field.rho_beta = deposit_both(
                pop, self.grid, self.kernel)
            step_field(self.field, self.ops, self.field_params, dt)
            gradient(self.field, self.ops)
        if self.refresh_active:
            refresh_particle_fields(pop, self.field, self.grid, motion.chi)
        force = (soft_forces(pop, self.domain, motion)
                 if motion.interaction == "soft" else self._zero_force)
        dcoef = motion.diffusion_of(pop.species)
        stepper = tamed_step if motion.integrator == "tamed" else em_step
        pop.next_positions[:, :] = stepper(pop.positions, dcoef, pop.drift,
                                           force, dt, self.rng_motion)
        if motion.interaction == "hard":
            resolve_hard_sphere(pop, self.domain, motion)
        apply_boundaries(pop, self.domain)
        self._react((self.step_index + 1) * dt)

    def _react(self, now: float) -> None:
        if not self.reactions_active:
            return
        if self.reaction.scheduler == "fixed":
            fixed_step_reactions(self.pop, self.reaction, self.dt,
                                 self.rng_react)
            return
        self.clock.advance(self.pop, now, self.rng_react)
        flipped = beta_step_reactions(self.pop, self.reaction, self.dt,
                                      self.rng_react)
        if flipped:
            self.clock.reschedule(self.pop.n_alpha, now, self.rng_react)

    def run(self) -> Observables:
        for _ in range(self.n_steps):
            self.step()
        return Observables(
            times=np.array(self._times),
            counts=np.array(self._counts, dtype=np.int64),
            msd=np.array(self._msd),
            snapshot_times=np.array(self._snapshot_steps, dtype=float) * self.dt,
            hist_alpha=self._hist_alpha,
            hist_beta=self._hist_beta,
            field_c=self._field_c)


def run_realisation(config: SimConfig, sample: int) -> Observables:
    """Integrate sample `sample` of the configured experiment to T_f."""
    try:
        return Realisation(config, sample).run()
    except SimulationError as exc:
        raise SimulationError(f"sample {sample}: {exc}") from exc


@dataclass
class EnsembleResult:
    """Pointwise mean and standard error of Observables across samples.

    Standard errors use the sample standard deviation (ddof = 1) divided by
    sqrt(S); a single-sample ensemble reports zero standard error.
    """

    times: np.ndarray
    counts_mean: np.ndarray      # (T, 2)
    counts_se: np.ndarray
    msd_mean: np.ndarray         # (T,)
    msd_se: np.ndarray
    snapshot_times: np.ndarray   # (4,)
    hist_alpha_mean: np.ndarray  # (4, B, B)
    hist_alpha_se: np.ndarray
    hist_beta_mean: np.ndarray
    hist_beta_se: np.ndarray
    field_mean: np.ndarray       # (4, n_c^2)
    field_se: np.ndarray
    samples: int
    seeds: list[int]


def _mean_se(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = stack.mean(axis=0)
    s = stack.shape[0]
    if s < 2:
        return mean, np.zeros_like(mean)
    return mean, stack.std(axis=0, ddof=1) / math.sqrt(s)


def run_ensemble(config: SimConfig) -> EnsembleResult:
    """Run samples 0..S-1 and average their observables pointwise.

    Results are reduced in sample order whatever the execution order, so a
    multi-worker run is bit-identical to a serial one.
    """
    s_count = config.samples
    jobs = [(config, s) for s in range(s_count)]
    if config.threads > 1:
        with multiprocessing.Pool(config.threads) as pool:
            all_obs = pool.starmap(run_realisation, jobs)
    else:
        all_obs = [run_realisation(config, s) for s in range(s_count)]

    counts_mean, counts_se = _mean_se(
        np.stack([o.counts for o in all_obs]).astype(float))
    msd_mean, msd_se = _mean_se(np.stack([o.msd for o in all_obs]))
    ha_mean, ha_se = _mean_se(np.stack([o.hist_alpha for o in all_obs]))
    hb_mean, hb_se = _mean_se(np.stack([o.hist_beta for o in all_obs]))
    f_mean, f_se = _mean_se(np.stack([o.field_c for o in all_obs]))
    return EnsembleResult(
        times=all_obs[0].times,
        counts_mean=counts_mean, counts_se=counts_se,
        msd_mean=msd_mean, msd_se=msd_se,
        snapshot_times=all_obs[0].snapshot_times,
        hist_alpha_mean=ha_mean, hist_alpha_se=ha_se,
        hist_beta_mean=hb_mean, hist_beta_se=hb_se,
        field_mean=f_mean, field_se=f_se,
        samples=s_count,
        seeds=[config.sample_seed(s) for s in range(s_count)])
