"""Stochastic switching between the two cell species.

Alpha cells convert to Beta at a constant rate r_alpha; Beta cells convert
back at r_beta * c(X), proportional to the chemical concentration at their
own position.  Two schedulers cover the Alpha -> Beta channel: per-step
Bernoulli coin flips, and an exact event-driven clock for the constant-rate
channel.  The concentration-dependent Beta -> Alpha channel is always
handled per step because its rate changes continuously as particles move.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .particles import Population, Species


@dataclass(frozen=True)
class ReactionParams:
    r_alpha: float = 10.0
    r_beta: float = 0.0
    scheduler: str = "fixed"

    def __post_init__(self):
        if self.r_alpha < 0 or self.r_beta < 0:
            raise ValueError("reaction rates must be non-negative")
        if self.scheduler not in ("fixed", "gillespie"):
            raise ValueError(f"unknown reaction scheduler {self.scheduler!r}")


def _flip_to_beta(pop: Population, idx: np.ndarray) -> None:
    pop.species[idx] = Species.BETA


def _flip_to_alpha(pop: Population, idx: np.ndarray) -> None:
    pop.species[idx] = Species.ALPHA
    pop.drift[idx] = 0.0


def fixed_step_reactions(pop: Population, params: ReactionParams, dt: float,
                         rng: np.random.Generator) -> tuple[int, int]:
    """One Bernoulli trial per particle against its species' flip probability.

    Decisions are made against a snapshot of the species labels, so a
    particle flips at most once per step.  A single uniform draw per
    particle keeps the stream layout independent of the current species mix.
    Returns (alpha->beta count, beta->alpha count).
    """
    u = rng.random(len(pop))
    is_alpha = pop.species == Species.ALPHA

    p_ab = params.r_alpha * dt
    if params.r_beta == 0.0:
        # one-way mix: skip the concentration scan, no Beta can flip back
        if p_ab > 1.0 and is_alpha.any():
            warnings.warn(f"flip probability {p_ab:.3g} exceeded 1 and was "
                          "clamped; reduce dt", stacklevel=2)
            p_ab = 1.0
        to_beta = np.flatnonzero(is_alpha & (u < p_ab))
        _flip_to_beta(pop, to_beta)
        return to_beta.size, 0

    is_beta = ~is_alpha
    conc = np.maximum(pop.local_concentration, 0.0)
    p_ba = params.r_beta * conc * dt
    high = max(p_ab if is_alpha.any() else 0.0,
               p_ba[is_beta].max() if is_beta.any() else 0.0)
    if high > 1.0:
        warnings.warn(f"flip probability {high:.3g} exceeded 1 and was "
                      "clamped; reduce dt", stacklevel=2)
        p_ab = min(p_ab, 1.0)
        p_ba = np.minimum(p_ba, 1.0)

    to_beta = np.flatnonzero(is_alpha & (u < p_ab))
    to_alpha = np.flatnonzero(is_beta & (u < p_ba))
    _flip_to_beta(pop, to_beta)
    _flip_to_alpha(pop, to_alpha)
    return to_beta.size, to_alpha.size


def exponential_waiting_time(n_alpha: int, r_alpha: float,
                             rng: np.random.Generator) -> float:
    """Time to the next constant-rate conversion among n_alpha cells.

    Sampled as ln(1/zeta) / (n_alpha * r_alpha) with zeta uniform on [0, 1).
    zeta == 0 maps to +inf by the log; an empty pool or zero rate is +inf
    outright (no event will ever fire).
    """
    total = n_alpha * r_alpha
    if total <= 0.0:
        return np.inf
    zeta = rng.random()
    if zeta == 0.0:
        return np.inf
    return np.log(1.0 / zeta) / total


class AlphaEventClock:
    """Exact event scheduler for the constant-rate Alpha -> Beta channel.

    Holds the absolute time of the next conversion.  Whenever the Alpha
    count changes for any reason, the waiting time is resampled from the
    new total rate; the exponential distribution is memoryless, so
    discarding the old draw leaves the event statistics exact.
    """

    def __init__(self, n_alpha: int, r_alpha: float, now: float,
                 rng: np.random.Generator):
        self.r_alpha = r_alpha
        self.next_time = now + exponential_waiting_time(n_alpha, r_alpha, rng)

    def reschedule(self, n_alpha: int, now: float,
                   rng: np.random.Generator) -> None:
        self.next_time = now + exponential_waiting_time(n_alpha, self.r_alpha,
                                                        rng)

    def advance(self, pop: Population, until: float,
                rng: np.random.Generator) -> int:
        """Fire every conversion scheduled up to time `until`.

        Each event flips one uniformly chosen Alpha and reschedules from the
        event time.  Returns the number of conversions fired.
        """
        fired = 0
        while self.next_time <= until:
            alphas = np.flatnonzero(pop.species == Species.ALPHA)
            if alphas.size == 0:
                self.next_time = np.inf
                break
            pick = alphas[rng.integers(alphas.size)]
            _flip_to_beta(pop, np.array([pick]))
            fired += 1
            self.reschedule(alphas.size - 1, self.next_time, rng)
        return fired


def beta_step_reactions(pop: Population, params: ReactionParams, dt: float,
                        rng: np.random.Generator) -> int:
    """Per-step Bernoulli trials for the Beta -> Alpha channel only.

    Used alongside the event clock, which owns the other channel.  Draws one
    uniform per particle (matching the fixed-step stream layout) and returns
    the number of conversions.
    """
    if params.r_beta == 0.0:
        return 0
    u = rng.random(len(pop))
    is_beta = pop.species == Species.BETA
    conc = np.maximum(pop.local_concentration, 0.0)
    p_ba = params.r_beta * conc * dt
    if is_beta.any() and p_ba[is_beta].max() > 1.0:
        warnings.warn(f"flip probability {p_ba[is_beta].max():.3g} exceeded 1 "
                      "and was clamped; reduce dt", stacklevel=2)
        p_ba = np.minimum(p_ba, 1.0)
    to_alpha = np.flatnonzero(is_beta & (u < p_ba))
    _flip_to_alpha(pop, to_alpha)
    return to_alpha.size
