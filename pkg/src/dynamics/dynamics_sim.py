"""
Particle Dynamics Module

Euler-Maruyama simulation of the rank-based particle system

    dX_i = b_n(rank of X_i) dt + sigma dW_i

and of its projection onto the zero-sum hyperplane M_n. Ranks are resolved
with a stable sort, so ties go to the lower index.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional

import numpy as np

from ..drift.drift_model import DriftModel, validate_assumption_E
from ..errors import ConfigurationError
from ..numerics.estimators import effective_sample_size
from ..transport.empirical_sample import EmpiricalSample, SampleProvenance

logger = logging.getLogger(__name__)

MAX_RETAINED = 100_000
NOISE_BLOCK = 4096
PROGRESS_EVERY = 10


@dataclass
class ParticleState:
    """
    Positions of n particles at a given time
    """

    positions: np.ndarray
    time: float
    model: DriftModel

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 1 or len(self.positions) < 2:
            raise ValueError(f"need at least two particle positions, got shape {self.positions.shape}")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("particle positions must be finite")
        if self.time < 0:
            raise ValueError(f"time must be nonnegative, got {self.time}")

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def sigma(self) -> float:
        return self.model.sigma


@dataclass(frozen=True)
class SimulationPlan:
    """
    Step size, horizon, burn-in time and thinning of a stationary run.

    burn_in defaults to 10% of the horizon; thinning defaults to the smallest
    stride that retains at most 1e5 states.
    """

    h: float
    horizon: float
    burn_in: Optional[float] = None
    thinning: Optional[int] = None
    seed: int = 0
    replicas: int = 1

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigurationError(f"step h must be positive, got {self.h}", location='simulate.h')
        if self.h > self.horizon:
            raise ConfigurationError(f"step h={self.h} exceeds the horizon {self.horizon}",
                                     location='simulate.horizon')
        if self.burn_in is not None and not 0 <= self.burn_in < self.horizon:
            raise ConfigurationError(f"burn_in must lie in [0, horizon), got {self.burn_in}",
                                     location='simulate.burn_in')
        if self.thinning is not None and self.thinning < 1:
            raise ConfigurationError(f"thinning must be at least 1, got {self.thinning}",
                                     location='simulate.thinning')
        if self.replicas < 1:
            raise ConfigurationError(f"replicas must be at least 1, got {self.replicas}",
                                     location='simulate.replicas')

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.h))

    @property
    def burn_in_steps(self) -> int:
        burn_in = 0.1 * self.horizon if self.burn_in is None else self.burn_in
        return int(round(burn_in / self.h))

    @property
    def thinning_steps(self) -> int:
        if self.thinning is not None:
            return self.thinning
        return max(1, math.ceil((self.steps - self.burn_in_steps) / MAX_RETAINED))

    def halved(self) -> 'SimulationPlan':
        """
        Same plan with half the step and a matching thinning stride
        """
        return replace(self, h=0.5 * self.h, thinning=2 * self.thinning_steps)


class Trajectory(NamedTuple):
    times: np.ndarray
    states: np.ndarray


def ranks(positions: np.ndarray) -> np.ndarray:
    """
    Rank of each particle, #{j : X_j <= X_i} with ties broken by index
    """
    order = np.argsort(positions, kind='stable')
    result = np.empty(len(positions), dtype=int)
    result[order] = np.arange(1, len(positions) + 1)
    return result


def drift_vector(model: DriftModel, positions, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Rank-based drift b_n(rank_i) of every particle

    Args:
        model (DriftModel): Drift model
        positions (array-like): Particle positions
        weights (Optional[np.ndarray]): Precomputed b_n(1..n)

    Returns:
        np.ndarray: Drift of each particle
    """
    positions = np.asarray(positions, dtype=float)
    if weights is None:
        weights = model.rank_weights(len(positions))
    drift = np.empty(len(positions))
    drift[np.argsort(positions, kind='stable')] = weights
    return drift


def step_euler(state: ParticleState, h: float, rng: np.random.Generator,
               weights: Optional[np.ndarray] = None) -> ParticleState:
    """
    One Euler-Maruyama step X + h b_n(ranks) + sigma sqrt(h) G

    Args:
        state (ParticleState): Current state
        h (float): Step size, nonnegative
        rng (np.random.Generator): Source of the Gaussian increments
        weights (Optional[np.ndarray]): Precomputed b_n(1..n)

    Returns:
        ParticleState: State at time + h
    """
    if h < 0:
        raise ValueError(f"step h must be nonnegative, got {h}")
    if h == 0:
        return ParticleState(state.positions.copy(), state.time, state.model)
    noise = np.asarray(rng.standard_normal(state.n), dtype=float)
    drift = drift_vector(state.model, state.positions, weights)
    positions = state.positions + h * drift + state.sigma * math.sqrt(h) * noise
    return ParticleState(positions, state.time + h, state.model)


def project_to_M(state: ParticleState) -> ParticleState:
    """
    Subtract the centre of mass so the positions sum to zero
    """
    return ParticleState(state.positions - state.positions.mean(), state.time, state.model)


def simulate_path(model: DriftModel, initial, h: float, noise: np.ndarray,
                  project: bool = True) -> Trajectory:
    """
    Trajectory driven by explicit standard normal increments

    Args:
        model (DriftModel): Drift model
        initial (array-like): Initial positions
        h (float): Step size
        noise (np.ndarray): Increments of shape (steps, n)
        project (bool): Project onto M_n initially and after every step

    Returns:
        Trajectory: Times and the states after each step, initial state first
    """
    positions = np.array(initial, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if noise.ndim != 2 or noise.shape[1] != len(positions):
        raise ValueError(f"noise must have shape (steps, {len(positions)}), got {noise.shape}")
    weights = model.rank_weights(len(positions))
    scale = model.sigma * math.sqrt(h)

    states = np.empty((len(noise) + 1, len(positions)))
    if project:
        positions -= positions.mean()
    states[0] = positions
    drift = np.empty(len(positions))
    for step, increment in enumerate(noise, start=1):
        drift[np.argsort(positions, kind='stable')] = weights
        positions = positions + h * drift + scale * increment
        if project:
            positions -= positions.mean()
        states[step] = positions
    return Trajectory(h * np.arange(len(noise) + 1), states)


def simulate_stationary(model: DriftModel, n: int, plan: SimulationPlan,
                        rng: Optional[np.random.Generator] = None) -> EmpiricalSample:
    """
    Run the projected system from the origin and keep thinned states after burn-in

    Args:
        model (DriftModel): Drift model satisfying the equilibrium assumption
        n (int): Number of particles, at least 2
        plan (SimulationPlan): Step, horizon, burn-in and thinning
        rng (Optional[np.random.Generator]): Generator; seeded from plan.seed when omitted

    Returns:
        EmpiricalSample: Retained states with their times and an effective sample size
    """
    if n < 2:
        raise ConfigurationError(f"n must be at least 2, got {n}", location='simulate.n')
    report = validate_assumption_E(model)
    if not report.passed:
        raise ConfigurationError(f"drift model fails Assumption (E): {report.message}", location='model')
    if rng is None:
        rng = np.random.default_rng(plan.seed)

    steps, burn, stride = plan.steps, plan.burn_in_steps, plan.thinning_steps
    kept = (steps - burn) // stride
    if kept < 1:
        raise ConfigurationError(f"plan retains no state (steps={steps}, burn-in={burn}, thinning={stride})",
                                 location='simulate')

    weights = model.rank_weights(n)
    scale = model.sigma * math.sqrt(plan.h)
    positions = np.zeros(n)
    drift = np.empty(n)
    retained = np.empty((kept, n))
    times = np.empty(kept)

    logger.info(f"Simulating n={n}, h={plan.h}, T={plan.horizon}: {steps} steps, keeping {kept}")
    step, slot, report_at = 0, 0, max(1, steps // PROGRESS_EVERY)
    while step < steps:
        block = rng.standard_normal((min(NOISE_BLOCK, steps - step), n))
        for increment in block:
            drift[np.argsort(positions, kind='stable')] = weights
            positions += plan.h * drift + scale * increment
            positions -= positions.mean()
            step += 1
            if step > burn and (step - burn) % stride == 0 and slot < kept:
                retained[slot] = positions
                times[slot] = step * plan.h
                slot += 1
            if step % report_at == 0:
                logger.debug(f"step {step}/{steps}")

    # a scale statistic mixes slowest, so its autocorrelation bounds the useful sample size
    ess = effective_sample_size(np.mean(retained * retained, axis=1))
    logger.info(f"Retained {kept} states, effective sample size {ess:.0f}")
    return EmpiricalSample(retained, SampleProvenance('euler-maruyama', plan.seed, n, kept),
                           effective_sample_size=ess, times=times)


def _replica(args) -> EmpiricalSample:
    model, n, plan, seed_sequence = args
    return simulate_stationary(model, n, plan, np.random.default_rng(seed_sequence))


def simulate_replicas(model: DriftModel, n: int, plan: SimulationPlan,
                      workers: int = 1) -> List[EmpiricalSample]:
    """
    Independent replicas with streams spawned from the plan seed, in replica order

    Args:
        model (DriftModel): Drift model
        n (int): Number of particles
        plan (SimulationPlan): Plan shared by every replica
        workers (int): Worker processes; 1 runs in-process

    Returns:
        List[EmpiricalSample]: One sample per replica, ordered by replica index
    """
    streams = np.random.SeedSequence(plan.seed).spawn(plan.replicas)
    jobs = [(model, n, plan, stream) for stream in streams]
    if workers <= 1 or plan.replicas == 1:
        return [_replica(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_replica, jobs))
