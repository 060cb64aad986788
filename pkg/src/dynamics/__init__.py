"""
Euler-Maruyama dynamics of the rank-based particle system
"""

from .dynamics_sim import (
    ParticleState,
    SimulationPlan,
    Trajectory,
    drift_vector,
    project_to_M,
    ranks,
    simulate_path,
    simulate_replicas,
    simulate_stationary,
    step_euler,
)

__all__ = [
    'ParticleState',
    'SimulationPlan',
    'Trajectory',
    'drift_vector',
    'project_to_M',
    'ranks',
    'simulate_path',
    'simulate_replicas',
    'simulate_stationary',
    'step_euler',
]
