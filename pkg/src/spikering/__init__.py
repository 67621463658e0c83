"""Event-driven simulation and fixed-point analysis of pulse-coupled neurons on a circle.

Each neuron's phase drifts at unit rate on ``[0, 1)``.  When it reaches 1 it
fires, resets to 0 and moves every other neuron from ``x`` to
``W(x) = x + f(x)``.  Submodules:

``influence``  the families of ``f`` and their admissibility checks
``dynamics``   the avalanche engine and the discrete maps in ``y = 1 - x``
``solvers``    stationary configurations of isolated neurons
``analysis``   terminal-state verdicts, convergence rates, limit measures
``scenario``   JSON scenarios, seeding, sweeps and output files
"""
from . import analysis, dynamics, influence, scenario, solvers
from .dynamics import PhaseConfiguration, RunLimits, Tolerances, Trajectory, run, step
from .errors import (
    BracketError,
    InternalInvariantError,
    InvalidSpecError,
    ScenarioError,
    SpikeRingError,
    UnsupportedOperationError,
    UsageError,
)
from .influence import InfluenceSpec
from .solvers import FixedPointResult, fixed_point

__version__ = "0.1.0"

__all__ = [
    "BracketError",
    "FixedPointResult",
    "InfluenceSpec",
    "InternalInvariantError",
    "InvalidSpecError",
    "PhaseConfiguration",
    "RunLimits",
    "ScenarioError",
    "SpikeRingError",
    "Tolerances",
    "Trajectory",
    "UnsupportedOperationError",
    "UsageError",
    "analysis",
    "dynamics",
    "fixed_point",
    "influence",
    "run",
    "scenario",
    "solvers",
    "step",
]
