"""Outage and data-rate analysis for leader-follower LEO satellite
clusters: closed-form estimators, envelopes, a seeded simulator that
validates them, and a leader power-budget case study."""

from ._backend import BACKEND, NUMBA_ENABLED
from .analysis import PerformanceEstimate, ScenarioParams
from .channel import LinkBudget, ShadowedRicianParams
from .config import DEFAULTS, default_scenario, load_config
from .geometry import (ConstellationConfig, MixedAngularDistribution,
                       SphericalDirection)
from .montecarlo import SimulationPlan, TrialRecord
from ._rng import SampleStream

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "NUMBA_ENABLED", "PerformanceEstimate", "ScenarioParams",
    "LinkBudget", "ShadowedRicianParams", "DEFAULTS", "default_scenario",
    "load_config", "ConstellationConfig", "MixedAngularDistribution",
    "SphericalDirection", "SimulationPlan", "TrialRecord", "SampleStream",
    "__version__",
]
