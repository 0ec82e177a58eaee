"""Contention- and traffic-aware throughput prediction for co-located
SmartNIC network functions, with a deterministic contention simulator as
the ground-truth oracle."""

__version__ = "0.1.0"

from .core import (
    DEFAULT_TRAFFIC,
    CounterSnapshot,
    ExecutionPattern,
    InvalidInputError,
    ResourceKind,
    ThroughputSample,
    TrafficProfile,
)
from .simulator import ContentionScenario, SimulationResult, run_scenario
from .predictor import ContentionDescriptor, NfPredictor, build

__all__ = [
    "__version__",
    "DEFAULT_TRAFFIC",
    "CounterSnapshot",
    "ExecutionPattern",
    "InvalidInputError",
    "ResourceKind",
    "ThroughputSample",
    "TrafficProfile",
    "ContentionScenario",
    "SimulationResult",
    "run_scenario",
    "ContentionDescriptor",
    "NfPredictor",
    "build",
]
