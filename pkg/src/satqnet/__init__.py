"""satqnet: LEO constellation entanglement-distribution simulator.

Orbital propagation, stochastic free-space optical channels, adaptive
multi-metric link costs, constrained shortest-path routing with
failover, and fidelity/trust recovery, driven by a deterministic
Monte Carlo harness.
"""

from .channel import ChannelParams, LinkSample, LossModel
from .config import ScenarioConfig, default_config
from .link_state import DispersionStats, LinkState
from .metrics import AggregateStats, PathMetrics
from .orbital import ConstellationState, OrbitElements, VisibilityGraph
from .routing import RoutePair, WeightVector

__version__ = "0.1.0"

__all__ = [
    "AggregateStats",
    "ChannelParams",
    "ConstellationState",
    "DispersionStats",
    "LinkSample",
    "LinkState",
    "LossModel",
    "OrbitElements",
    "PathMetrics",
    "RoutePair",
    "ScenarioConfig",
    "VisibilityGraph",
    "WeightVector",
    "default_config",
    "__version__",
]
