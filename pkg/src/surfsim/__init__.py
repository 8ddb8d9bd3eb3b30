"""Slotted-time simulator of data dissemination in multi-hop cognitive radio networks.

A network of cognitive radio (CR) nodes floods messages over multiple channels
while primary radios (PR) hold absolute priority on each channel. Four channel
selection strategies are available: SURF (occupancy- and contention-aware),
RD (uniform random), SB (greedy essential channel set) and CA (centrally
assigned channel sets).
"""

__version__ = "0.1.0"

from .config import ScenarioConfig, parse_and_validate
from .engine import run_dissemination
from .metrics import MetricsReport, compute_report, aggregate_runs, contention_curve

__all__ = [
    "ScenarioConfig",
    "parse_and_validate",
    "run_dissemination",
    "MetricsReport",
    "compute_report",
    "aggregate_runs",
    "contention_curve",
    "__version__",
]
