"""Expected latency and cost of distributed jobs under delayed redundancy.

Closed forms for replicated and erasure-coded redundancy, a Monte Carlo
simulator to check them, and sweeps that trace cost-vs-latency tradeoffs.
"""

__version__ = "0.1.0"

from .analytic import Metrics, analytic_metrics, zero_delay_metrics
from .dists import Exp, Pareto, RngState, SExp
from .errors import ConfigError, DomainError, UnsupportedCombination
from .model import Coded, Replicated, SystemConfig
from .sim import SimEstimate, estimate, run_once

__all__ = [
    "Coded",
    "ConfigError",
    "DomainError",
    "Exp",
    "Metrics",
    "Pareto",
    "Replicated",
    "RngState",
    "SExp",
    "SimEstimate",
    "SystemConfig",
    "UnsupportedCombination",
    "analytic_metrics",
    "estimate",
    "run_once",
    "zero_delay_metrics",
]
