"""Spiking forecasting networks with multi-timescale conductance neurons.

Generates chaotic Mackey-Glass benchmarks, trains LIF / AdLIF / MTC
feedforward spiking networks end-to-end with backpropagation through time,
and evaluates forecasting fidelity alongside activity-sparsity metrics.
"""

__version__ = "0.1.0"

from .errors import ConfigError, NumericError, SpikecastError, TuningError

__all__ = [
    "ConfigError",
    "NumericError",
    "SpikecastError",
    "TuningError",
    "__version__",
]
