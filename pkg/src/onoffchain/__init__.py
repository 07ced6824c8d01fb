"""Simulation and analytic verification toolkit for linear on-off
signal/recovery chains: a seed-deterministic event simulator, the interval
transform algebra with exact equal-rate means, truncation diagnostics for
the unbounded chain, and an exhaustive refuter for self-blocking cascades.
"""

__version__ = "0.1.0"

from . import analytic, core, frozen, limit, sim  # noqa: F401
