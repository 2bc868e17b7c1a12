"""Orbital beta processes, Gaussian beta corners and multivariate Bessel functions."""
from __future__ import annotations

__version__ = "0.1.0"
