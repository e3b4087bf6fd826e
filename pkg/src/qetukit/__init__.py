"""Toolkit for state preparation through eigenvalue transformations of e^{-i tau H}."""

__version__ = "0.1.0"

from . import cheb, models, qsp, sim, gsprep, wavepacket  # noqa: E402,F401
