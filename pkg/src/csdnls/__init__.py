"""Spectral simulator and integrability checks for the Calogero-Sutherland DNLS equation on the torus."""
from .hardy import *  # noqa: F401,F403
from .lax import *  # noqa: F401,F403
from .propagator import *  # noqa: F401,F403
from .diagnostics import *  # noqa: F401,F403

__version__ = "0.1.0"
