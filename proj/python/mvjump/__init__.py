"""Particle, Fokker-Planck and HJB-verification toolkit for law-dependent jump diffusions."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
