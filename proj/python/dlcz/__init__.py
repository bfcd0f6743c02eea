"""DLCZ quantum-memory model, Monte Carlo simulator and fitter."""

from ._dlcz import *  # noqa: F401,F403
from ._dlcz import __doc__, tool_version

__version__ = tool_version()
