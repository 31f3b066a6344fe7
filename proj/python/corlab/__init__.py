"""Corridor decoherence laboratory.

Thin wrapper around the compiled extension; everything public lives there.
"""

from ._corlab import *  # noqa: F401,F403
from ._corlab import __doc__, __version__  # noqa: F401
