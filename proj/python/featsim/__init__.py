"""Packet-loss simulation and concealment for split-inference feature tensors."""

from ._featsim import *  # noqa: F401,F403
from ._featsim import Error, __doc__  # noqa: F401
