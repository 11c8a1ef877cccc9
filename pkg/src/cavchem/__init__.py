"""Cavity-controlled photoassociation: master-equation simulator and closed-form toolkit."""

from . import analytics, collective, lindblad, optimizer, single_pair, validation
from .analytics import SystemParams, mhz, to_mhz

__all__ = [
    "analytics",
    "collective",
    "lindblad",
    "optimizer",
    "single_pair",
    "validation",
    "SystemParams",
    "mhz",
    "to_mhz",
]
__version__ = "0.1.0"
