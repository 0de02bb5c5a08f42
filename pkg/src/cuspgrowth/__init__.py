"""Orbit growth, Poincare series and shadow audits for groups with cusps.

Two concrete backends are provided: the modular group acting on the upper
half-plane, and cusped Cayley graphs of free products of cyclic groups.
"""

from .errors import (CuspGrowthError, FitError, HorizonError, SpecError, TruncationError,
                     UnsupportedPresentationError, UsageError)
from .models import GroupSpec, build_model, load_spec

__version__ = "0.1.0"

__all__ = [
    "CuspGrowthError", "FitError", "HorizonError", "SpecError", "TruncationError",
    "UnsupportedPresentationError", "UsageError", "GroupSpec", "build_model", "load_spec",
]
