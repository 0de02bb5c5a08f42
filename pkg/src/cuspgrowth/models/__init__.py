"""Concrete cusp-uniform actions: the modular group on the half-plane, and cusped
Cayley graphs of free products."""

from __future__ import annotations

from ..errors import SpecError
from .cusped import CuspedCayleyModel
from .groupspec import CUSPED_CAYLEY, HALF_PLANE, GroupSpec, load_spec, spec_from_dict
from .half_plane import HalfPlaneModel
from .horoballs import HoroballRef

__all__ = [
    "GroupSpec", "HoroballRef", "HalfPlaneModel", "CuspedCayleyModel",
    "build_half_plane", "build_cusped_cayley", "build_model", "load_spec",
    "spec_from_dict", "canonical", "apply", "HALF_PLANE", "CUSPED_CAYLEY",
]


def build_half_plane(spec: GroupSpec) -> HalfPlaneModel:
    return HalfPlaneModel(spec)


def build_cusped_cayley(spec: GroupSpec) -> CuspedCayleyModel:
    return CuspedCayleyModel(spec)


def build_model(spec: GroupSpec):
    if spec.model == HALF_PLANE:
        return build_half_plane(spec)
    if spec.model == CUSPED_CAYLEY:
        return build_cusped_cayley(spec)
    raise SpecError(f"unknown model kind {spec.model!r}")


def canonical(model, raw):
    """Unique representative of a group element in ``model``'s group."""
    return model.canonical(raw)


def apply(model, g, x):
    """The action ``g . x``."""
    return model.apply(g, x)
