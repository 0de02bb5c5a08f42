"""Backend-agnostic metric layer.

Points are small frozen dataclasses tagged by backend.  The operations here take
the model as their first argument (graph distances need the built graph) and
dispatch to the backend; the generic algorithms (Gromov products, thin-triangle
defects, contraction checks) only use ``distance``, ``geodesic`` and
``point_along``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError


@dataclass(frozen=True, order=True)
class HalfPlanePoint:
    re: float
    im: float

    def __post_init__(self):
        if not self.im > 0:
            raise UsageError(f"half-plane point needs im > 0, got {self.im}")

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    @classmethod
    def of(cls, z) -> "HalfPlanePoint":
        z = complex(z)
        return cls(z.real, z.imag)


@dataclass(frozen=True, order=True)
class VertexPoint:
    """Vertex ``(g, depth)`` of a cusped Cayley graph.

    ``depth == 0`` is the Cayley vertex ``g`` (``cls`` is -1); ``depth >= 1`` is
    the horoball vertex over ``g`` in the horoball of parabolic class ``cls``.
    """

    word: tuple
    depth: int = 0
    cls: int = -1

    def sort_key(self):
        return (len(self.word), self.word, self.depth, self.cls)


@dataclass(frozen=True)
class PathSample:
    points: tuple
    lengths: tuple
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise UsageError("step must be positive")
        if len(self.points) != len(self.lengths) or not self.points:
            raise UsageError("points and lengths must be nonempty and aligned")
        if self.lengths[0] != 0 or any(b < a for a, b in zip(self.lengths, self.lengths[1:])):
            raise UsageError("cumulative lengths must start at 0 and be nondecreasing")

    @property
    def length(self) -> float:
        return self.lengths[-1]

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ModelConstants:
    delta_hat: float
    quasiconvexity_eps: float
    cocompactness_M: float
    triangle_sample: tuple = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("delta_hat", "quasiconvexity_eps", "cocompactness_M"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise UsageError(f"{name} must be finite and nonnegative, got {v}")


def _check(model, *pts):
    for p in pts:
        if not isinstance(p, model.point_type):
            raise UsageError(
                f"{type(p).__name__} does not belong to a {type(model).__name__}")


def distance(model, x, y) -> float:
    _check(model, x, y)
    return model.distance(x, y)


def gromov_product(model, x, y, z) -> float:
    """``(x, y)_z = (d(x,z) + d(y,z) - d(x,y)) / 2``."""
    _check(model, x, y, z)
    return 0.5 * (model.distance(x, z) + model.distance(y, z) - model.distance(x, y))


def geodesic(model, x, y, step=None) -> PathSample:
    _check(model, x, y)
    if step is not None and not step > 0:
        raise UsageError("step must be positive")
    return model.geodesic(x, y, step)


def triangle_defect(model, x, y, z, step=None) -> float:
    """Largest distance between congruent points on two sides of ``xyz``.

    For each vertex ``o`` with opposite vertices ``a, b``, points at arclength
    ``s <= (a, b)_o`` on ``[o, a]`` and ``[o, b]`` are compared.
    """
    step = model.default_step if step is None else step
    worst = 0.0
    for o, a, b in ((x, y, z), (y, z, x), (z, x, y)):
        t = gromov_product(model, a, b, o)
        if t <= 0:
            continue
        ss = list(np.arange(0.0, t, step)) + [t]
        for s in ss:
            u = model.point_along(o, a, s)
            v = model.point_along(o, b, s)
            worst = max(worst, model.distance(u, v))
    return worst


def estimate_hyperbolicity(model, sample, step=None) -> float:
    """Maximal thin-triangle defect over all triangles with vertices in ``sample``.

    This is a lower bound for the true constant, never a certificate.
    """
    sample = list(sample)
    if len(sample) < 3:
        raise UsageError("need at least 3 points")
    _check(model, *sample)
    worst = 0.0
    for x, y, z in itertools.combinations(sample, 3):
        worst = max(worst, triangle_defect(model, x, y, z, step))
    return worst


def four_point_defect(model, x, y, z, w) -> float:
    """How far ``(x,y)_w >= min((x,z)_w, (z,y)_w)`` fails (0 when it holds)."""
    a = gromov_product(model, x, y, w)
    b = gromov_product(model, x, z, w)
    c = gromov_product(model, z, y, w)
    return max(0.0, min(b, c) - a)


def project(model, x, target):
    """Nearest point of the closure of ``target`` (a horoball or a point collection)."""
    _check(model, x)
    if hasattr(target, "cls") and hasattr(target, "element"):
        return model.project_to_horoball(x, target)
    pts = list(target)
    if not pts:
        from .errors import TruncationError
        raise TruncationError("projection target is empty")
    _check(model, *pts)
    ds = [model.distance(x, p) for p in pts]
    best = min(ds)
    ties = [p for p, d in zip(pts, ds) if d <= best + 1e-12]
    return min(ties, key=model.point_key)


def dist_to_neighborhood(model, x, horoball, eps):
    """``(d(x, U), d(x, U) <= eps)``."""
    _check(model, x)
    d = model.horoball_distance(x, horoball)
    return d, d <= eps


def contraction_diameter(model, path: PathSample, horoball) -> float:
    """Diameter of the projection of a sampled path onto a horoball."""
    proj = [model.project_to_horoball(p, horoball) for p in path.points]
    return max((model.distance(a, b) for a, b in itertools.combinations(proj, 2)),
               default=0.0)
