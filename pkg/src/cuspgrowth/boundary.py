"""Shadows, transition points, cones and Patterson-Sullivan approximants.

Half-plane computations are exact.  A geodesic ``[o, x]`` (or ray ``[o, xi)``)
is handled in arclength ``s`` and every set that matters is an interval:

* ``J``: points within ``2R`` of ``g o`` (a ball meets a geodesic in an interval);
* ``I_Y``: points of ``N_eps(Y)``, itself the horoball of height ``t e^-eps``;
* ``D_Y``: points ``v`` that are ``(eps, R)``-deep in ``Y``, i.e. with
  ``[s_v - R, s_v + R]`` (clipped to the geodesic) inside ``I_Y``.  That is
  ``I_Y`` shrunk by ``R`` at each end that is not an end of the geodesic.

``[o, x]`` has a transition point within ``2R`` of ``g o`` iff ``J`` is not
covered by the ``D_Y``.  Only horoballs with ``d(g o, Y) <= 2R + eps`` can
contribute.  When ``R`` exceeds the diameter of ``N_eps(U) cap N_eps(U')`` for
distinct horoballs and the geodesic is at least ``R`` long, the ``D_Y`` are
pairwise disjoint, so a cover of ``J`` is a single ``D_Y`` containing the point
of the geodesic nearest to ``g o``.  That point lies within ``r`` of ``g o``, so
the search shrinks to horoballs with ``d(g o, Y) <= r + eps``.

Seen from ``o``, the shadow of ``B(g o, r)`` is an arc of the boundary of
half-angle ``asin(sinh r / sinh d(o, g o))`` in the disc model centred at ``o``,
which makes shadow tests for whole orbit samples cheap.

Graph computations use the deterministic geodesic of the model, sampled
transition points, and far vertices standing in for boundary points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import enumeration as en
from . import hyperbolic_plane as hp
from . import modular
from .errors import HorizonError, TruncationError, UsageError
from .models.groupspec import HALF_PLANE
from .models.horoballs import HoroballRef
from .space import HalfPlanePoint, VertexPoint

_TOL = 1e-12


# -- parameters and boundary points ------------------------------------------------

@dataclass(frozen=True)
class TransitionParams:
    eps: float = 1.0
    R: float = 4.0
    r: float = 2.0
    delta: float = 1.0

    def __post_init__(self):
        for name in ("eps", "R", "r", "delta"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise UsageError(f"{name} must be positive and finite, got {v}")

    def to_dict(self):
        return {"eps": self.eps, "R": self.R, "r": self.r, "delta": self.delta}


@dataclass(frozen=True)
class BoundaryPoint:
    """``value`` is an extended real (half-plane) or a far vertex (graph proxy)."""

    value: object
    distance: float | None = None


def boundary_point(model, value, horizon=None) -> BoundaryPoint:
    if model.backend == HALF_PLANE:
        v = float(value)
        if math.isnan(v):
            raise UsageError("boundary value is NaN")
        return BoundaryPoint(v)
    if not isinstance(value, VertexPoint):
        raise UsageError("graph boundary points are vertex proxies")
    horizon = default_horizon(model) if horizon is None else horizon
    d = model.distance(model.basepoint, value)
    if d < horizon:
        raise HorizonError(f"proxy {value} is at distance {d:g} < horizon {horizon:g}")
    return BoundaryPoint(value, d)


def default_horizon(model):
    return max(model.truncation_radius - 2, 1)


def shadow_slack(model) -> float:
    """Additive slack on neighbourhood tests.

    Half-plane geodesics are unique and handled in closed form, so none.  Graph
    geodesics are exact vertex paths but only one of possibly several, so the
    sampled hyperbolicity constant is added.
    """
    if model.backend == HALF_PLANE:
        return 0.0
    return float(model.constants.delta_hat)


def _gdist(model, x, y):
    """Graph distance, with pairs beyond the truncation radius reported as infinite."""
    try:
        return model.distance(x, y)
    except TruncationError:
        return math.inf


def _z(model, g):
    return complex(hp.mobius(np.array(g), model.basepoint.z))


def _mobius_boundary_vec(m, xi):
    a, b, c, d = (float(v) for v in m)
    xi = np.asarray(xi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        den = c * xi + d
        out = (a * xi + b) / den
        out = np.where(den == 0, np.inf, out)
        at_inf = np.isinf(xi)
        out = np.where(at_inf, (a / c) if c != 0 else np.inf, out)
    return out


def disk_angle(o: complex, z):
    """Direction from ``o`` of interior points or boundary values, in the disc centred at ``o``."""
    z = np.asarray(z)
    if np.iscomplexobj(z):
        with np.errstate(divide="ignore", invalid="ignore"):
            w = (z - o) / (z - np.conj(o))
        return np.angle(w)
    xi = z.astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (xi - o) / (xi - np.conj(o))
    w = np.where(np.isinf(xi), 1.0 + 0j, w)
    return np.angle(w)


def angle_to_boundary(o: complex, phi):
    """Inverse of :func:`disk_angle` on the boundary."""
    w = np.exp(1j * np.asarray(phi, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = (o - np.conj(o) * w) / (1 - w)
    return np.where(np.abs(1 - w) < 1e-15, np.inf, z.real)


def shadow_half_angle(r, d):
    """Half-angle of the shadow of ``B(x, r)`` seen from a point at distance ``d``."""
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = math.sinh(r) / np.sinh(d)
    return np.where(d <= r, np.pi, np.arcsin(np.minimum(ratio, 1.0)))


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


# -- half-plane interval machinery --------------------------------------------------

def _expand(seg):
    """Add a trailing axis so a segment broadcasts against horoball arrays."""
    line = seg.line
    return hp.Segment(hp.Line(line.vertical[..., None], line.x0[..., None], line.c[..., None],
                              line.rho[..., None]),
                      seg.tau0[..., None], seg.sign[..., None], seg.length[..., None])


def _subset(seg, idx):
    line = seg.line
    return hp.Segment(hp.Line(line.vertical[idx], line.x0[idx], line.c[idx], line.rho[idx]),
                      seg.tau0[idx], seg.sign[idx], seg.length[idx])


def _deep_intervals(seg, ps, qs, model, params):
    """``(lo, hi)`` of ``D_Y`` for every (geodesic, horoball) pair; empty as lo > hi."""
    height = model.height * math.exp(-params.eps)
    ilo, ihi = _expand(seg).horoball_interval(ps[None, :], qs[None, :], height)
    L = seg.length[:, None]
    R = params.R
    empty = ilo > ihi
    lo = np.where(ilo <= _TOL, 0.0, ilo + R)
    hi = np.where(ihi >= L - _TOL, L, ihi - R)
    lo = np.where(empty, np.inf, lo)
    hi = np.where(empty, -np.inf, hi)
    return lo, hi


def _covered(jlo, jhi, lo, hi):
    """Row-wise: is ``[jlo, jhi]`` inside the union of the intervals ``[lo_k, hi_k]``?"""
    order = np.argsort(lo, axis=1, kind="stable")
    lo = np.take_along_axis(lo, order, axis=1)
    hi = np.take_along_axis(hi, order, axis=1)
    cur = jlo.copy()
    for k in range(lo.shape[1]):
        step = (lo[:, k] <= cur + _TOL) & (hi[:, k] > cur)
        cur = np.where(step, hi[:, k], cur)
    return cur >= jhi - _TOL


def _fast_ok(model, params):
    return (params.r <= 2 * params.R
            and params.R > model.bounded_intersection_diameter(params.eps) + 1e-9)


def _candidate_cusps(model, center_z, radius):
    ps, qs, _ = model.horoball_arrays(HalfPlanePoint.of(center_z), radius)
    return ps.astype(float), qs.astype(float)


def _transition_near(model, seg, go, params):
    """Row-wise: does the geodesic have an ``(eps, R)``-transition point within ``2R`` of ``go``?"""
    n = len(seg.length)
    out = np.zeros(n, dtype=bool)
    if n == 0:
        return out
    jlo, jhi = seg.ball_interval(go, 2 * params.R)
    has_j = jlo <= jhi
    if not model.has_parabolics:
        return has_j
    fast = _fast_ok(model, params) & (seg.length >= params.R)
    for mode in (True, False):
        rows = np.flatnonzero(has_j & (fast == mode))
        if len(rows) == 0:
            continue
        radius = (params.r if mode else 2 * params.R) + params.eps
        ps, qs = _candidate_cusps(model, go, radius)
        sub = _subset(seg, rows)
        # process in chunks to bound memory
        chunk = max(1, 2_000_000 // max(len(ps), 1))
        for start in range(0, len(rows), chunk):
            part = slice(start, start + chunk)
            s2 = _subset(sub, part)
            lo, hi = _deep_intervals(s2, ps, qs, model, params)
            cov = _covered(jlo[rows[part]], jhi[rows[part]], lo, hi)
            out[rows[part]] = ~cov
    return out


# -- transition points (sampled, both backends) ----------------------------------

def _as_cusp(model, Y):
    if isinstance(Y, HoroballRef):
        p, q = model.cusp_of(Y)
        return (float(p), float(q), model.height)
    p, q, h = Y
    return (float(p), float(q), float(h))


def deep_matrix(model, path, params, horoballs=None):
    """``(keys, deep)`` where ``deep[i, k]`` says sample ``i`` is ``(eps, R)``-deep in horoball ``k``.

    A sample ``v`` is deep in ``Y`` iff every sample within arclength ``R`` of
    ``v`` lies in ``N_eps(Y)``.  ``horoballs`` overrides the model's system
    (half-plane entries may be ``(p, q, height)`` triples).
    """
    pts = list(path.points)
    s = np.asarray(path.lengths, dtype=float)
    eps = params.eps
    if model.backend == HALF_PLANE:
        if model.default_step and path.step > params.R / 10 + 1e-12:
            raise UsageError(f"path step {path.step} exceeds R/10 = {params.R / 10}")
        z = np.array([p.z for p in pts])
        if horoballs is None:
            if not model.has_parabolics:
                return [], np.zeros((len(pts), 0), dtype=bool)
            keys = set()
            for zz in z:
                ps, qs, _ = model.horoball_arrays(HalfPlanePoint.of(zz), eps)
                keys.update(zip(ps.tolist(), qs.tolist()))
            keys = sorted(keys, key=lambda k: (k[1], k[0]))
            trip = [(float(p), float(q), model.height) for p, q in keys]
        else:
            trip = [_as_cusp(model, Y) for Y in horoballs]
            keys = list(horoballs)
        if not trip:
            return keys, np.zeros((len(pts), 0), dtype=bool)
        P = np.array([t[0] for t in trip])
        Q = np.array([t[1] for t in trip])
        H = np.array([t[2] for t in trip])
        inside = hp.horoball_distance(z[:, None], P[None, :], Q[None, :], H[None, :]) <= eps + _TOL
    else:
        if horoballs is None:
            if not model.has_parabolics:
                return [], np.zeros((len(pts), 0), dtype=bool)
            near = [model.horoballs_near(p, eps) for p in pts]
            keys = sorted({k for nd in near for k in nd}, key=lambda k: (k[0], len(k[1]), k[1]))
            inside = np.array([[k in nd for k in keys] for nd in near], dtype=bool).reshape(len(pts), len(keys))
        else:
            keys = list(horoballs)
            inside = np.array([[model.horoball_distance(p, Y) <= eps for Y in keys] for p in pts],
                              dtype=bool).reshape(len(pts), len(keys))
    deep = np.zeros_like(inside)
    for i in range(len(pts)):
        window = np.abs(s - s[i]) <= params.R + _TOL
        deep[i] = inside[window].all(axis=0)
    return keys, deep


def transition_points(model, path, params, horoballs=None):
    """``[(point, is_transition)]`` for the samples of ``path``.

    Without horoballs (cocompact case) every point is a transition point.
    """
    _, deep = deep_matrix(model, path, params, horoballs)
    flags = ~deep.any(axis=1) if deep.shape[1] else np.ones(len(path.points), dtype=bool)
    return [(p, bool(f)) for p, f in zip(path.points, flags)]


# -- shadows -----------------------------------------------------------------------

def _proxy_path(model, xi: BoundaryPoint):
    if not isinstance(xi.value, VertexPoint):
        raise UsageError("graph shadows need a vertex proxy")
    return model._path(model.basepoint, xi.value)


def shadow_contains(model, xi: BoundaryPoint, g, r) -> bool:
    """Does the geodesic ``[o, xi)`` pass within ``r`` (+ slack) of ``g o``?"""
    g = model.canonical(g)
    if model.backend == HALF_PLANE:
        go = _z(model, g)
        seg = hp.ray(model.basepoint.z, np.array([xi.value]))
        return bool(seg.distance_to(go)[0] <= r + _TOL)
    go = model.orbit_point(g)
    slack = shadow_slack(model)
    return any(_gdist(model, v, go) <= r + slack for v in _proxy_path(model, xi))


def partial_shadow_contains(model, xi: BoundaryPoint, g, params: TransitionParams) -> bool:
    """In the shadow, and ``[o, xi)`` has a transition point within ``2R`` of ``g o``."""
    g = model.canonical(g)
    if not shadow_contains(model, xi, g, params.r):
        return False
    if model.backend == HALF_PLANE:
        go = _z(model, g)
        seg = hp.ray(model.basepoint.z, np.array([xi.value]))
        return bool(_transition_near(model, seg, go, params)[0])
    go = model.orbit_point(g)
    path = _proxy_path(model, xi)
    sample = _path_sample(path)
    flags = transition_points(model, sample, params)
    return any(f and _gdist(model, v, go) <= 2 * params.R for v, f in flags)


def _path_sample(path):
    from .space import PathSample
    return PathSample(tuple(path), tuple(float(i) for i in range(len(path))), 1.0)


# -- cones -------------------------------------------------------------------------

def cone_flags(model, g, params: TransitionParams, sample=None, idx=None):
    """``(cone, partial)`` flags for the elements ``sample.element(i)``, ``i`` in ``idx``.

    ``cone``: the geodesic ``[o, h o]`` meets ``B(g o, r)``.  ``partial``: in the
    cone and either ``d(o, h o) <= d(o, g o) + 2R`` or ``[o, h o]`` has a transition
    point within ``2R`` of ``g o``.
    """
    g = model.canonical(g)
    sample = en.orbit_sample(model) if sample is None else sample
    idx = np.arange(len(sample)) if idx is None else np.asarray(idx)
    d_h = sample.distances[idx]
    if model.backend == HALF_PLANE:
        o = model.basepoint.z
        go = _z(model, g)
        d_go = float(hp.dist(o, go))
        hz = hp.mobius(sample.elements[idx], o)
        seg = hp.segment(np.full(len(idx), o), hz)
        cone = seg.distance_to(go) <= params.r + _TOL
        near = d_h <= d_go + 2 * params.R + _TOL
        partial = cone & near
        rest = np.flatnonzero(cone & ~near)
        if len(rest):
            partial[rest] = _transition_near(model, _subset(seg, rest), go, params)
        return cone, partial
    o = model.basepoint
    go = model.orbit_point(g)
    d_go = model.distance(o, go)
    slack = shadow_slack(model)
    if d_go <= params.r + slack:
        # every geodesic from o starts inside the ball
        cone = np.ones(len(idx), dtype=bool)
        if not model.has_parabolics and d_go <= 2 * params.R:
            # with no horoballs o itself is a transition point within 2R of g o
            return cone, cone.copy()
    cone = np.zeros(len(idx), dtype=bool)
    partial = np.zeros(len(idx), dtype=bool)
    for j, i in enumerate(idx):
        h = sample.element(int(i))
        path = model._path(o, model.orbit_point(h))
        dists = [_gdist(model, v, go) for v in path]
        if min(dists) > params.r + slack:
            continue
        cone[j] = True
        if d_h[j] <= d_go + 2 * params.R + 1e-9:
            partial[j] = True
            continue
        flags = transition_points(model, _path_sample(path), params)
        partial[j] = any(f and dv <= 2 * params.R + slack for (_, f), dv in zip(flags, dists))
    return cone, partial


def _cone_window(model, g, params, n, delta):
    g = model.canonical(g)
    q = en.AnnulusQuery(float(n), float(delta), g)
    sample, mask = en.annulus_mask(model, q)
    idx = np.flatnonzero(mask)
    cone, partial = cone_flags(model, g, params, sample, idx)
    return sample, idx, cone, partial


def cone_members(model, g, r, n, delta=1.0) -> set:
    """``Omega_r(g o, n, Delta) = Omega_r(g o) cap A(g o, n, Delta)``."""
    params = TransitionParams(r=r)
    sample, idx, cone, _ = _cone_window(model, g, params, n, delta)
    return {sample.element(int(i)) for i in idx[cone]}


def partial_cone_members(model, g, params: TransitionParams, n, delta=None) -> set:
    """``Omega_{r, eps, R}(g o, n, Delta)``."""
    delta = params.delta if delta is None else delta
    sample, idx, _, partial = _cone_window(model, g, params, n, delta)
    return {sample.element(int(i)) for i in idx[partial]}


def cone_counts(model, g, params: TransitionParams, radii, delta=None):
    """``{n: (#A, #Omega_r, #Omega_{r,eps,R})}`` at ``g o`` for each ``n`` (flags computed once)."""
    delta = params.delta if delta is None else delta
    g = model.canonical(g)
    radii = sorted(float(n) for n in radii)
    base = en._center_distance(model, g)
    hi = radii[-1] + delta + base
    model.check_truncation(hi, "cone annulus")
    sample = en.orbit_sample(model, hi)
    d = sample.distances
    lo = radii[0] - delta + base
    idx = np.flatnonzero((d >= lo - 1e-9) & (d < hi - 1e-9))
    cone, partial = cone_flags(model, g, params, sample, idx)
    out = {}
    for n in radii:
        w = (d[idx] >= n - delta + base - 1e-9) & (d[idx] < n + delta + base - 1e-9)
        out[n] = (int(w.sum()), int((w & cone).sum()), int((w & partial).sum()))
    return out


def cone_growth_table(model, g, kind, radii, params: TransitionParams, delta_hat=0.0):
    if kind not in ("cone", "partial_cone"):
        raise UsageError(f"cone tables are 'cone' or 'partial_cone', not {kind!r}")
    counts = cone_counts(model, g, params, radii)
    col = 1 if kind == "cone" else 2
    rows = tuple((n, c[col]) for n, c in sorted(counts.items()))
    params_out = {"model": model.describe(), "g": model.format_element(model.canonical(g)),
                  **params.to_dict()}
    return en.GrowthTable(kind, rows, float(params.delta), float(delta_hat), params_out)


# -- Patterson-Sullivan approximants -------------------------------------------

def default_exponent_window(model):
    hi = int(min(12, math.floor(model.truncation_radius + 1e-9)))
    return (max(1, hi - 6), hi)


def sampled_delta_hat(model) -> float:
    """Growth exponent fitted on the model's default window (cached)."""
    from .series import orbit_exponent
    cache = en._cache(model)
    if "delta_hat_G" not in cache:
        cache["delta_hat_G"] = float(orbit_exponent(model, default_exponent_window(model)).delta_hat)
    return cache["delta_hat_G"]


class Region:
    """A set of boundary points, tested on half-plane values or graph orbit proxies."""

    def contains_xi(self, model, xi):
        raise NotImplementedError

    def contains_elements(self, model, elements):
        raise NotImplementedError

    def representative(self, model):
        raise UsageError(f"{type(self).__name__} has no representative point")


@dataclass(frozen=True)
class Everything(Region):
    def contains_xi(self, model, xi):
        return np.ones(len(xi), dtype=bool)

    def contains_elements(self, model, elements):
        return np.ones(len(elements), dtype=bool)


@dataclass(frozen=True)
class Shadow(Region):
    g: tuple
    r: float

    def contains_xi(self, model, xi):
        o = model.basepoint.z
        go = _z(model, self.g)
        d_go = float(hp.dist(o, go))
        if d_go <= self.r:
            return np.ones(len(xi), dtype=bool)
        half = float(shadow_half_angle(self.r, d_go))
        with np.errstate(invalid="ignore"):
            return np.abs(_wrap(disk_angle(o, np.asarray(xi, dtype=float)) - disk_angle(o, go))) <= half + _TOL

    def contains_elements(self, model, elements):
        o = model.basepoint
        go = model.orbit_point(self.g)
        lim = self.r + shadow_slack(model)
        if model.distance(o, go) <= lim:
            return np.ones(len(elements), dtype=bool)
        return np.array([any(_gdist(model, v, go) <= lim
                             for v in model._path(o, model.orbit_point(h))) for h in elements],
                        dtype=bool)

    def representative(self, model):
        """Endpoint of the ray from ``o`` through ``g o``."""
        if model.backend != HALF_PLANE:
            raise UsageError("graph regions have no boundary representative")
        return float(hp.forward_endpoint(model.basepoint.z, _z(model, self.g)))


@dataclass(frozen=True)
class PartialShadow(Region):
    g: tuple
    params: TransitionParams

    def contains_xi(self, model, xi):
        xi = np.asarray(xi, dtype=float)
        out = Shadow(self.g, self.params.r).contains_xi(model, xi)
        rows = np.flatnonzero(out & ~np.isnan(xi))
        out[:] = False
        if len(rows):
            seg = hp.ray(model.basepoint.z, xi[rows])
            out[rows] = _transition_near(model, seg, _z(model, self.g), self.params)
        return out

    def contains_elements(self, model, elements):
        sample = en.OrbitSample(model.basepoint, 0.0, list(elements),
                                np.array([model.distance(model.basepoint, model.orbit_point(h))
                                          for h in elements], dtype=float))
        return cone_flags(model, self.g, self.params, sample)[1]

    def representative(self, model):
        return Shadow(self.g, self.params.r).representative(model)


@dataclass(frozen=True)
class Translate(Region):
    """``g A``: a point lies in it iff ``g^-1`` of it lies in ``A``."""

    g: tuple
    region: Region

    def contains_xi(self, model, xi):
        return self.region.contains_xi(model, _mobius_boundary_vec(model.inverse(self.g), xi))

    def contains_elements(self, model, elements):
        g_inv = model.inverse(self.g)
        return self.region.contains_elements(model, [model.multiply(g_inv, h) for h in elements])

    def representative(self, model):
        xi = self.region.representative(model)
        return float(_mobius_boundary_vec(self.g, np.array([xi]))[0])


@dataclass(frozen=True)
class CuspNeighborhood(Region):
    """Boundary points within disc angle ``half_angle`` of the cusp ``p/q`` (``q = 0`` is infinity)."""

    p: int
    q: int
    half_angle: float

    def contains_xi(self, model, xi):
        o = model.basepoint.z
        c = math.inf if self.q == 0 else self.p / self.q
        with np.errstate(invalid="ignore"):
            gap = np.abs(_wrap(disk_angle(o, np.asarray(xi, dtype=float)) - disk_angle(o, np.array([c]))[0]))
        return gap <= self.half_angle


class MeasureApproximant:
    """``mu^s = (1/P(s)) sum exp(-s d(o, g o)) Dirac(g o)`` over the enumerated ball.

    Only orbit points at distance ``>= T`` carry weight, so the total is at most
    one.  On the half-plane each orbit point stands for the endpoint of the ray
    from ``o`` through it.  On graphs orbit points are used directly.
    """

    def __init__(self, model, s, T=2.0, radius=None, delta_hat=None):
        delta_hat = sampled_delta_hat(model) if delta_hat is None else float(delta_hat)
        if not s > delta_hat:
            raise UsageError(f"exponent s = {s} must exceed delta_hat = {delta_hat:.6f}")
        if T < 0:
            raise UsageError("cutoff T must be nonnegative")
        radius = min(12.0, model.truncation_radius) if radius is None else float(radius)
        sample = en.orbit_sample(model, radius)
        w_all = np.exp(-s * sample.distances)
        self.model = model
        self.s = float(s)
        self.T = float(T)
        self.radius = radius
        self.delta_hat = delta_hat
        self.normalization = float(w_all.sum())
        keep = np.flatnonzero(sample.distances >= T - 1e-12)
        self.weights = w_all[keep] / self.normalization
        self.distances = sample.distances[keep]
        if model.backend == HALF_PLANE:
            o = model.basepoint.z
            hz = hp.mobius(sample.elements[keep], o)
            xi = angle_to_boundary(o, disk_angle(o, hz))
            self.xi = np.where(self.distances < 1e-9, np.nan, xi)
            self.elements = sample.elements[keep]
        else:
            self.xi = None
            self.elements = [sample.element(int(i)) for i in keep]

    @property
    def total(self):
        return float(self.weights.sum())

    def mask(self, region: Region):
        if self.xi is not None:
            return np.asarray(region.contains_xi(self.model, self.xi), dtype=bool)
        return np.asarray(region.contains_elements(self.model, self.elements), dtype=bool)

    def measure(self, region: Region) -> float:
        return float(self.weights[self.mask(region)].sum())

    def params(self):
        return {"s": self.s, "T": self.T, "radius": self.radius, "delta_hat": self.delta_hat,
                "normalization": self.normalization}


def ps_measure(model, region: Region, s, T=2.0, radius=None, delta_hat=None) -> float:
    return MeasureApproximant(model, s, T, radius, delta_hat).measure(region)


def busemann(model, xi: BoundaryPoint, x, y) -> float:
    """``B_xi(x, y) = lim d(x, z) - d(y, z)`` as ``z -> xi``.

    Positive when ``y`` is nearer ``xi``.  Graphs use the proxy difference
    ``d(x, p) - d(y, p)``.
    """
    if model.backend == HALF_PLANE:
        return float(hp.busemann(float(xi.value), x.z, y.z))
    if not isinstance(xi.value, VertexPoint):
        raise UsageError("graph Busemann functions need a vertex proxy")
    return float(model.distance(x, xi.value) - model.distance(y, xi.value))


# -- audits -----------------------------------------------------------------------

def _spread(values):
    vals = [v for v in values if v > 0 and math.isfinite(v)]
    if not vals:
        return {"min": math.nan, "max": math.nan, "spread": math.nan}
    lo, hi = min(vals), max(vals)
    return {"min": lo, "max": hi, "spread": hi / lo}


def sample_elements(model, count, band=(4.0, 8.0), seed=0, radius=None):
    """``count`` distinct elements with ``d(o, g o)`` in ``band``, ordered canonically."""
    sample = en.orbit_sample(model, band[1] if radius is None else radius)
    idx = np.flatnonzero((sample.distances >= band[0]) & (sample.distances <= band[1]))
    if len(idx) < count:
        raise UsageError(f"only {len(idx)} elements in the band {band}, asked for {count}")
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(idx, size=count, replace=False))
    key = (lambda g: tuple(int(v) for v in g)) if model.backend == HALF_PLANE else (lambda g: (len(g), g))
    return sorted((sample.element(int(i)) for i in pick), key=key)


@dataclass
class ShadowRow:
    g: tuple
    distance: float
    shadow: float
    partial: float
    rho: float
    rho_partial: float
    flagged: bool


@dataclass
class ShadowAudit:
    rows: list
    plain: dict
    partial: dict
    slack: float
    params: dict
    partial_le_plain: bool = field(default=True)


def shadow_lemma_audit(model, sample, r=3.0, s=None, T=2.0, params=None, approx=None) -> ShadowAudit:
    """``rho(g) = mu^s(Pi_r(g o)) exp(s d(o, g o))`` for plain and partial shadows."""
    params = TransitionParams(r=r) if params is None else params
    if approx is None:
        s = 1.05 * sampled_delta_hat(model) if s is None else s
        approx = MeasureApproximant(model, s, T)
    s = approx.s
    rows = []
    for g in sample:
        g = model.canonical(g)
        d = model.distance(model.basepoint, model.orbit_point(g))
        mask = approx.mask(Shadow(g, r))
        m_plain = float(approx.weights[mask].sum())
        m_part = float(approx.weights[mask & approx.mask(PartialShadow(g, params))].sum())
        scale = math.exp(s * d)
        rows.append(ShadowRow(g, d, m_plain, m_part, m_plain * scale, m_part * scale, m_plain <= 0))
    ok = all(row.rho_partial <= row.rho for row in rows)
    echo = {**approx.params(), **params.to_dict(), "r": r, "sample_size": len(rows)}
    return ShadowAudit(rows, _spread([x.rho for x in rows]), _spread([x.rho_partial for x in rows]),
                       shadow_slack(model), echo, ok)


@dataclass
class QCRow:
    g: tuple
    region: Region
    xi: float
    measure: float
    measure_translated: float
    predicted: float
    ratio: float
    flagged: bool


def quasiconformality_audit(model, pairs, s=None, T=2.0, approx=None):
    """Compare ``mu(g A) / mu(A)`` with ``exp(-s B_xi(g^-1 o, o))`` at ``xi`` representing ``A``.

    ``pairs`` holds ``(g, A)``; returns ``(rows, spread)``.  Half-plane only.
    """
    if model.backend != HALF_PLANE:
        raise UsageError("the quasi-conformality audit needs boundary values (half-plane)")
    if approx is None:
        s = 1.05 * sampled_delta_hat(model) if s is None else s
        approx = MeasureApproximant(model, s, T)
    o = model.basepoint
    rows = []
    for g, region in pairs:
        g = model.canonical(g)
        xi = region.representative(model)
        m_a = approx.measure(region)
        m_ga = approx.measure(Translate(g, region))
        g_inv_o = model.orbit_point(model.inverse(g))
        pred = math.exp(-approx.s * busemann(model, BoundaryPoint(xi), g_inv_o, o))
        flagged = m_a <= 0 or m_ga <= 0
        ratio = math.nan if flagged else (m_ga / m_a) / pred
        rows.append(QCRow(g, region, xi, m_a, m_ga, pred, ratio, flagged))
    return rows, _spread([row.ratio for row in rows if not row.flagged])


def _exp_point(model, start: complex, distance, angle):
    """Point at ``distance`` from ``start`` in direction ``angle`` of the disc centred at ``start``."""
    w = math.tanh(distance / 2) * complex(math.cos(angle), math.sin(angle))
    return (start - start.conjugate() * w) / (1 - w)


def sample_geodesic_pairs(model, count, r=1.0, length=(12.0, 16.0), seed=0):
    """``count`` endpoint pairs ``(alpha_+, gamma_+)`` with ``d(alpha_+, gamma_+) < r``; both start at ``o``."""
    rng = np.random.default_rng(seed)
    o = model.basepoint
    pairs = []
    if model.backend == HALF_PLANE:
        for _ in range(count):
            a = _exp_point(model, o.z, rng.uniform(*length), rng.uniform(-np.pi, np.pi))
            c = _exp_point(model, a, rng.uniform(0, r) * 0.999, rng.uniform(-np.pi, np.pi))
            pairs.append((HalfPlanePoint.of(a), HalfPlanePoint.of(c)))
        return pairs
    far = [v for v in _graph_sphere(model, int(length[0]))]
    for _ in range(count):
        a = far[int(rng.integers(len(far)))]
        near = [v for v in _graph_ball(model, a, math.ceil(r) - 1)]
        pairs.append((a, near[int(rng.integers(len(near)))]))
    return pairs


def _graph_ball(model, x, radius):
    seen = {x}
    frontier = [x]
    for _ in range(int(radius)):
        nxt = []
        for v in frontier:
            for u in model.neighbors(v):
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return sorted(seen, key=model.point_key)


def _graph_sphere(model, n):
    o = model.basepoint
    tab = model._table(o.depth, o.cls, n)
    return [VertexPoint(model.group.multiply(o.word, u), depth, cls) for u, depth, cls in tab.layers[n]]


def _hp_transition_set(model, seg, params):
    """Transition points of one half-plane segment, as sorted disjoint arclength intervals."""
    L = float(seg.length[0])
    if not model.has_parabolics:
        return [(0.0, L)]
    mid = complex(seg.point(np.array([L / 2]))[0])
    ps, qs = _candidate_cusps(model, mid, L / 2 + params.eps)
    lo, hi = _deep_intervals(seg, ps, qs, model, params)
    deep = sorted((a, b) for a, b in zip(lo[0], hi[0]) if a <= b)
    out, cur = [], 0.0
    for a, b in deep:
        if a > cur:
            out.append((cur, a))
        cur = max(cur, b)
    if cur < L:
        out.append((cur, L))
    return out


def _hp_segment_one(z0, z1):
    return hp.segment(np.array([z0]), np.array([z1]))


@dataclass
class StabilityReport:
    d_hat: float
    per_pair: list
    skipped: int
    window: float
    params: dict


def transition_stability_audit(model, pairs, params=None, L=None, spacing=0.05) -> StabilityReport:
    """Max over transition points ``v`` of ``alpha`` (farther than ``L`` from ``alpha_+``) of the
    distance to the nearest transition point of ``gamma``."""
    params = TransitionParams(r=1.0) if params is None else params
    dh = float(model.constants.delta_hat)
    L = 2 * params.r + params.R + params.eps + 4 * dh if L is None else float(L)
    o = model.basepoint
    per_pair, skipped = [], 0
    for a_end, c_end in pairs:
        if model.backend == HALF_PLANE:
            sa = _hp_segment_one(o.z, a_end.z)
            sc = _hp_segment_one(o.z, c_end.z)
            la = float(sa.length[0])
            ta = _hp_transition_set(model, sa, params)
            tc = _hp_transition_set(model, sc, params)
            vs = []
            for a, b in ta:
                b = min(b, la - L)
                if a <= b:
                    vs.extend(np.linspace(a, b, max(2, int(math.ceil((b - a) / spacing)) + 1)))
            if not vs or not tc:
                skipped += 1
                continue
            pts = sa.point(np.array(vs))
            best = np.full(len(vs), np.inf)
            for a, b in tc:
                piece = hp.segment(np.full(len(vs), complex(sc.point(np.array([a]))[0])),
                                   np.full(len(vs), complex(sc.point(np.array([b]))[0])))
                best = np.minimum(best, piece.distance_to(pts))
            per_pair.append(float(best.max()))
        else:
            pa = model._path(o, a_end)
            pc = model._path(o, c_end)
            fa = transition_points(model, _path_sample(pa), params)
            fc = [v for v, f in transition_points(model, _path_sample(pc), params) if f]
            la = len(pa) - 1
            vs = [v for k, (v, f) in enumerate(fa) if f and k <= la - L]
            if not vs or not fc:
                skipped += 1
                continue
            per_pair.append(float(max(min(_gdist(model, v, w) for w in fc) for v in vs)))
    d_hat = max(per_pair) if per_pair else math.nan
    return StabilityReport(d_hat, per_pair, skipped, L,
                           {**params.to_dict(), "L": L, "delta_hat": dh, "pairs": len(pairs)})


def parabolic_atom_probe(approx: MeasureApproximant, p=1, q=0, half_angles=(0.4, 0.2, 0.1)):
    """Approximant mass of shrinking disc-angle neighbourhoods of the cusp ``p/q``.

    A consistency probe for the absence of atoms at parabolic points: the
    masses should decrease along the basis.  It is not a proof.
    """
    masses = [approx.measure(CuspNeighborhood(p, q, a)) for a in half_angles]
    return masses, all(b < a for a, b in zip(masses, masses[1:]))


def is_cusp_value(xi, max_den=10**4) -> bool:
    """Is ``xi`` (numerically) a rational number or infinity?

    Every real is within ``1/q^2`` of a fraction with denominator ``q``, so
    ``max_den`` must stay well below ``1e6`` for the ``1e-12`` tolerance to
    separate rationals from quadratic irrationals such as the golden ratio.
    """
    if math.isinf(xi):
        return True
    f = Fraction(xi).limit_denominator(max_den)
    return abs(float(f) - xi) <= 1e-12 * max(1.0, abs(xi))


@dataclass
class ConicalReport:
    count: int
    horizon: float
    r: float
    parabolic: bool


def conical_cover_check(model, xi: BoundaryPoint, r, horizon) -> ConicalReport:
    """Number of ``g`` with ``d(o, g o) <= horizon`` whose ``r``-shadow contains ``xi``."""
    sample = en.orbit_sample(model, horizon)
    if model.backend == HALF_PLANE:
        o = model.basepoint.z
        hz = hp.mobius(sample.elements, o)
        half = shadow_half_angle(r, sample.distances)
        gap = np.abs(_wrap(disk_angle(o, hz) - disk_angle(o, np.array([xi.value]))[0]))
        count = int(((sample.distances <= r) | (gap <= half + _TOL)).sum())
        return ConicalReport(count, float(horizon), float(r),
                             model.has_parabolics and is_cusp_value(float(xi.value)))
    count = sum(shadow_contains(model, xi, sample.element(i), r) for i in range(len(sample)))
    return ConicalReport(int(count), float(horizon), float(r), False)


def gromov_product_boundary(model, xi, zeta) -> float:
    """``(xi | zeta)_o = -log sin(theta / 2)``, ``theta`` the angle at ``o`` (half-plane)."""
    o = model.basepoint.z
    a = disk_angle(o, np.array([float(xi), float(zeta)]))
    theta = abs(float(_wrap(a[0] - a[1])))
    return math.inf if theta == 0 else -math.log(math.sin(theta / 2))


VISUAL_PARAMETER = 0.5


def visual_distance(model, xi: BoundaryPoint, zeta: BoundaryPoint, a=VISUAL_PARAMETER) -> float:
    """Diagnostic ``exp(-a (xi | zeta)_o)``.

    On graphs the Gromov product of two proxies is read off as the last index at
    which their geodesics from ``o`` stay ``delta_hat``-close (exact on trees).
    """
    if model.backend == HALF_PLANE:
        return math.exp(-a * gromov_product_boundary(model, xi.value, zeta.value))
    o = model.basepoint
    px = model._path(o, xi.value)
    pz = model._path(o, zeta.value)
    slack = shadow_slack(model)
    gp = 0
    for k in range(min(len(px), len(pz))):
        if _gdist(model, px[k], pz[k]) > slack:
            break
        gp = k
    return math.exp(-a * gp)


# -- serialization ----------------------------------------------------------------

def audit_csv(rows) -> str:
    """``audit,param_json,key,value`` lines from ``(audit, params, key, value)`` tuples."""
    import csv
    import io
    import json
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["audit", "param_json", "key", "value"])
    for audit, params, key, value in rows:
        w.writerow([audit, json.dumps(params, sort_keys=True, default=str), key, en._fmt(value)])
    return buf.getvalue()
