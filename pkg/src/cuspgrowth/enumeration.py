"""Exact enumeration of orbit points, horoballs and parabolic elements.

Counts are of group elements, not of orbit points: the stabilizer of the
basepoint (``{I, S}`` at ``i`` in PSL(2, Z)) inflates every count by a constant
factor, which does not affect growth rates.

Everything is computed from an :class:`OrbitSample`, the list of all elements
``g`` with ``d(x, g x) <= radius`` sorted by distance (ties by element), built
once per model and centre and reused.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import hyperbolic_plane as hp
from . import modular
from .errors import SpecError, TruncationError, UsageError
from .models.groupspec import HALF_PLANE
from .models.horoballs import HoroballRef
from .space import HalfPlanePoint, VertexPoint

_EPS = 1e-9


@dataclass(frozen=True)
class OrbitSample:
    """Elements with ``d(center, g center) <= radius``, sorted by that distance.

    Half-plane elements are rows of an ``(N, 4)`` int64 array; graph elements are
    a list of words.
    """

    center: object
    radius: float
    elements: object
    distances: np.ndarray

    def __len__(self):
        return len(self.distances)

    def element(self, i):
        e = self.elements[i]
        return tuple(int(v) for v in e) if isinstance(self.elements, np.ndarray) else e

    def as_set(self, mask=None):
        idx = range(len(self)) if mask is None else np.flatnonzero(mask)
        return {self.element(i) for i in idx}


@dataclass(frozen=True)
class AnnulusQuery:
    n: float
    delta: float = 1.0
    center: tuple | None = None  # the element g; None is the identity

    def __post_init__(self):
        if not self.delta > 0:
            raise UsageError(f"annulus width must be positive, got {self.delta}")
        if not self.n >= 0:
            raise UsageError(f"annulus radius must be nonnegative, got {self.n}")


def _cache(model):
    c = getattr(model, "_enum_cache", None)
    if c is None:
        c = {}
        object.__setattr__(model, "_enum_cache", c)
    return c


def _half_plane_sample(model, center, radius, strategy):
    z = center.z
    d_io = float(hp.dist(1j, z))
    x_max = modular.norm_bound(radius + 2 * d_io)
    if strategy == "bfs":
        found = modular.bfs_ball(x_max)
        elems = np.array(sorted(found), dtype=np.int64).reshape(-1, 4)
    else:
        elems = modular.frobenius_ball(x_max)
    if d_io == 0 and z == 1j:
        d = hp.dist_from_i_by_norm((elems * elems).sum(axis=1))
    else:
        d = hp.dist(z, hp.mobius(elems, z))
    keep = d <= radius + 1e-12
    elems, d = elems[keep], d[keep]
    order = np.lexsort((elems[:, 3], elems[:, 2], elems[:, 1], elems[:, 0], np.round(d, 9)))
    return OrbitSample(center, radius, elems[order], d[order])


def _graph_sample(model, center, radius):
    r = int(math.floor(radius + 1e-9))
    tab = model._table(center.depth, center.cls, r)
    w = center.word
    w_inv = model.group.inverse(w)
    words, dists = [], []
    conj = (lambda u: u) if not w else (
        lambda u: model.group.multiply(model.group.multiply(w, u), w_inv))
    for k, layer in enumerate(tab.layers[: r + 1]):
        for u, depth, cls in layer:
            if depth == center.depth and cls == center.cls:
                words.append(conj(u))
                dists.append(float(k))
    return OrbitSample(center, float(radius), words, np.array(dists, dtype=float))


def orbit_sample(model, radius=None, center=None, strategy="auto") -> OrbitSample:
    """All ``g`` with ``d(x, g x) <= radius`` for ``x = center`` (default the basepoint).

    ``strategy`` picks the half-plane enumerator: ``"frobenius"`` (default) or
    ``"bfs"``.  Graphs always use breadth-first search.
    """
    radius = model.truncation_radius if radius is None else float(radius)
    model.check_truncation(radius, "ball")
    center = model.basepoint if center is None else center
    if not isinstance(center, model.point_type):
        raise UsageError("center point does not belong to this model")
    if strategy not in ("auto", "frobenius", "bfs"):
        raise UsageError(f"unknown strategy {strategy!r}")
    key = ("orbit", center, strategy)
    cache = _cache(model)
    hit = cache.get(key)
    if hit is not None and hit.radius >= radius:
        if hit.radius == radius:
            return hit
        n = int(np.searchsorted(hit.distances, radius + 1e-12, side="right"))
        return OrbitSample(center, radius, hit.elements[:n], hit.distances[:n])
    if model.backend == HALF_PLANE:
        sample = _half_plane_sample(model, center, radius, strategy)
    else:
        sample = _graph_sample(model, center, radius)
    cache[key] = sample
    return sample


def ball(model, n, center=None, strategy="auto") -> set:
    """``N(x, n) = {g : d(x, g x) <= n}`` as a set of canonical elements."""
    return orbit_sample(model, n, center, strategy).as_set()


def ball_counts(model, radii, center=None):
    """``#N(x, n)`` for each ``n`` in ``radii``."""
    radii = [float(r) for r in radii]
    sample = orbit_sample(model, max(radii), center)
    return [int(np.searchsorted(sample.distances, r + 1e-12, side="right")) for r in radii]


def _center_distance(model, g):
    if g is None:
        return 0.0
    g = model.canonical(g)
    o = model.basepoint
    return model.distance(o, model.apply(g, o))


def _window(sample, lo, hi):
    """Mask of ``lo <= d < hi`` with a tiny tolerance for values that should be equal."""
    d = sample.distances
    return (d >= lo - _EPS) & (d < hi - _EPS)


def annulus_mask(model, q: AnnulusQuery):
    """``(sample, mask)`` for ``A(g o, n, Delta) = {h : n - Delta <= d(o, h o) - d(o, g o) < n + Delta}``."""
    base = _center_distance(model, q.center)
    hi = q.n + q.delta + base
    model.check_truncation(hi, "annulus")
    sample = orbit_sample(model, hi)
    return sample, _window(sample, q.n - q.delta + base, hi)


def annulus(model, q: AnnulusQuery) -> set:
    sample, mask = annulus_mask(model, q)
    return sample.as_set(mask)


def annulus_count(model, n, delta=1.0, center=None) -> int:
    _, mask = annulus_mask(model, AnnulusQuery(float(n), float(delta), center))
    return int(mask.sum())


# -- horoballs -----------------------------------------------------------------

def _horoball_feet(model, radius):
    """``(keys, distances)`` of all horoballs whose foot is within ``radius`` of ``o``.

    Half-plane keys are cusps ``(p, q)``; graph keys are ``(cls, coset rep)``.
    """
    if not model.has_parabolics:
        return [], np.zeros(0)
    cache = _cache(model)
    hit = cache.get("feet")
    if hit is None or hit[0] < radius:
        r = model.truncation_radius
        if model.backend == HALF_PLANE:
            ps, qs, d = model.horoball_arrays(model.basepoint, r)
            keys = np.stack([ps, qs], axis=1)
        else:
            near = model.horoballs_near(model.basepoint, r)
            items = sorted(near.items(), key=lambda kv: (kv[1], kv[0][0], len(kv[0][1]), kv[0][1]))
            keys = [k for k, _ in items]
            d = np.array([v for _, v in items], dtype=float)
        hit = (r, keys, d)
        cache["feet"] = hit
    return hit[1], hit[2]


def horoball_annulus_mask(model, n, delta=1.0, orbit_class=None):
    """Keys and mask for ``H(o, n, Delta) = {U : -Delta <= d(o, o_U) - n < Delta}``."""
    if not delta > 0:
        raise UsageError("annulus width must be positive")
    model.check_truncation(n + delta, "horoball annulus")
    keys, d = _horoball_feet(model, n + delta)
    mask = (d >= n - delta - _EPS) & (d < n + delta - _EPS)
    if orbit_class is not None and model.backend != HALF_PLANE:
        mask &= np.array([k[0] == orbit_class for k in keys], dtype=bool)
    elif orbit_class not in (None, 0):
        mask[:] = False
    return keys, mask


def horoball_annulus_count(model, n, delta=1.0, orbit_class=None) -> int:
    _, mask = horoball_annulus_mask(model, n, delta, orbit_class)
    return int(mask.sum())


def horoball_annulus(model, n, delta=1.0, orbit_class=None) -> list:
    """The horoballs of ``H(o, n, Delta)`` as HoroballRefs (with feet and ``t_U``)."""
    keys, mask = horoball_annulus_mask(model, n, delta, orbit_class)
    out = []
    for i in np.flatnonzero(mask):
        k = keys[i]
        if model.backend == HALF_PLANE:
            out.append(model.horoball(int(k[0]), int(k[1])))
        else:
            out.append(model.horoball_of(*k))
    return out


def foot(model, horoball, point=None):
    """Nearest point of the horosphere ``dU`` to ``point`` (default the basepoint)."""
    point = model.basepoint if point is None else point
    if point == model.basepoint and horoball.foot is not None:
        return horoball.foot
    return model.foot_from(horoball, point)


# -- parabolic subgroups -------------------------------------------------------

def parabolic_distances(model, horoball, v, d_max, w=None):
    """``(powers m, d(v, h_m w))`` for ``h_m = g p^m g^-1`` in ``G_U`` with distance ``<= d_max``.

    ``w`` defaults to ``v``.  Sorted by distance, ties by ``m``.  Half-plane
    distances use the pullback by the defining element of ``U``, where ``h_m``
    becomes the translation by ``m``; graph distances come from the strip search
    when ``v = w`` lies on the coset and from the distance tables otherwise.
    """
    if not model.has_parabolics:
        raise SpecError("no parabolic subgroups are declared")
    w = v if w is None else w
    if model.backend == HALF_PLANE:
        gamma = np.array(modular.inv(model.defining_element(horoball)))
        zv = complex(hp.mobius(gamma, v.z))
        zw = complex(hp.mobius(gamma, w.z))
        scale = 2.0 * math.sqrt(zv.imag * zw.imag)
        shift = zv.real - zw.real
        reach = math.hypot(scale * math.sinh(d_max / 2), 1.0)
        lo = int(math.floor(shift - reach)) - 1
        hi = int(math.ceil(shift + reach)) + 1
        ms = np.arange(lo, hi + 1, dtype=np.int64)
        d = hp.dist(zv, zw + ms)
    elif v == w and v.depth == 0 and model.coset_rep(v.word, horoball.cls) == horoball.element:
        # scan until a run of 2^(D+1) consecutive powers is out of range; a
        # geodesic covers at most 2^D horizontally per edge, so none come back
        ms_list, ds = [], []
        m, last_in = 0, 0
        while m <= last_in + (2 << model.depth):
            dm = model.strip_distance(m)
            if dm <= d_max:
                ms_list += [m] if m == 0 else [m, -m]
                ds += [dm] if m == 0 else [dm, dm]
                last_in = m
            m += 1
        ms = np.array(ms_list, dtype=np.int64)
        d = np.array(ds, dtype=float)
    else:
        model.check_truncation(d_max, "parabolic annulus")
        h = model.stabilizer_generator(horoball)
        ms_list, ds = [0], [model.distance(v, w)]
        for sgn, step in ((1, h), (-1, model.inverse(h))):
            g, m = (), 0
            while True:
                m += 1
                g = model.multiply(g, step)
                try:
                    dm = model.distance(v, model.apply(g, w))
                except TruncationError:
                    break  # d(v, h^m w) grows without bound, so the rest is farther
                ms_list.append(sgn * m)
                ds.append(dm)
        ms = np.array(ms_list, dtype=np.int64)
        d = np.array(ds, dtype=float)
    keep = d <= d_max + 1e-12
    ms, d = ms[keep], d[keep]
    order = np.lexsort((ms, np.round(d, 9)))
    return ms[order], d[order]


def parabolic_element(model, horoball, m):
    """``h^m`` for the stabilizer generator ``h = g p g^-1`` of ``U``."""
    m = int(m)
    if model.backend == HALF_PLANE:
        gamma = model.defining_element(horoball)
        return modular.mul(modular.mul(gamma, (1, m, 0, 1)), modular.inv(gamma))
    g = horoball.element
    x = model.class_letters[horoball.cls]
    p = x if m >= 0 else -x
    return model.multiply(model.multiply(g, (p,) * abs(m)), model.inverse(g))


def parabolic_annulus(model, horoball, v, n, delta=1.0) -> set:
    """``A_Y(v, n, Delta) = {h in G_Y : n - Delta <= d(v, h v) < n + Delta}``."""
    ms, d = parabolic_distances(model, horoball, v, n + delta)
    sel = (d >= n - delta - _EPS) & (d < n + delta - _EPS)
    return {parabolic_element(model, horoball, int(m)) for m in ms[sel]}


def parabolic_annulus_count(model, horoball, v, n, delta=1.0) -> int:
    _, d = parabolic_distances(model, horoball, v, n + delta)
    return int(((d >= n - delta - _EPS) & (d < n + delta - _EPS)).sum())


# -- growth tables ---------------------------------------------------------------

KINDS = ("orbit", "horoball", "parabolic", "cone", "partial_cone")


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf"
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(round(x, 12))


@dataclass(frozen=True)
class GrowthTable:
    kind: str
    rows: tuple            # (n, count) pairs, sorted by n
    delta: float
    delta_hat: float
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown table kind {self.kind!r}")
        ns = [n for n, _ in self.rows]
        if ns != sorted(ns):
            raise UsageError("rows must be sorted by n")
        if any(c < 0 or int(c) != c for _, c in self.rows):
            raise UsageError("counts must be nonnegative integers")

    @property
    def radii(self):
        return [n for n, _ in self.rows]

    @property
    def counts(self):
        return [c for _, c in self.rows]

    def normalized(self):
        return [c * math.exp(-self.delta_hat * n) for n, c in self.rows]

    def records(self):
        return [{"kind": self.kind, "n": n, "delta": self.delta, "count": int(c),
                 "normalized": v} for (n, c), v in zip(self.rows, self.normalized())]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "n", "delta", "count", "normalized"])
        for r in self.records():
            w.writerow([r["kind"], _fmt(r["n"]), _fmt(r["delta"]), r["count"], _fmt(r["normalized"])])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"kind": self.kind, "delta": _json_num(self.delta),
                "delta_hat": _json_num(self.delta_hat), "params": self.params,
                "rows": [{k: _json_num(v) for k, v in r.items()} for r in self.records()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _json_num(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return round(v, 12)
    return v


def growth_table(model, kind, radii, delta=1.0, delta_hat=0.0, horoball=None, point=None,
                 orbit_class=None) -> GrowthTable:
    """Orbit, horoball or parabolic growth table (cone kinds live in ``boundary``).

    For ``kind="orbit"`` with ``delta = inf`` the rows are shell counts
    ``#{g : n - 1 < d(o, g o) <= n}`` (row 0 counts ``d = 0``), so their prefix
    sums over consecutive integer radii are ``#N(o, n)``.
    """
    radii = sorted(float(r) for r in radii)
    rows = []
    params = {"model": model.describe()}
    if kind == "orbit":
        if math.isinf(delta):
            sample = orbit_sample(model, max(radii))
            d = sample.distances
            for n in radii:
                lo = n - 1
                c = int(((d > lo + 1e-12) & (d <= n + 1e-12)).sum()) if n > 0 else int((d <= 1e-12).sum())
                rows.append((n, c))
        else:
            rows = [(n, annulus_count(model, n, delta)) for n in radii]
    elif kind == "horoball":
        rows = [(n, horoball_annulus_count(model, n, delta, orbit_class)) for n in radii]
        if orbit_class is not None:
            params["orbit_class"] = orbit_class
    elif kind == "parabolic":
        if horoball is None:
            raise UsageError("parabolic tables need a horoball")
        v = model.basepoint if point is None else point
        rows = [(n, parabolic_annulus_count(model, horoball, v, n, delta)) for n in radii]
        params["horoball"] = {"cls": horoball.cls, "element": list(horoball.element)}
    else:
        raise UsageError(f"{kind!r} tables are built by the boundary module")
    return GrowthTable(kind, tuple(rows), float(delta), float(delta_hat), params)
