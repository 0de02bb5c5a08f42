"""Cusped Cayley graphs of free products of cyclic groups.

Vertices are ``(w, 0)`` for group elements ``w`` (the Cayley graph) and
``(w, k, c)`` for ``1 <= k <= D``: depth ``k`` of the combinatorial horoball
over the coset ``w P_c`` of the ``c``-th parabolic subgroup ``P_c = <p_c>``.
Edges:

* Cayley edges ``(w, 0) -- (w x, 0)`` for generators ``x``;
* vertical edges ``(w, k, c) -- (w, k + 1, c)`` and ``(w, 0) -- (w, 1, c)``;
* horizontal edges ``(w, k, c) -- (w p_c^j, k, c)`` for ``1 <= |j| <= 2^k``.

The horoball over ``g P_c`` is every vertex over the coset, depth 0 included.
``G`` acts by left multiplication on the ``w`` label, so all distances come
from breadth-first tables rooted at ``(e, 0)`` and ``(e, k, c)``:
``d(u, v) = table_u[(u.w^-1 v.w, v.depth, v.cls)]``.  Tables are grown layer by
layer up to the truncation radius; anything farther raises TruncationError.
"""

from __future__ import annotations

import gc
import math
import re
from functools import cached_property

import numpy as np

from ..errors import SpecError, TruncationError, UnsupportedPresentationError, UsageError
from ..space import ModelConstants, PathSample, VertexPoint
from ..words import FreeProduct
from .groupspec import CUSPED_CAYLEY, GroupSpec
from .horoballs import HoroballRef

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class _Table:
    """Breadth-first layers from one root, grown on demand."""

    def __init__(self, root, neighbors):
        self.dist = {root: 0}
        self.layers = [[root]]
        self._neighbors = neighbors

    @property
    def radius(self):
        return len(self.layers) - 1

    def grow_to(self, r):
        # Millions of small tuples are allocated here; none are cyclic, so the
        # cycle collector only costs time while the table grows.
        enabled = gc.isenabled()
        gc.disable()
        try:
            dist = self.dist
            neighbors = self._neighbors
            while self.radius < r and self.layers[-1]:
                nxt = []
                k = len(self.layers)
                for v in self.layers[-1]:
                    for u in neighbors(v):
                        size = len(dist)
                        dist.setdefault(u, k)
                        if len(dist) > size:
                            nxt.append(u)
                nxt.sort(key=_key)
                self.layers.append(nxt)
        finally:
            if enabled:
                gc.enable()


def _key(v):
    return (len(v[0]), v[0], v[1], v[2])


class CuspedCayleyModel:
    point_type = VertexPoint
    default_step = 1.0
    backend = CUSPED_CAYLEY

    def __init__(self, spec: GroupSpec):
        if spec.model != CUSPED_CAYLEY:
            raise SpecError(f"expected a cusped_cayley spec, got {spec.model}")
        names = [n for n, _ in spec.generators]
        bad = [n for n in names if not _NAME.match(n)]
        if bad:
            raise UnsupportedPresentationError(
                f"generators {bad} are not plain symbols; only free products of cyclic "
                "groups (symbols, optionally 'name:order') are supported")
        self.spec = spec
        self.group = FreeProduct(names, [o for _, o in spec.generators])
        self.depth = int(spec.max_depth)
        self.truncation_radius = int(math.floor(spec.truncation_radius + 1e-9))
        self.class_gens = [names.index(p) for p in spec.parabolics]
        self.class_letters = [g + 1 for g in self.class_gens]
        self.identity = ()
        word = self.group.parse(spec.basepoint) if spec.basepoint else ()
        self.basepoint = VertexPoint(word, 0, -1)
        self._tables = {}
        self._strip = {}
        self._horo_cache = {}

    # -- group -------------------------------------------------------------
    def canonical(self, raw):
        if isinstance(raw, str):
            return self.group.parse(raw)
        return self.group.canonical(tuple(raw))

    def multiply(self, g, h):
        return self.group.multiply(g, h)

    def inverse(self, g):
        return self.group.inverse(g)

    def apply(self, g, x: VertexPoint) -> VertexPoint:
        if not isinstance(x, VertexPoint):
            raise UsageError("apply expects a graph vertex")
        return VertexPoint(self.group.multiply(g, x.word), x.depth, x.cls)

    def orbit_point(self, g) -> VertexPoint:
        return self.apply(g, self.basepoint)

    def format_element(self, g) -> str:
        return self.group.format(g)

    # -- graph -------------------------------------------------------------
    def _neighbors(self, v):
        w, k, c = v
        mul = self.group.mul_letter
        out = []
        if k == 0:
            for x in self.group.letters:
                out.append((mul(w, x), 0, -1))
            if self.depth >= 1:
                for cc in range(len(self.class_letters)):
                    out.append((w, 1, cc))
            return out
        out.append((w, k - 1, c) if k > 1 else (w, 0, -1))
        if k < self.depth:
            out.append((w, k + 1, c))
        x = self.class_letters[c]
        for sgn in (x, -x):
            u = w
            for _ in range(1 << k):
                u = mul(u, sgn)
                out.append((u, k, c))
        return out

    def neighbors(self, x: VertexPoint):
        return [VertexPoint(*v) for v in self._neighbors((x.word, x.depth, x.cls))]

    def _table(self, depth, cls, radius):
        key = (depth, cls)
        tab = self._tables.get(key)
        if tab is None:
            tab = self._tables[key] = _Table(((), depth, cls), self._neighbors)
        tab.grow_to(radius)
        return tab

    def layers(self, radius=None):
        """Breadth-first layers of vertices around ``(e, 0)`` (relative to the identity)."""
        radius = self.truncation_radius if radius is None else int(radius)
        self.check_truncation(radius)
        return self._table(0, -1, radius).layers[: radius + 1]

    def _rel_distance(self, x, y):
        rel = (self.group.multiply(self.group.inverse(x.word), y.word), y.depth, y.cls)
        tab = self._table(x.depth, x.cls, self.truncation_radius)
        d = tab.dist.get(rel)
        if d is None:
            raise TruncationError(
                f"distance between {x} and {y} exceeds the truncation radius {self.truncation_radius}")
        return d

    def distance(self, x, y) -> float:
        return float(self._rel_distance(x, y))

    def point_key(self, p):
        return p.sort_key()

    def _path(self, x, y):
        d = self._rel_distance(x, y)
        path = [x]
        cur = x
        while d > 0:
            best = None
            for u in self._neighbors((cur.word, cur.depth, cur.cls)):
                v = VertexPoint(*u)
                rel = (self.group.multiply(self.group.inverse(y.word), v.word), v.depth, v.cls)
                dv = self._table(y.depth, y.cls, self.truncation_radius).dist.get(rel)
                if dv == d - 1 and (best is None or _key(u) < best[0]):
                    best = (_key(u), v)
            cur = best[1]
            path.append(cur)
            d -= 1
        return path

    def geodesic(self, x, y, step=None) -> PathSample:
        """The lexicographically least shortest path; ``step`` is always 1."""
        path = self._path(x, y)
        return PathSample(tuple(path), tuple(float(i) for i in range(len(path))), 1.0)

    def point_along(self, x, y, s) -> VertexPoint:
        path = self._path(x, y)
        i = min(int(math.floor(float(s) + 1e-9)), len(path) - 1)
        return path[max(i, 0)]

    # -- horoballs ---------------------------------------------------------
    @property
    def has_parabolics(self) -> bool:
        return bool(self.class_gens)

    def coset_rep(self, w, cls):
        return self.group.strip_power(w, self.class_gens[cls])[0]

    def in_horoball(self, x: VertexPoint, horoball) -> bool:
        if x.depth > 0 and x.cls != horoball.cls:
            return False
        return self.coset_rep(x.word, horoball.cls) == horoball.element

    def _horoballs_at(self, v):
        w, k, c = v
        if k == 0:
            return [(cc, self.coset_rep(w, cc)) for cc in range(len(self.class_gens))]
        return [(c, self.coset_rep(w, c))]

    def horoballs_near(self, x: VertexPoint, radius):
        """``{(cls, coset rep): d(x, U)}`` for every horoball within ``radius`` of ``x``."""
        radius = int(math.floor(radius + 1e-9))
        self.check_truncation(radius)
        tab = self._table(x.depth, x.cls, radius)
        out = {}
        for r, layer in enumerate(tab.layers[: radius + 1]):
            for rel in layer:
                w = self.group.multiply(x.word, rel[0])
                for key in self._horoballs_at((w, rel[1], rel[2])):
                    if key not in out:
                        out[key] = r
        return out

    def horoball_distance(self, x, horoball) -> float:
        rep_rel = self.coset_rep(
            self.group.multiply(self.group.inverse(x.word), horoball.element), horoball.cls)
        key = (x.depth, x.cls, horoball.cls, rep_rel)
        hit = self._horo_cache.get(key)
        if hit is not None:
            return float(hit[0])
        tab = self._table(x.depth, x.cls, self.truncation_radius)
        for r, layer in enumerate(tab.layers):
            best = None
            for rel in layer:
                if rel[1] > 0 and rel[2] != horoball.cls:
                    continue
                if self.coset_rep(rel[0], horoball.cls) == rep_rel:
                    best = rel  # layers are sorted, so the first hit is the least
                    break
            if best is not None:
                self._horo_cache[key] = (r, best)
                return float(r)
        raise TruncationError(f"horoball {horoball.element} is beyond the truncation radius")

    def project_to_horoball(self, x, horoball) -> VertexPoint:
        self.horoball_distance(x, horoball)
        rep_rel = self.coset_rep(
            self.group.multiply(self.group.inverse(x.word), horoball.element), horoball.cls)
        _, rel = self._horo_cache[(x.depth, x.cls, horoball.cls, rep_rel)]
        return VertexPoint(self.group.multiply(x.word, rel[0]), rel[1], rel[2])

    def foot_from(self, horoball, x) -> VertexPoint:
        return self.project_to_horoball(x, horoball)

    def horoball_of(self, cls, element) -> HoroballRef:
        if not 0 <= cls < len(self.class_gens):
            raise UsageError(f"unknown parabolic class {cls}")
        rep = self.coset_rep(self.group.canonical(element), cls)
        ref = HoroballRef(cls, rep)
        foot = self.foot_from(ref, self.basepoint)
        # every Cayley vertex is an orbit point, so t_U lands exactly on the foot
        t_u = self.group.multiply(foot.word, self.group.inverse(self.basepoint.word))
        return HoroballRef(cls, rep, None, foot, self.distance(self.basepoint, foot), t_u, 0.0)

    def translate_horoball(self, g, horoball) -> HoroballRef:
        return self.horoball_of(horoball.cls, self.group.multiply(g, horoball.element))

    def stabilizer_generator(self, horoball):
        """``g p g^-1`` for the coset ``g P``."""
        p = (self.class_letters[horoball.cls],)
        g = horoball.element
        return self.group.multiply(self.group.multiply(g, p), self.group.inverse(g))

    def horoball_table(self, radius=None):
        """HoroballRefs whose foot is within ``radius`` of the basepoint, sorted."""
        radius = self.truncation_radius if radius is None else int(math.floor(radius + 1e-9))
        self.check_truncation(radius)
        if not self.class_gens:
            return []
        near = self.horoballs_near(self.basepoint, radius)
        refs = [self.horoball_of(c, rep) for (c, rep) in near]
        return sorted(refs, key=lambda u: (u.foot_distance, u.cls, len(u.element), u.element))

    def strip_distance(self, m: int) -> int:
        """``d((e, 0), (p^m, 0))`` inside one combinatorial horoball.

        In a free product the coset ``gP`` is convex in the Cayley graph and the
        other horoballs hang off it at single vertices, so the shortest path
        between two points of ``P`` never leaves the horoball over ``P``; a
        search in the strip ``Z x {0..D}`` is therefore exact.
        """
        m = abs(int(m))
        if m not in self._strip:
            self._build_strip(max(2 * m, 64))
        return self._strip[m]

    def _build_strip(self, target):
        D = self.depth
        half = target + (2 << D)
        width = 2 * half + 1
        dist = np.full((D + 1, width), -1, dtype=np.int64)
        dist[0, half] = 0
        frontier = [(0, half)]
        r = 0
        while frontier:
            r += 1
            nxt = []
            for k, i in frontier:
                cand = []
                if k == 0:
                    cand += [(0, i - 1), (0, i + 1)]
                if k > 0:
                    cand.append((k - 1, i))
                    step = 1 << k
                    cand += [(k, i + j) for j in range(-step, step + 1) if j]
                if k < D:
                    cand.append((k + 1, i))
                for kk, ii in cand:
                    if 0 <= ii < width and dist[kk, ii] < 0:
                        dist[kk, ii] = r
                        nxt.append((kk, ii))
            frontier = nxt
        for m in range(target + 1):
            self._strip[m] = int(dist[0, half + m])

    # -- constants -----------------------------------------------------------
    @cached_property
    def constants(self) -> ModelConstants:
        from ..space import estimate_hyperbolicity
        rng = np.random.default_rng(20240611)
        radius = min(3, self.truncation_radius)
        pool = [v for layer in self.layers(radius) for v in layer]
        pick = sorted(rng.choice(len(pool), size=min(8, len(pool)), replace=False))
        sample = [self.apply(self.basepoint.word, VertexPoint(*pool[i])) for i in pick]
        if len(sample) >= 3:
            delta = estimate_hyperbolicity(self, sample, step=1.0)
        else:
            delta = 0.0
        return ModelConstants(delta_hat=delta, quasiconvexity_eps=self.quasiconvexity_sample(),
                              cocompactness_M=0.5, triangle_sample=tuple(sample))

    def quasiconvexity_sample(self, radius=3):
        """Largest distance from a horoball of geodesics joining its vertices (sampled)."""
        if not self.class_gens:
            return 0.0
        worst = 0.0
        o = self.basepoint
        for c in range(len(self.class_gens)):
            ref = HoroballRef(c, self.coset_rep(o.word, c))
            pts = [o]
            x = self.class_letters[c]
            for m in (-3, 2, 5):
                w = self.group.multiply(o.word, (x if m > 0 else -x,) * abs(m))
                pts.append(VertexPoint(w, 0, -1))
                if self.depth >= 1:
                    pts.append(VertexPoint(w, min(self.depth, 2), c))
            for i, a in enumerate(pts):
                for b in pts[i + 1:]:
                    try:
                        path = self._path(a, b)
                    except TruncationError:
                        continue
                    for v in path:
                        worst = max(worst, self.horoball_distance(v, ref))
        return float(worst)

    def check_truncation(self, radius: float, what="query"):
        if radius > self.truncation_radius + 1e-9:
            raise TruncationError(
                f"{what} needs radius {radius:.6g} > truncation radius {self.truncation_radius}")

    def describe(self) -> dict:
        return {"backend": self.backend, "max_depth": self.depth,
                "truncation_radius": self.truncation_radius,
                "basepoint": self.group.format(self.basepoint.word)}
