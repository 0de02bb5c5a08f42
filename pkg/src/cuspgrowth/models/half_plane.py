"""The modular group acting on the upper half-plane with horoballs ``{Im >= t}``.

Horoballs are the translates of ``{Im z >= t}``; the one tangent at ``p/q``
(lowest terms) is a Euclidean disc of diameter ``1 / (t q^2)``.  It is labelled
by the canonical element ``g_{p/q}`` of :func:`modular.cusp_element`, so
``U_{p/q} = g_{p/q} . U_inf``.  Distances to horoballs are pullbacks:
``Im(g^-1 z) = Im z / |p - q z|^2``.

Only groups that contain ``T`` and ``S`` (hence all of PSL(2, Z)) are
supported, because the exact enumerators are specific to that group.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from .. import hyperbolic_plane as hp
from .. import modular
from ..errors import SpecError, TruncationError, UnsupportedPresentationError, UsageError
from ..space import HalfPlanePoint, ModelConstants, PathSample
from .groupspec import HALF_PLANE, GroupSpec
from .horoballs import HoroballRef

_WORD_SEARCH = 6
_DELTA_SAMPLE = 8
_DELTA_RADIUS = 5.0


def _generates_modular_group(gens) -> bool:
    """True when ``T`` and ``S`` are words of length <= 6 in the generators."""
    letters = set()
    for g in gens:
        letters.add(g)
        letters.add(modular.inv(g))
    seen = {modular.IDENTITY}
    frontier = [modular.IDENTITY]
    for _ in range(_WORD_SEARCH):
        nxt = []
        for w in frontier:
            for x in letters:
                v = modular.mul(w, x)
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
        if modular.T in seen and modular.S in seen:
            return True
    return False


class HalfPlaneModel:
    point_type = HalfPlanePoint
    default_step = 0.05
    backend = HALF_PLANE

    def __init__(self, spec: GroupSpec):
        if spec.model != HALF_PLANE:
            raise SpecError(f"expected a half_plane spec, got {spec.model}")
        self.spec = spec
        self.generators = {n: modular.canonical(m) for n, m in spec.generators}
        if not _generates_modular_group(self.generators.values()):
            raise UnsupportedPresentationError(
                "the half-plane backend enumerates PSL(2,Z) exactly and needs generators "
                "that produce both T and S")
        self.height = float(spec.horoball_height)
        self.truncation_radius = float(spec.truncation_radius)
        z = 1j if spec.basepoint is None else complex(spec.basepoint)
        self.basepoint = HalfPlanePoint(z.real, z.imag)
        self.identity = modular.IDENTITY
        # parabolic classes: PSL(2,Z) has a single cusp, so at most one entry
        self.class_elements = []
        for p in spec.parabolics:
            m = self.generators[p] if isinstance(p, str) else modular.canonical(p)
            cusp = modular.fixed_cusp(m)
            gamma = modular.cusp_element(*cusp)
            conj = modular.mul(modular.mul(modular.inv(gamma), m), gamma)
            if conj not in (modular.T, modular.T_INV):
                raise SpecError(f"parabolic {p!r} is not a generator of a maximal parabolic subgroup")
            self.class_elements.append(gamma)
        if len(self.class_elements) > 1:
            raise SpecError("PSL(2,Z) has one conjugacy class of maximal parabolics; "
                            "list one representative")

    # -- group -------------------------------------------------------------
    def canonical(self, raw):
        return modular.canonical(raw)

    def multiply(self, g, h):
        return modular.mul(g, h)

    def inverse(self, g):
        return modular.inv(g)

    def apply(self, g, x: HalfPlanePoint) -> HalfPlanePoint:
        if not isinstance(x, HalfPlanePoint):
            raise UsageError("apply expects a half-plane point")
        return HalfPlanePoint.of(complex(hp.mobius(np.array(g), x.z)))

    def orbit_point(self, g) -> HalfPlanePoint:
        return self.apply(g, self.basepoint)

    def format_element(self, g) -> str:
        return "[{},{},{},{}]".format(*g)

    # -- metric ------------------------------------------------------------
    def distance(self, x, y) -> float:
        return float(hp.dist(x.z, y.z))

    def point_key(self, p):
        return (p.re, p.im)

    def _segment(self, x, y):
        return hp.segment(x.z, y.z)

    def point_along(self, x, y, s) -> HalfPlanePoint:
        if x == y:
            return x
        seg = self._segment(x, y)
        s = min(max(float(s), 0.0), float(seg.length))
        if s >= float(seg.length):
            return y
        return HalfPlanePoint.of(complex(seg.point(s)))

    def geodesic(self, x, y, step=None) -> PathSample:
        step = self.default_step if step is None else float(step)
        length = self.distance(x, y)
        if length == 0:
            return PathSample((x,), (0.0,), step)
        k = max(1, math.ceil(length / step - 1e-12))
        ss = np.linspace(0.0, length, k + 1)
        seg = self._segment(x, y)
        zs = seg.point(np.minimum(ss, seg.length))
        pts = [x] + [HalfPlanePoint.of(complex(z)) for z in zs[1:-1]] + [y]
        return PathSample(tuple(pts), tuple(float(s) for s in ss), step)

    # -- horoballs ---------------------------------------------------------
    @property
    def has_parabolics(self) -> bool:
        return bool(self.class_elements)

    def _require_parabolics(self):
        if not self.class_elements:
            raise SpecError("this spec declares no parabolic subgroups")

    def horoball_height_at(self, cls):
        return self.height

    def cusp_of(self, horoball):
        if horoball.cusp is not None:
            return horoball.cusp
        gamma = modular.mul(horoball.element, self.class_elements[horoball.cls])
        a, _, c, _ = gamma
        return (1, 0) if c == 0 else ((a, c) if c > 0 else (-a, -c))

    def defining_element(self, horoball):
        """``gamma`` with ``U = gamma . {Im >= t}``."""
        return modular.cusp_element(*self.cusp_of(horoball))

    def stabilizer_generator(self, horoball):
        """Generator of the maximal parabolic subgroup fixing ``U``."""
        gamma = self.defining_element(horoball)
        return modular.mul(modular.mul(gamma, modular.T), modular.inv(gamma))

    def horoball_distance(self, x, horoball) -> float:
        p, q = self.cusp_of(horoball)
        return float(hp.horoball_distance(x.z, p, q, self.height))

    def project_to_horoball(self, x, horoball) -> HalfPlanePoint:
        gamma = self.defining_element(horoball)
        w = complex(hp.mobius(np.array(modular.inv(gamma)), x.z))
        if w.imag >= self.height:
            return x
        return HalfPlanePoint.of(complex(hp.mobius(np.array(gamma), complex(w.real, self.height))))

    def foot_from(self, horoball, x) -> HalfPlanePoint:
        """Nearest point of the horosphere to ``x`` (vertical projection after pullback)."""
        gamma = self.defining_element(horoball)
        w = complex(hp.mobius(np.array(modular.inv(gamma)), x.z))
        if abs(w.imag - self.height) <= 1e-15 * self.height:
            return x
        return HalfPlanePoint.of(complex(hp.mobius(np.array(gamma), complex(w.real, self.height))))

    def horoball(self, p, q) -> HoroballRef:
        """The horoball tangent at ``p/q`` with foot and ``t_U`` for the basepoint."""
        self._require_parabolics()
        g, qq = math.gcd(p, q), q
        if g != 1 or qq < 0:
            raise UsageError(f"cusp ({p}, {q}) must be in lowest terms with q >= 0")
        gamma = modular.cusp_element(p, q)
        element = modular.mul(gamma, modular.inv(self.class_elements[0]))
        ref = HoroballRef(0, element, (p, q))
        foot = self.foot_from(ref, self.basepoint)
        rep, rep_d = self._transversal(gamma, foot)
        return HoroballRef(0, element, (p, q), foot, self.distance(self.basepoint, foot), rep, rep_d)

    def horoball_of(self, cls, element) -> HoroballRef:
        if cls != 0:
            raise UsageError(f"unknown parabolic class {cls}")
        self._require_parabolics()
        gamma = modular.mul(element, self.class_elements[0])
        a, _, c, _ = gamma
        cusp = (1, 0) if c == 0 else ((a, c) if c > 0 else (-a, -c))
        return self.horoball(*cusp)

    def translate_horoball(self, g, horoball) -> HoroballRef:
        return self.horoball_of(horoball.cls, modular.mul(g, horoball.element))

    def horoball_arrays(self, center: HalfPlanePoint, radius: float):
        """Cusps ``(p, q)`` whose horosphere is within ``radius`` of ``center``.

        Returns int64 arrays ``p, q`` and the float array of distances from
        ``center`` to the horosphere (``|log(t |p - q z|^2 / Im z)|``), sorted by
        ``(distance, q, p)``.  Infinity appears as ``(1, 0)``.
        """
        self._require_parabolics()
        x, y, t = center.re, center.im, self.height
        bound = y * math.exp(radius) / t  # |p - q z|^2 <= bound
        qmax = int(math.floor(math.sqrt(bound) / y * (1 + 1e-12)))
        qs = np.arange(1, qmax + 1, dtype=np.int64)
        w = np.sqrt(np.maximum(bound - (qs * y) ** 2, 0.0))
        lo = np.floor(qs * x - w).astype(np.int64) - 1
        hi = np.ceil(qs * x + w).astype(np.int64) + 1
        cnt = hi - lo + 1
        idx = np.repeat(np.arange(len(qs)), cnt)
        off = np.arange(int(cnt.sum()), dtype=np.int64) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        ps = lo[idx] + off
        qq = qs[idx]
        keep = np.gcd(ps, qq) == 1
        ps, qq = ps[keep], qq[keep]
        ps = np.concatenate([[1], ps]).astype(np.int64)
        qq = np.concatenate([[0], qq]).astype(np.int64)
        with np.errstate(divide="ignore"):
            im = np.where(qq == 0, y, y / ((ps - qq * x) ** 2 + (qq * y) ** 2))
            d = np.abs(np.log(t / im))
        sel = d <= radius + 1e-12
        ps, qq, d = ps[sel], qq[sel], d[sel]
        order = np.lexsort((ps, qq, d))
        return ps[order], qq[order], d[order]

    def horoball_table(self, radius=None):
        """HoroballRefs with foot distance ``<= radius`` (default: the truncation radius)."""
        radius = self.truncation_radius if radius is None else float(radius)
        if radius > self.truncation_radius + 1e-12:
            raise TruncationError(f"radius {radius} exceeds truncation {self.truncation_radius}")
        if not self.class_elements:
            return []
        ps, qs, _ = self.horoball_arrays(self.basepoint, radius)
        return [self.horoball(int(p), int(q)) for p, q in zip(ps, qs)]

    # -- t_U and constants ---------------------------------------------------
    @cached_property
    def _near_horosphere(self):
        """Elements whose orbit points come within M of ``x + i t`` for some ``0 <= x <= 1``."""
        o = self.basepoint
        reach = (abs(math.log(o.im / self.height))
                 + math.acosh(1 + 1 / (2 * self.height ** 2)) + self.cocompactness_M + 0.5)
        elems = self.elements_within(reach)
        pts = hp.mobius(elems, o.z)
        return elems, pts

    def elements_within(self, radius: float) -> np.ndarray:
        """All elements with ``d(o, g o) <= radius`` (no truncation check; internal use)."""
        o = self.basepoint
        d_io = float(hp.dist(1j, o.z))
        elems = modular.frobenius_ball(modular.norm_bound(radius + 2 * d_io))
        if d_io == 0:
            return elems
        d = hp.dist(o.z, hp.mobius(elems, o.z))
        return elems[d <= radius + 1e-12]

    def _transversal(self, gamma, foot):
        """``t_U = gamma T^k f`` minimizing ``d(t_U o, foot)`` (deterministic ties)."""
        elems, pts = self._near_horosphere
        w = complex(hp.mobius(np.array(modular.inv(gamma)), foot.z))
        k0 = np.floor(w.real - pts.real).astype(np.int64)
        best = None
        for dk in (-1, 0, 1, 2):
            k = k0 + dk
            d = hp.dist(pts + k, w)
            j = int(np.argmin(d))
            cand = (float(d[j]), int(k[j]), tuple(int(v) for v in elems[j]))
            if best is None or cand < best:
                best = cand
        d, k, f = best
        rep = modular.mul(modular.mul(gamma, modular.power(modular.T, k)), f)
        return rep, d

    @cached_property
    def cocompactness_M(self) -> float:
        """Upper estimate of ``sup d(x, G o)`` over the complement of the horoballs.

        Sampled on a grid of the standard fundamental domain below height
        ``max(t, 1)`` (and on the horosphere itself), then padded by the grid
        spacing so it bounds the supremum.
        """
        o = self.basepoint
        t = self.height
        top = max(t, 1.0)
        xs = np.linspace(-0.5, 0.5, 81)
        ys = np.linspace(math.sqrt(3) / 2, top, 81)
        X, Y = np.meshgrid(xs, ys)
        Z = (X + 1j * Y).ravel()
        Z = Z[np.abs(Z) >= 1 - 1e-12]
        # drop interior points of the horoballs at inf, 0, +-1 (the only ones meeting the region)
        outside = Z.imag <= t
        for p, q in ((0, 1), (1, 1), (-1, 1)):
            outside &= hp.horoball_distance(Z, p, q, t) > 0
        Z = np.concatenate([Z[outside], xs + 1j * t])
        d_io = float(hp.dist(1j, o.z))
        reach = math.acosh(1 + (1 + top ** 2) / (2 * top * math.sqrt(3) / 2)) + 2 * d_io + 1.0
        elems = modular.frobenius_ball(modular.norm_bound(reach))
        pts = hp.mobius(elems, o.z)
        worst = 0.0
        for z in Z:
            worst = max(worst, float(np.min(hp.dist(pts, z))))
        spacing = float(hp.dist(1j * top, 1j * top + (xs[1] - xs[0]))) + float(
            hp.dist(1j * ys[0], 1j * ys[1]))
        return worst + spacing

    def bounded_intersection_diameter(self, eps: float) -> float:
        """``diam(N_eps(U_inf) cap N_eps(U_0))``, the largest over pairs of distinct horoballs.

        Every pair is a translate of ``(U_inf, U_{p/q})`` with ``q >= 1``, and
        ``q = 1`` gives the largest neighbourhood.  The intersection is convex;
        its diameter is found from boundary samples.
        """
        t = self.height
        h = t * math.exp(-eps)           # N_eps(U_inf) = {Im >= h}
        dia = math.exp(eps) / t          # N_eps(U_0) is the disc tangent at 0 of this diameter
        if h >= dia:
            return 0.0
        half = math.sqrt(h * (dia - h))
        th = np.linspace(0, 1, 400)
        # boundary: the chord at height h and the arc of the disc above it
        chord = -half + 2 * half * th + 1j * h
        phi0 = math.asin((h - dia / 2) / (dia / 2))
        ang = phi0 + (math.pi - 2 * phi0) * th
        arc = 1j * dia / 2 + (dia / 2) * np.exp(1j * ang)
        pts = np.concatenate([chord, arc])
        pts = pts[pts.imag >= h * (1 - 1e-12)]
        return float(np.max(hp.dist(pts[:, None], pts[None, :])))

    @cached_property
    def constants(self) -> ModelConstants:
        from ..space import estimate_hyperbolicity
        rng = np.random.default_rng(20240611)
        o = self.basepoint
        sample = []
        for _ in range(_DELTA_SAMPLE):
            r = _DELTA_RADIUS * math.sqrt(rng.uniform())
            th = rng.uniform(0, 2 * math.pi)
            # exponential map at o in the disk picture, pushed to the half-plane
            w = math.tanh(r / 2) * complex(math.cos(th), math.sin(th))
            z = 1j * (1 + w) / (1 - w)
            z = o.re + o.im * z
            sample.append(HalfPlanePoint.of(z))
        delta = estimate_hyperbolicity(self, sample, step=0.1)
        # horoballs are convex, so geodesics between their points stay inside
        return ModelConstants(delta_hat=delta, quasiconvexity_eps=0.0,
                              cocompactness_M=self.cocompactness_M,
                              triangle_sample=tuple(sample))

    def check_truncation(self, radius: float, what="query"):
        if radius > self.truncation_radius + 1e-9:
            raise TruncationError(
                f"{what} needs radius {radius:.6g} > truncation radius {self.truncation_radius:g}")

    def describe(self) -> dict:
        return {"backend": self.backend, "horoball_height": self.height,
                "truncation_radius": self.truncation_radius,
                "basepoint": [self.basepoint.re, self.basepoint.im]}
