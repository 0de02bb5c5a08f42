"""Closed-form geometry of the upper half-plane.

Everything here is vectorized over numpy arrays and works on plain complex
numbers; the model layer wraps these in typed points.

Geodesic lines are stored in one of two shapes:

* vertical: ``z(tau) = x0 + i*exp(tau)``
* semicircle: ``z(tau) = c + rho*(tanh(tau) + i*sech(tau))``

Both are unit speed in ``tau``.  For the semicircle the Mobius map
``A(z) = (z - (c - rho)) / ((c + rho) - z)`` sends ``z(tau)`` to ``i*exp(tau)``,
which gives projections and perpendicular distances in closed form.

A :class:`Segment` is a line together with a start parameter ``tau0``, a
direction ``sign`` and an arclength ``length`` (``inf`` for rays).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_VERTICAL_TOL = 1e-12


def arccosh1p(u):
    """``arccosh(1 + u)`` for ``u >= 0`` without cancellation near ``u = 0``."""
    u = np.asarray(u, dtype=float)
    return np.log1p(u + np.sqrt(u * (u + 2.0)))


def dist(z, w):
    """Hyperbolic distance; ``cosh d = 1 + |z-w|^2 / (2 Im z Im w)``.

    Evaluated as ``2 asinh(|z-w| / (2 sqrt(Im z Im w)))``, which is the same
    quantity but stays accurate for nearby points.
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return 2.0 * np.arcsinh(np.abs(z - w) / (2.0 * np.sqrt(z.imag * w.imag)))


def dist_from_i_by_norm(norm_sq):
    """Distance from ``i`` to ``g i`` given ``a^2+b^2+c^2+d^2`` of ``g`` in SL(2,R)."""
    return arccosh1p((np.asarray(norm_sq, dtype=float) - 2.0) / 2.0)


def mobius(m, z):
    """Apply ``m = (a, b, c, d)`` (last axis) to ``z``; ``z = inf`` is allowed."""
    m = np.asarray(m)
    a, b, c, d = (m[..., k].astype(float) for k in range(4))
    z = np.asarray(z, dtype=complex)
    return (a * z + b) / (c * z + d)


def mobius_boundary(m, xi):
    """Apply ``m`` to a boundary point ``xi`` in R u {inf}; returns floats (inf allowed)."""
    a, b, c, d = (float(v) for v in m)
    if np.isinf(xi):
        return np.inf if c == 0 else a / c
    den = c * xi + d
    if den == 0:
        return np.inf
    return (a * xi + b) / den


def invert(m):
    a, b, c, d = m
    return (d, -b, -c, a)


def matmul(m, n):
    a, b, c, d = m
    e, f, g, h = n
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


@dataclass(frozen=True)
class Line:
    vertical: np.ndarray
    x0: np.ndarray
    c: np.ndarray
    rho: np.ndarray

    def tau_and_perp(self, z):
        """Projection parameter of ``z`` and its distance to the line."""
        z = np.asarray(z, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi1 = self.c - self.rho
            xi2 = self.c + self.rho
            az = (z - xi1) / (xi2 - z)
            tau_c = np.log(np.abs(az))
            perp_c = np.arcsinh(np.abs(az.real) / az.imag)
            rel = z - self.x0
            tau_v = np.log(np.abs(rel))
            perp_v = np.arcsinh(np.abs(rel.real) / z.imag)
        tau = np.where(self.vertical, tau_v, tau_c)
        perp = np.where(self.vertical, perp_v, perp_c)
        return tau, perp

    def point(self, tau):
        tau = np.asarray(tau, dtype=float)
        with np.errstate(over="ignore"):
            zc = self.c + self.rho * (np.tanh(tau) + 1j / np.cosh(tau))
            zv = self.x0 + 1j * np.exp(tau)
        return np.where(self.vertical, zv, zc)


def _line_from_arrays(vertical, x0, c, rho):
    return Line(np.asarray(vertical, bool), np.asarray(x0, float),
                np.asarray(c, float), np.asarray(rho, float))


def line_through(z0, z1):
    """The geodesic line through two interior points."""
    z0 = np.asarray(z0, dtype=complex)
    z1 = np.asarray(z1, dtype=complex)
    dx = z1.real - z0.real
    vertical = np.abs(dx) <= _VERTICAL_TOL * np.maximum(1.0, np.abs(z0.real))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (np.abs(z1) ** 2 - np.abs(z0) ** 2) / (2.0 * dx)
        rho = np.abs(z0 - c)
    c = np.where(vertical, 0.0, c)
    rho = np.where(vertical, 1.0, rho)
    return _line_from_arrays(vertical, z0.real, c, rho)


def line_between_boundary(xi, zeta):
    """The geodesic line with boundary endpoints ``xi``, ``zeta`` (scalars)."""
    if np.isinf(xi) or np.isinf(zeta):
        x0 = zeta if np.isinf(xi) else xi
        return _line_from_arrays(True, x0, 0.0, 1.0)
    return _line_from_arrays(False, 0.0, (xi + zeta) / 2.0, abs(xi - zeta) / 2.0)


@dataclass(frozen=True)
class Segment:
    """Unit-speed geodesic arc ``s -> line.point(tau0 + sign*s)`` for ``0 <= s <= length``."""

    line: Line
    tau0: np.ndarray
    sign: np.ndarray
    length: np.ndarray

    def point(self, s):
        return self.line.point(self.tau0 + self.sign * np.asarray(s, dtype=float))

    def param(self, z):
        """Arclength coordinate of the projection of ``z`` and the perpendicular distance."""
        tau, perp = self.line.tau_and_perp(z)
        return self.sign * (tau - self.tau0), perp

    def distance_to(self, p):
        """Exact distance from ``p`` to the arc (distance along a geodesic is convex)."""
        s, _ = self.param(p)
        s = np.clip(s, 0.0, self.length)
        return dist(p, self.point(s))

    def ball_interval(self, p, radius):
        """Arclength interval of points within ``radius`` of ``p`` (empty as lo > hi)."""
        s_p, perp = self.param(p)
        with np.errstate(invalid="ignore"):
            ratio = np.cosh(radius) / np.cosh(perp)
            half = np.where(ratio >= 1.0, np.arccosh(np.maximum(ratio, 1.0)), -np.inf)
        lo = np.maximum(s_p - half, 0.0)
        hi = np.minimum(s_p + half, self.length)
        empty = ~(half >= 0)
        return np.where(empty, np.inf, lo), np.where(empty, -np.inf, hi)

    def horoball_interval(self, p, q, height):
        """Arclength interval inside the horoball ``g{Im >= height}`` tangent at ``p/q``.

        ``q == 0`` stands for the horoball at infinity (with ``p == 1``).  Horoballs
        are convex, so the intersection with a geodesic is a single interval.
        """
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        line = self.line
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            # semicircle: A x^2 - C x + B <= 0 with x = exp(tau)
            pp = p - q * line.c
            qr = q * line.rho
            qa = (pp - qr) ** 2
            qb = (pp + qr) ** 2
            cc = 2.0 * line.rho / height
            disc = cc * cc - 4.0 * qa * qb
            root = np.sqrt(np.maximum(disc, 0.0))
            x_lo = np.where(qb == 0, 0.0, 2.0 * qb / (cc + root))
            x_hi = np.where(qa == 0, np.inf, (cc + root) / (2.0 * qa))
            ok_c = disc >= 0
            tlo_c = np.log(x_lo)
            thi_c = np.log(x_hi)
            # vertical: height q^2 y^2 - y + height P0^2 <= 0 with y = exp(tau)
            p0 = p - q * line.x0
            a2 = height * q * q
            c2 = height * p0 * p0
            disc_v = 1.0 - 4.0 * a2 * c2
            root_v = np.sqrt(np.maximum(disc_v, 0.0))
            y_lo = np.where(q == 0, height, np.where(c2 == 0, 0.0, 2.0 * c2 / (1.0 + root_v)))
            y_hi = np.where(q == 0, np.inf, (1.0 + root_v) / (2.0 * a2))
            ok_v = (q == 0) | (disc_v >= 0)
            tlo_v = np.log(y_lo)
            thi_v = np.log(y_hi)
        ok = np.where(line.vertical, ok_v, ok_c)
        tlo = np.where(line.vertical, tlo_v, tlo_c)
        thi = np.where(line.vertical, thi_v, thi_c)
        up = self.sign > 0
        s_lo = np.where(up, tlo - self.tau0, self.tau0 - thi)
        s_hi = np.where(up, thi - self.tau0, self.tau0 - tlo)
        s_lo = np.maximum(s_lo, 0.0)
        s_hi = np.minimum(s_hi, self.length)
        empty = ~ok | (s_lo > s_hi)
        return np.where(empty, np.inf, s_lo), np.where(empty, -np.inf, s_hi)


def segment(z0, z1):
    """Geodesic segment from ``z0`` to ``z1`` (vectorized over either argument)."""
    z0 = np.asarray(z0, dtype=complex)
    z1 = np.asarray(z1, dtype=complex)
    line = line_through(z0, z1)
    t0, _ = line.tau_and_perp(z0)
    t1, _ = line.tau_and_perp(z1)
    sign = np.where(t1 >= t0, 1.0, -1.0)
    return Segment(line, t0, sign, np.abs(t1 - t0))


def ray(z0, xi):
    """Geodesic ray from interior ``z0`` to boundary point ``xi`` (vectorized over ``xi``)."""
    z0 = complex(z0)
    xi = np.asarray(xi, dtype=float)
    x0 = z0.real
    at_inf = np.isinf(xi)
    below = ~at_inf & (np.abs(xi - x0) <= _VERTICAL_TOL * max(1.0, abs(x0)))
    vertical = at_inf | below
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (xi * xi - abs(z0) ** 2) / (2.0 * (xi - x0))
        rho = np.abs(xi - c)
    c = np.where(vertical, 0.0, c)
    rho = np.where(vertical, 1.0, rho)
    line = _line_from_arrays(vertical, np.full(xi.shape, x0), c, rho)
    t0, _ = line.tau_and_perp(z0)
    sign = np.where(at_inf, 1.0, np.where(below, -1.0, np.where(xi > c, 1.0, -1.0)))
    return Segment(line, t0, sign, np.full(xi.shape, np.inf))


def forward_endpoint(z0, z1):
    """Boundary endpoint reached by continuing the geodesic from ``z0`` through ``z1``."""
    seg = segment(z0, z1)
    line = seg.line
    end_c = np.where(seg.sign > 0, line.c + line.rho, line.c - line.rho)
    end_v = np.where(seg.sign > 0, np.inf, line.x0)
    return np.where(line.vertical, end_v, end_c)


def horoball_distance(z, p, q, height):
    """Distance from ``z`` to the horoball ``{Im >= height}`` pulled along to the cusp ``p/q``.

    By pullback, ``Im(g^-1 z) = Im z / |p - q z|^2`` for any ``g`` with ``g(inf) = p/q``,
    and the distance to ``{Im >= height}`` is ``max(0, log(height / Im))``.
    """
    z = np.asarray(z, dtype=complex)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    im = z.imag / np.abs(p - q * z) ** 2
    return np.maximum(0.0, np.log(height / im))


def busemann(xi, x, y):
    """``B_xi(x, y) = lim d(x, z) - d(y, z)`` as ``z -> xi``.

    Positive when ``y`` is closer to ``xi`` than ``x``; for ``xi = inf`` this is
    ``log Im y - log Im x``.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if np.isinf(xi):
        return np.log(y.imag) - np.log(x.imag)
    im_x = x.imag / np.abs(x - xi) ** 2
    im_y = y.imag / np.abs(y - xi) ** 2
    return np.log(im_y) - np.log(im_x)
