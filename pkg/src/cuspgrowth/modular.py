"""Integer arithmetic for the modular group PSL(2, Z).

Elements are 4-tuples ``(a, b, c, d)`` of Python ints with ``ad - bc = 1``,
normalized so the first nonzero entry is positive.  Two enumerators of the
Frobenius ball ``{g : a^2 + b^2 + c^2 + d^2 <= X}`` live here; because
``cosh d(i, g i) = (a^2 + b^2 + c^2 + d^2) / 2`` this ball is ``N(i, arccosh(X/2))``.

* :func:`frobenius_ball` loops over primitive first rows ``(a, b)`` and solves
  for the second rows ``(c0 + k a, d0 + k b)`` in closed form (numpy).
* :func:`bfs_ball` walks outward from the identity by left multiplication with
  ``T``, ``T^-1`` and ``S``, discarding anything over the norm bound.  This is
  complete: reducing ``z = g i`` into the standard fundamental domain uses
  ``T^-1``/``T`` steps that strictly lower ``cosh d(i, z)`` and ``S`` steps that
  keep it, and ends in the stabilizer ``{I, S}`` of ``i``; read backwards, it is
  a path from the identity that never exceeds the norm of ``g``.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from .errors import SpecError

IDENTITY = (1, 0, 0, 1)
T = (1, 1, 0, 1)
T_INV = (1, -1, 0, 1)
S = (0, 1, -1, 0)  # canonical sign of [[0, -1], [1, 0]]


def canonical(m):
    """Sign-normalized representative; raises SpecError unless ``det == 1``."""
    try:
        a, b, c, d = (int(v) for v in m)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"not a 2x2 integer matrix: {m!r}") from exc
    if any(int(v) != v for v in m):
        raise SpecError(f"not an integer matrix: {m!r}")
    if a * d - b * c != 1:
        raise SpecError(f"determinant of {(a, b, c, d)} is {a * d - b * c}, not 1")
    for v in (a, b, c, d):
        if v != 0:
            return (a, b, c, d) if v > 0 else (-a, -b, -c, -d)
    raise SpecError("zero matrix")  # unreachable for det 1


def mul(m, n):
    a, b, c, d = m
    e, f, g, h = n
    return canonical_unchecked((a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h))


def canonical_unchecked(m):
    for v in m:
        if v != 0:
            return tuple(m) if v > 0 else tuple(-x for x in m)
    return tuple(m)


def inv(m):
    a, b, c, d = m
    return canonical_unchecked((d, -b, -c, a))


def power(m, k):
    out = IDENTITY
    base = m if k >= 0 else inv(m)
    for _ in range(abs(k)):
        out = mul(out, base)
    return out


def norm_sq(m):
    return sum(v * v for v in m)


def norm_bound(radius: float) -> int:
    """Largest Frobenius norm ``X`` with ``arccosh(X/2) <= radius`` (tiny relative slack)."""
    if radius < 0:
        return 1  # only the empty ball; every element has norm >= 2
    return math.floor(2.0 * math.cosh(radius) * (1.0 + 1e-12))


def egcd(a: int, b: int):
    """``(g, x, y)`` with ``a x + b y = g = gcd(a, b) >= 0``."""
    old_r, r, old_s, s, old_t, t = a, b, 1, 0, 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def egcd_vec(a, b):
    """Vectorized extended gcd; returns ``(g, x, y)`` with ``a x + b y = g``."""
    old_r, r = a.copy(), b.copy()
    old_s, s = np.ones_like(a), np.zeros_like(a)
    old_t, t = np.zeros_like(a), np.ones_like(a)
    while np.any(r != 0):
        nz = r != 0
        q = np.zeros_like(r)
        q[nz] = old_r[nz] // r[nz]
        old_r, r = np.where(nz, r, old_r), np.where(nz, old_r - q * r, r)
        old_s, s = np.where(nz, s, old_s), np.where(nz, old_s - q * s, s)
        old_t, t = np.where(nz, t, old_t), np.where(nz, old_t - q * t, t)
    return old_r, old_s, old_t


def cusp_element(p: int, q: int):
    """The canonical ``g`` with ``g(inf) = p/q`` used to label the horoball at ``p/q``.

    ``(p, q)`` must be in lowest terms with ``q >= 0`` (``(1, 0)`` is infinity).
    The second column ``(r, s)`` is fixed by ``0 <= s < q``, which pins down
    the coset ``g <T>``.
    """
    if q == 0:
        if p != 1:
            raise SpecError("infinity is written (1, 0)")
        return IDENTITY
    if q < 0 or math.gcd(p, q) != 1:
        raise SpecError(f"cusp ({p}, {q}) not in lowest terms with q > 0")
    _, x, _ = egcd(p, q)
    s = x % q  # p s = 1 mod q
    r = (p * s - 1) // q
    return canonical_unchecked((p, r, q, s))


def fixed_cusp(m):
    """Boundary fixed point ``(p, q)`` of a parabolic element (lowest terms, q >= 0)."""
    a, b, c, d = m
    if abs(a + d) != 2 or (b == 0 and c == 0):
        raise SpecError(f"{m} is not parabolic")
    if c == 0:
        return (1, 0)
    num, den = a - d, 2 * c
    g = math.gcd(num, den)
    num, den = num // g, den // g
    if den < 0:
        num, den = -num, -den
    return (num, den)


def frobenius_ball(x_max: int) -> np.ndarray:
    """All canonical elements with Frobenius norm ``<= x_max`` as an ``(N, 4)`` int64 array."""
    x_max = int(x_max)
    if x_max < 2:
        return np.zeros((0, 4), dtype=np.int64)
    m = math.isqrt(x_max)
    a = np.arange(0, m + 1, dtype=np.int64)
    b = np.arange(-m, m + 1, dtype=np.int64)
    A, B = (v.ravel() for v in np.meshgrid(a, b, indexing="ij"))
    keep = ((A > 0) | ((A == 0) & (B > 0))) & (A * A + B * B <= x_max)
    A, B = A[keep], B[keep]
    g, x, y = egcd_vec(A, B)
    prim = np.abs(g) == 1
    A, B, x, y, g = A[prim], B[prim], x[prim], y[prim], g[prim]
    x, y = x * g, y * g
    c0, d0 = -y, x  # a d0 - b c0 = 1
    nrm = A * A + B * B
    # second rows (c0 + k a, d0 + k b): a quadratic inequality in k
    lin = (A * c0 + B * d0).astype(float)
    const = (c0 * c0 + d0 * d0 - (x_max - nrm)).astype(float)
    disc = lin * lin - nrm * const
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    klo = np.floor((-lin - sq) / nrm).astype(np.int64) - 1
    khi = np.ceil((-lin + sq) / nrm).astype(np.int64) + 1
    cnt = np.where(ok, khi - klo + 1, 0)
    idx = np.repeat(np.arange(len(A)), cnt)
    off = np.arange(int(cnt.sum()), dtype=np.int64) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    k = klo[idx] + off
    a_, b_ = A[idx], B[idx]
    c_, d_ = c0[idx] + k * a_, d0[idx] + k * b_
    sel = a_ * a_ + b_ * b_ + c_ * c_ + d_ * d_ <= x_max
    out = np.stack([a_[sel], b_[sel], c_[sel], d_[sel]], axis=1)
    order = np.lexsort(out.T[::-1])
    return out[order]


def bfs_ball(x_max: int) -> set:
    """Independent oracle for :func:`frobenius_ball`: a pruned breadth-first search."""
    x_max = int(x_max)
    if x_max < 2:
        return set()
    seen = {IDENTITY}
    queue = deque([IDENTITY])
    while queue:
        a, b, c, d = queue.popleft()
        for nxt in ((a + c, b + d, c, d), (a - c, b - d, c, d), (-c, -d, a, b)):
            if nxt[0] * nxt[0] + nxt[1] * nxt[1] + nxt[2] * nxt[2] + nxt[3] * nxt[3] > x_max:
                continue
            nxt = canonical_unchecked(nxt)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen
