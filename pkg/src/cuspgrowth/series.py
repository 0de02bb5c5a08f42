"""Weighted orbit series: Poincare partial sums, exponent fits and parabolic audits.

Every verdict here is a heuristic read off finite data.  The convergence rule:

* fit the slope ``beta`` of ``log(term)`` against ``log(index)`` over the last
  half of the terms (index = rank by distance), widened to every term in the
  outer half of the radius range, since with exponential growth the last half
  of the terms can sit inside a single distance shell;
* fit the decay rate ``lam`` of the per-unit-radius shell sums
  ``sum_{k-1 < d <= k} term`` against ``k`` over the last half of the shells;
* ``diverging`` if ``lam > -0.05`` (shells do not shrink: partial sums grow at
  least linearly in the radius) or ``beta > -0.9``; ``converging`` if
  ``beta < -1.1``; otherwise ``inconclusive``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import enumeration as en
from .errors import FitError, UsageError
from .models.groupspec import HALF_PLANE

CONVERGING = "converging"
DIVERGING = "diverging"
INCONCLUSIVE = "inconclusive"

_FLAT_SHELLS = -0.05
_MIN_FIT = 8


def _r(x):
    return None if x is None else (round(float(x), 12) if math.isfinite(x) else str(x))


@dataclass(frozen=True)
class SeriesEstimate:
    s: float
    cutoff: float
    checkpoints: tuple
    partial_sums: tuple
    n_terms: int
    total: float
    tail_slope: float | None
    tail_residual: float | None
    shell_rate: float | None
    verdict: str
    weight: str = "plain"
    radius_limit: float | None = None
    note: str = ""
    tail_window: tuple | None = None     # index range of the slope fit
    shell_window: tuple | None = None    # radius range of the shell-rate fit
    shell_residual: float | None = None

    def __post_init__(self):
        if list(self.checkpoints) != sorted(set(self.checkpoints)):
            raise UsageError("checkpoints must be strictly increasing")

    def gaps(self):
        """``{N: S_2N - S_N}`` over consecutive doubling checkpoints."""
        sums = dict(zip(self.checkpoints, self.partial_sums))
        return {n: sums[2 * n] - sums[n] for n in self.checkpoints if 2 * n in sums}

    def to_dict(self):
        return {"s": _r(self.s), "cutoff": _r(self.cutoff), "weight": self.weight,
                "checkpoints": list(self.checkpoints),
                "partial_sums": [_r(v) for v in self.partial_sums],
                "n_terms": self.n_terms, "total": _r(self.total),
                "tail_slope": _r(self.tail_slope), "tail_residual": _r(self.tail_residual),
                "shell_rate": _r(self.shell_rate), "verdict": self.verdict,
                "radius_limit": _r(self.radius_limit), "note": self.note,
                "tail_window": None if self.tail_window is None else list(self.tail_window),
                "shell_window": None if self.shell_window is None else list(self.shell_window),
                "shell_residual": _r(self.shell_residual)}


def _lstsq(x, y):
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid ** 2)))


def poincare_partial(distances, s, checkpoints=None, weight="plain", cutoff=0.0,
                     complete=False, radius_limit=None) -> SeriesEstimate:
    """Partial sums of ``sum w(d) exp(-s d)`` over the ``N`` closest elements.

    ``distances`` are ``d(o, g o)`` for the enumerated elements; ``weight`` is
    ``"plain"`` or ``"linear"`` (an extra factor ``d``).  Only terms with
    ``d >= cutoff`` count.  ``complete`` says the list is the whole (finite)
    set, which makes the series trivially convergent.  ``radius_limit`` is the
    enumeration radius; shells beyond it are incomplete and skipped in the fit.
    """
    if not s > 0:
        raise UsageError(f"exponent must be positive, got {s}")
    if weight not in ("plain", "linear"):
        raise UsageError(f"unknown weight {weight!r}")
    d = np.sort(np.asarray(distances, dtype=float), kind="stable")
    d = d[d >= cutoff - 1e-12]
    terms = np.exp(-s * d)
    if weight == "linear":
        terms = terms * d
    sums = np.cumsum(terms)
    n = len(d)
    if checkpoints is None:
        checkpoints = [1 << k for k in range(max(n, 1).bit_length()) if (1 << k) <= n]
    checkpoints = [int(c) for c in checkpoints if 1 <= c <= n]
    partial = tuple(float(sums[c - 1]) for c in checkpoints)
    total = float(sums[-1]) if n else 0.0

    beta = resid = rate = shell_resid = None
    tail_window = shell_window = None
    if n == 0 or complete:
        verdict = CONVERGING
        note = "empty set" if n == 0 else "finite set: all terms enumerated"
    else:
        limit = float(d[-1]) if radius_limit is None else float(radius_limit)
        start = min(n // 2, int(np.searchsorted(d, limit / 2, side="left")))
        half = np.arange(start, n)
        pos = terms[half] > 0
        if pos.sum() >= _MIN_FIT:
            beta, _, resid = _lstsq(np.log(half[pos] + 1.0), np.log(terms[half][pos]))
            tail_window = (int(start) + 1, int(n))
        kmax = int(math.floor(limit + 1e-9))
        if kmax >= 2:
            shell_idx = np.ceil(d - 1e-12).astype(int)
            shells = np.bincount(np.clip(shell_idx, 0, None), weights=terms, minlength=kmax + 1)[: kmax + 1]
            ks = np.arange(kmax // 2, kmax + 1)
            ks = ks[(ks >= 1) & (shells[ks] > 0)]
            if len(ks) >= 3:
                rate, _, shell_resid = _lstsq(ks.astype(float), np.log(shells[ks]))
                shell_window = (int(ks[0]), int(ks[-1]))
        if rate is not None and rate > _FLAT_SHELLS:
            verdict = DIVERGING
        elif beta is None:
            verdict = INCONCLUSIVE
        elif beta < -1.1:
            verdict = CONVERGING
        elif beta > -0.9:
            verdict = DIVERGING
        else:
            verdict = INCONCLUSIVE
        note = "heuristic verdict from finite data"
    return SeriesEstimate(float(s), float(cutoff), tuple(checkpoints), partial, n, total,
                          beta, resid, rate, verdict, weight,
                          None if radius_limit is None else float(radius_limit), note,
                          tail_window, shell_window, shell_resid)


# -- exponents -----------------------------------------------------------------

@dataclass(frozen=True)
class ExponentEstimate:
    delta_hat: float
    window: tuple
    radii: tuple
    log_ratios: tuple       # log(#N(o, n)) / n per radius in the window
    residual: float
    intercept: float

    def to_dict(self):
        return {"delta_hat": _r(self.delta_hat), "window": list(self.window),
                "radii": [_r(v) for v in self.radii],
                "log_ratios": [_r(v) for v in self.log_ratios],
                "residual": _r(self.residual), "intercept": _r(self.intercept)}


def fit_exponent(radii, counts, window) -> ExponentEstimate:
    """Least-squares slope of ``log(count)`` against ``n`` over ``window``."""
    lo, hi = window
    pts = [(float(n), int(c)) for n, c in zip(radii, counts) if lo - 1e-9 <= n <= hi + 1e-9]
    if len(pts) < 4:
        raise FitError(f"need at least 4 radii in the window {window}, got {len(pts)}")
    if any(c <= 0 for _, c in pts):
        raise FitError("counts in the fit window must be positive")
    x = np.array([p[0] for p in pts])
    y = np.log(np.array([p[1] for p in pts], dtype=float))
    slope, icpt, resid = _lstsq(x, y)
    ratios = tuple(float(v / n) if n > 0 else float("nan") for n, v in zip(x, y))
    return ExponentEstimate(max(slope, 0.0) if abs(slope) < 1e-12 else slope,
                            (float(lo), float(hi)), tuple(x.tolist()), ratios, resid, icpt)


def critical_exponent(table, window=None) -> ExponentEstimate:
    """Fit ``delta_hat`` from a GrowthTable.

    An orbit table with ``delta = inf`` holds shell counts, whose prefix sums are
    the ball counts ``#N(o, n)``; any other table is fitted as it stands
    (annulus counts grow at the same exponential rate as balls).
    """
    radii = table.radii
    counts = table.counts
    if table.kind == "orbit" and math.isinf(table.delta):
        counts = list(np.cumsum(counts))
    window = (min(radii), max(radii)) if window is None else window
    return fit_exponent(radii, counts, window)


def orbit_exponent(model, window=(6, 12), center=None) -> ExponentEstimate:
    radii = list(range(int(window[0]), int(window[1]) + 1))
    return fit_exponent(radii, en.ball_counts(model, radii, center), window)


def parabolic_exponent(model, horoball, v=None, window=(6, 12)) -> ExponentEstimate:
    """Exponent of ``#{p in G_U : d(v, p v) <= n}`` over ``window``."""
    v = en.foot(model, horoball) if v is None else v
    radii = list(range(int(window[0]), int(window[1]) + 1))
    _, d = en.parabolic_distances(model, horoball, v, radii[-1])
    counts = [int(np.searchsorted(d, n + 1e-9, side="right")) for n in radii]
    return fit_exponent(radii, counts, window)


def divergence_diagnostic(distances, delta_hat, radius_limit=None, complete=False) -> SeriesEstimate:
    """The Poincare series at ``s = delta_hat`` with the heuristic verdict."""
    est = poincare_partial(distances, delta_hat, radius_limit=radius_limit, complete=complete)
    return SeriesEstimate(**{**est.__dict__, "note": est.note + "; divergence cannot be decided "
                             "from finitely many terms"})


# -- parabolic audits ------------------------------------------------------------

def default_parabolic_reach(model) -> float:
    """Radius out to which parabolic elements are summed (no truncation applies)."""
    return 24.0 if model.backend == HALF_PLANE else float(8 * max(model.depth, 1) + 16)


def default_parabolic_window(model):
    if model.backend == HALF_PLANE:
        return (6, 12)
    return (1, max(4, 2 * model.depth))


def class_horoballs(model):
    """The representative horoball ``U_k`` of each parabolic class."""
    if not model.has_parabolics:
        return []
    if model.backend == HALF_PLANE:
        return [model.horoball_of(0, model.identity)]
    return [model.horoball_of(c, model.identity) for c in range(len(model.class_gens))]


def annulus_weights(d, delta, s, m_max):
    """``a_m = #{d in [m - delta, m + delta)} exp(-s m)`` for integers ``0 <= m <= m_max``."""
    ms = np.arange(0, int(m_max) + 1)
    lo = np.searchsorted(d, ms - delta - 1e-9, side="left")
    hi = np.searchsorted(d, ms + delta - 1e-9, side="left")
    return ms, (hi - lo) * np.exp(-s * ms)


@dataclass(frozen=True)
class DopClass:
    cls: int
    basepoint: object
    delta_hat_P: ExponentEstimate
    pgp: bool
    pcp: SeriesEstimate
    dop: SeriesEstimate
    double_sum: float
    linear_sum: float
    ratio: float
    max_gap_from_128: float | None

    def to_dict(self):
        return {"cls": self.cls, "basepoint": repr(self.basepoint),
                "delta_hat_P": self.delta_hat_P.to_dict(), "pgp": self.pgp,
                "pcp": self.pcp.to_dict(), "dop": self.dop.to_dict(),
                "double_sum": _r(self.double_sum), "linear_sum": _r(self.linear_sum),
                "ratio": _r(self.ratio), "max_gap_from_128": _r(self.max_gap_from_128)}


@dataclass(frozen=True)
class DopReport:
    delta_hat_G: float
    delta: float
    classes: tuple
    vacuous: bool
    note: str = ""

    def to_dict(self):
        return {"delta_hat_G": _r(self.delta_hat_G), "delta": _r(self.delta),
                "vacuous": self.vacuous, "note": self.note,
                "classes": [c.to_dict() for c in self.classes]}


def dop_audit(model, delta_hat, delta=1.0, reach=None, window=None) -> DopReport:
    """PGP, PCP and DOP estimates for each parabolic class, at the class foot.

    The double-sum form is ``sum_{j >= 1} sum_{m >= j} a_m = sum_m m a_m`` with
    ``a_m = #A_U(v, m, delta) exp(-delta_hat m)`` over integers ``m``.
    """
    if not model.has_parabolics:
        return DopReport(float(delta_hat), float(delta), (), True,
                         "no parabolic classes: DOP holds vacuously")
    reach = default_parabolic_reach(model) if reach is None else float(reach)
    window = default_parabolic_window(model) if window is None else window
    out = []
    for U in class_horoballs(model):
        v = en.foot(model, U)
        _, d = en.parabolic_distances(model, U, v, reach)
        exp_p = parabolic_exponent(model, U, v, window)
        pcp = poincare_partial(d, delta_hat, radius_limit=reach)
        dop = poincare_partial(d, delta_hat, weight="linear", radius_limit=reach)
        m_max = math.floor(reach - delta)
        ms, a = annulus_weights(d, delta, delta_hat, m_max)
        double = float(np.sum(ms * a))
        # compare on the same range: elements whose every annulus index is <= m_max
        lin = float(np.sum((d * np.exp(-delta_hat * d))[d < m_max - delta + 1]))
        gaps = [abs(g) for n, g in dop.gaps().items() if n >= 128]
        out.append(DopClass(U.cls, v, exp_p, bool(delta_hat > exp_p.delta_hat), pcp, dop,
                            double, lin, double / lin if lin > 0 else float("inf"),
                            max(gaps) if gaps else None))
    return DopReport(float(delta_hat), float(delta), tuple(out), False,
                     "DOP evaluated at the fitted exponent, not the true critical exponent")


def s_series(model, horoball, z, w, R, s, reach=None) -> SeriesEstimate:
    """``S_Y(z, w, R) = sum_{h in G_Y, d(z, h w) >= R} exp(-s d(z, h w))``."""
    reach = default_parabolic_reach(model) if reach is None else float(reach)
    if R > reach:
        return poincare_partial([], s, cutoff=R)
    _, d = en.parabolic_distances(model, horoball, z, reach, w)
    return poincare_partial(d, s, cutoff=R, radius_limit=reach)


def a_series(model, horoball, z, R, delta, s, reach=None) -> float:
    """``A_Y(z, R, Delta) = sum_{integers n >= R} #A_Y(z, n, Delta) exp(-s n)``."""
    reach = default_parabolic_reach(model) if reach is None else float(reach)
    m_max = math.floor(reach - delta)
    if R > m_max:
        return 0.0
    _, d = en.parabolic_distances(model, horoball, z, reach)
    ms, a = annulus_weights(d, delta, s, m_max)
    return float(a[ms >= R - 1e-12].sum())


@dataclass(frozen=True)
class ConversionReport:
    delta: float
    s: float
    grid: tuple
    s_values: tuple
    a_values: tuple
    ratios: tuple
    c: float
    ceiling: float
    ok: bool
    conjugate_K: int | None
    conjugate_rows: tuple = field(default=())
    notes: tuple = ()

    def to_dict(self):
        return {"delta": self.delta, "s": _r(self.s), "grid": list(self.grid),
                "S": [_r(v) for v in self.s_values], "A": [_r(v) for v in self.a_values],
                "ratios": [_r(v) for v in self.ratios], "c": _r(self.c),
                "ceiling": self.ceiling, "ok": self.ok, "conjugate_K": self.conjugate_K,
                "conjugate_rows": [[_r(x) for x in row] for row in self.conjugate_rows],
                "notes": list(self.notes)}


def conversion_check(model, horoball, o=None, grid=(2, 3, 4, 5), delta=1.0, s=1.0,
                     ceiling=10.0, conjugator=None, k_max=8, reach=None) -> ConversionReport:
    """Two-sided ratio ``S_Y(o, o, R - Delta) / A_Y(o, R, Delta)`` over ``grid``.

    ``c`` is the smallest constant with every ratio in ``[1/c, c]``.  With a
    ``conjugator`` ``g`` the shifted-window comparison between ``V = horoball``
    and ``U = g V`` is also checked: the smallest integer ``K <= k_max`` with
    ``A_V(y, R + K) <= c A_U(x, R)`` and ``A_U(x, R) <= c A_V(y, R - K)`` on the
    grid, where ``x, y`` are the feet of ``U, V``.
    """
    o = en.foot(model, horoball) if o is None else o
    svals, avals, ratios, notes = [], [], [], []
    for R in grid:
        sv = s_series(model, horoball, o, o, R - delta, s, reach).total
        av = a_series(model, horoball, o, R, delta, s, reach)
        svals.append(sv)
        avals.append(av)
        if av == 0:
            ratios.append(float("nan"))
            notes.append(f"R={R}: empty tail, ratio skipped")
        else:
            ratios.append(sv / av)
    good = [r for r in ratios if math.isfinite(r) and r > 0]
    c = max([max(r, 1 / r) for r in good], default=1.0)
    K, rows = None, []
    if conjugator is not None:
        U = model.translate_horoball(conjugator, horoball)
        x = en.foot(model, U)
        y = en.foot(model, horoball)
        for k in range(k_max + 1):
            rows = []
            ok = True
            for R in grid:
                au = a_series(model, U, x, R, delta, s, reach)
                lo = a_series(model, horoball, y, R + k, delta, s, reach)
                hi = a_series(model, horoball, y, max(R - k, 0), delta, s, reach)
                rows.append((R, k, lo, au, hi))
                ok &= lo <= c * au + 1e-15 and au <= c * hi + 1e-15
            if ok:
                K = k
                break
    return ConversionReport(float(delta), float(s), tuple(grid), tuple(svals), tuple(avals),
                            tuple(ratios), c, float(ceiling), c <= ceiling, K, tuple(rows),
                            tuple(notes))
