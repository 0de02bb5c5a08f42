"""Command-line runs over group-spec files.

Usage::

    cuspgrowth --spec specs/psl2z.yaml --command growth --kind orbit --out orbit.csv

Exit statuses: 0 ok, 1 some audit inconclusive or over its ceiling, 2 input error.
Outputs are written atomically and depend only on the spec, the flags and the seed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import boundary as bd
from . import enumeration as en
from . import series as se
from .errors import CuspGrowthError, SpecError, TruncationError, UsageError
from .models import HALF_PLANE, build_model, load_spec

EXIT_OK, EXIT_INCONCLUSIVE, EXIT_INPUT = 0, 1, 2
COMMANDS = ("growth", "exponent", "dop", "shadow-audit", "theorem-audit")
FORMATS = ("csv", "json", "text")
CONSISTENT, INCONSISTENT, INCONCLUSIVE, VACUOUS = (
    "consistent with", "inconsistent with", "inconclusive", "vacuous")

# which overrides each command accepts (``seed`` is accepted everywhere)
_ALLOWED = {
    "growth": {"kind", "delta", "window", "r", "eps", "R", "element"},
    "exponent": {"window"},
    "dop": {"delta", "window"},
    "shadow-audit": {"r", "eps", "R", "s", "T", "ceiling"},
    "theorem-audit": {"delta", "window", "r", "eps", "R", "ceiling", "element"},
}
_FLAG = {"kind": "--kind", "delta": "--delta-width", "window": "--window", "r": "--shadow-r",
         "eps": "--eps", "R": "--big-r", "s": "--s", "T": "--cutoff-t", "ceiling": "--ceiling",
         "element": "--element"}


@dataclass(frozen=True)
class RunConfig:
    spec_path: str
    command: str
    out: str | None = None
    fmt: str = "csv"
    seed: int = 0
    overrides: dict = field(default_factory=dict)

    def get(self, key, default=None):
        v = self.overrides.get(key)
        return default if v is None else v


@dataclass(frozen=True)
class ReportRow:
    audit: str
    key: str
    value: object
    provenance: str          # exact | fitted | sampled
    params: dict = field(default_factory=dict)


@dataclass
class Report:
    command: str
    echo: dict
    rows: list = field(default_factory=list)
    table: object = None     # a GrowthTable for ``growth``
    verdicts: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    status: int = EXIT_OK

    def add(self, audit, key, value, provenance, **params):
        self.rows.append(ReportRow(audit, key, value, provenance, params))


def parse_window(text):
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"window must look like n1:n2, got {text!r}") from None
    if not 0 <= lo < hi:
        raise UsageError(f"window needs 0 <= n1 < n2, got {text!r}")
    return (lo, hi)


def build_parser():
    p = argparse.ArgumentParser(prog="cuspgrowth", description=__doc__.split("\n\n")[0])
    p.add_argument("--spec", required=True, help="group-spec YAML file")
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--format", dest="fmt", default="csv", choices=FORMATS + ("json-like",),
                   help="json-like is an alias for json")
    p.add_argument("--seed", type=int, default=0, help="seed for sampled audits")
    p.add_argument("--kind", choices=en.KINDS, help="growth table kind")
    p.add_argument("--delta-width", dest="delta", type=float, help="annulus half-width Delta")
    p.add_argument("--window", type=parse_window, help="radius window n1:n2")
    p.add_argument("--shadow-r", dest="r", type=float, help="shadow / cone radius r")
    p.add_argument("--eps", type=float, help="transition parameter epsilon")
    p.add_argument("--big-r", dest="R", type=float, help="transition parameter R")
    p.add_argument("--s", type=float, help="Patterson-Sullivan exponent s")
    p.add_argument("--cutoff-t", dest="T", type=float, help="approximant cutoff T")
    p.add_argument("--ceiling", type=float, help="max/min ceiling for spread checks")
    p.add_argument("--element", help="group element for cones (word or a,b,c,d)")
    return p


def config_from_args(ns) -> RunConfig:
    overrides = {k: getattr(ns, k) for k in _FLAG}
    bad = sorted(_FLAG[k] for k, v in overrides.items()
                 if v is not None and k not in _ALLOWED[ns.command])
    if bad:
        raise UsageError(f"{', '.join(bad)} not used by --command {ns.command}")
    fmt = "json" if ns.fmt == "json-like" else ns.fmt
    return RunConfig(ns.spec, ns.command, ns.out, fmt, ns.seed,
                     {k: v for k, v in overrides.items() if v is not None})


# -- helpers ----------------------------------------------------------------------

def _element(model, text):
    if text is None:
        return model.identity
    if model.backend == HALF_PLANE:
        try:
            vals = [int(v) for v in text.replace(" ", "").split(",")]
        except ValueError:
            raise UsageError(f"half-plane elements are a,b,c,d integers, got {text!r}") from None
        return model.canonical(tuple(vals))
    return model.canonical(text)


def _params(cfg):
    d = bd.TransitionParams()
    return bd.TransitionParams(eps=cfg.get("eps", d.eps), R=cfg.get("R", d.R),
                               r=cfg.get("r", d.r), delta=cfg.get("delta", d.delta))


def _growth_window(model, cfg, delta, shift=0.0):
    if "window" in cfg.overrides:
        return cfg.overrides["window"]
    hi = math.floor(min(12.0, model.truncation_radius - delta - shift) + 1e-9)
    return (float(max(1, hi - 6)), float(hi))


def _radii(window):
    lo, hi = window
    return [float(n) for n in range(int(math.ceil(lo)), int(math.floor(hi)) + 1)]


def _ratio(values):
    vals = [v for v in values]
    if not vals or min(vals) <= 0:
        return math.inf
    return max(vals) / min(vals)


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return int(bool(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return str(v)
        return int(v) if v.is_integer() and abs(v) < 1e15 else round(v, 12)
    return v


def _echo(model, cfg, spec):
    return {"spec": spec.to_dict(), "spec_file": os.path.basename(cfg.spec_path),
            "command": cfg.command, "seed": cfg.seed,
            "truncation_radius": _num(model.truncation_radius),
            "overrides": {k: (list(v) if isinstance(v, tuple) else v)
                          for k, v in sorted(cfg.overrides.items())}}


# -- commands ---------------------------------------------------------------------

def cmd_growth(model, cfg, report):
    kind = cfg.get("kind", "orbit")
    delta = cfg.get("delta", 1.0)
    dh = bd.sampled_delta_hat(model)
    if kind in ("cone", "partial_cone"):
        g = _element(model, cfg.get("element"))
        params = bd.TransitionParams(eps=cfg.get("eps", 1.0), R=cfg.get("R", 4.0),
                                     r=cfg.get("r", 2.0), delta=delta)
        shift = en._center_distance(model, g)
        table = bd.cone_growth_table(model, g, kind, _radii(_growth_window(model, cfg, delta, shift)),
                                     params, dh)
    elif kind == "horoball" and not model.has_parabolics:
        report.warnings.append("no parabolic classes: the horoball table is empty")
        table = en.GrowthTable(kind, (), float(delta), dh, {"model": model.describe()})
    elif kind == "parabolic":
        if not model.has_parabolics:
            report.warnings.append("no parabolic classes: the parabolic table is empty")
            table = en.GrowthTable(kind, (), float(delta), dh, {"model": model.describe()})
        else:
            U = se.class_horoballs(model)[0]
            v = en.foot(model, U)
            window = cfg.get("window", se.default_parabolic_window(model))
            table = en.growth_table(model, kind, _radii(window), delta, dh, horoball=U, point=v)
    else:
        table = en.growth_table(model, kind, _radii(_growth_window(model, cfg, delta)), delta, dh)
    report.table = table


def cmd_exponent(model, cfg, report):
    window = cfg.get("window", bd.default_exponent_window(model))
    fit = se.orbit_exponent(model, window)
    report.add("exponent", "delta_hat_G", fit.delta_hat, "fitted", window=list(window),
               residual=_num(fit.residual))
    for n, lr in zip(fit.radii, fit.log_ratios):
        report.add("exponent", f"log_N_over_n[{_num(n)}]", lr, "exact")
    d = en.orbit_sample(model, window[1]).distances
    div = se.divergence_diagnostic(d, fit.delta_hat, radius_limit=window[1])
    report.add("divergence", "verdict", div.verdict, "sampled", s=_num(div.s))
    report.add("divergence", "total", div.total, "sampled")
    report.add("divergence", "shell_rate", div.shell_rate, "fitted",
               window=div.shell_window and list(div.shell_window),
               residual=_num(div.shell_residual))
    for U in se.class_horoballs(model):
        pw = se.default_parabolic_window(model)
        pe = se.parabolic_exponent(model, U, None, pw)
        report.add("parabolic", f"delta_hat_P[{U.cls}]", pe.delta_hat, "fitted",
                   window=list(pw), residual=_num(pe.residual))
        report.add("parabolic", f"pgp[{U.cls}]", fit.delta_hat > pe.delta_hat, "fitted",
                   window=list(window), residual=_num(fit.residual),
                   window_P=list(pw), residual_P=_num(pe.residual))
    return fit


def cmd_dop(model, cfg, report, fit=None):
    if fit is None:
        window = bd.default_exponent_window(model)
        if cfg.command == "dop":
            window = cfg.get("window", window)
        fit = se.orbit_exponent(model, window)
    rep = se.dop_audit(model, fit.delta_hat, cfg.get("delta", 1.0))
    report.add("dop", "delta_hat_G", rep.delta_hat_G, "fitted", window=list(fit.window),
               residual=_num(fit.residual))
    report.add("dop", "vacuous", rep.vacuous, "exact", note=rep.note)
    for c in rep.classes:
        k = c.cls
        report.add("dop", f"delta_hat_P[{k}]", c.delta_hat_P.delta_hat, "fitted",
                   window=list(c.delta_hat_P.window), residual=_num(c.delta_hat_P.residual))
        report.add("dop", f"pgp[{k}]", c.pgp, "fitted", window=list(fit.window),
                   residual=_num(fit.residual), window_P=list(c.delta_hat_P.window),
                   residual_P=_num(c.delta_hat_P.residual))
        report.add("dop", f"pcp_verdict[{k}]", c.pcp.verdict, "sampled")
        report.add("dop", f"pcp_total[{k}]", c.pcp.total, "sampled")
        report.add("dop", f"dop_verdict[{k}]", c.dop.verdict, "sampled")
        report.add("dop", f"dop_total[{k}]", c.dop.total, "sampled")
        report.add("dop", f"dop_tail_slope[{k}]", c.dop.tail_slope, "fitted",
                   window=c.dop.tail_window and list(c.dop.tail_window),
                   residual=_num(c.dop.tail_residual))
        for n, gap in sorted(c.dop.gaps().items()):
            report.add("dop", f"dop_gap[{k}][{n}]", gap, "sampled")
        report.add("dop", f"double_sum[{k}]", c.double_sum, "sampled")
        report.add("dop", f"linear_sum[{k}]", c.linear_sum, "sampled")
        report.add("dop", f"double_over_linear[{k}]", c.ratio, "sampled")
    return rep


def _qc_pairs(model, seed, r, count=20):
    near = bd.sample_elements(model, count, (0.5, 2.0), seed=seed)
    far = bd.sample_elements(model, count, (3.0, 5.0), seed=seed + 1)
    return [(g, bd.Shadow(h, r)) for g, h in zip(near, far)]


def cmd_shadow_audit(model, cfg, report):
    r = cfg.get("r", 3.0)
    params = bd.TransitionParams(eps=cfg.get("eps", 1.0), R=cfg.get("R", 4.0), r=r)
    ceiling = cfg.get("ceiling", 10.0)
    dh = bd.sampled_delta_hat(model)
    s = cfg.get("s", 1.05 * dh)
    T = cfg.get("T", 2.0)
    hp_model = model.backend == HALF_PLANE
    band = (4.0, 8.0) if hp_model else (2.0, 4.0)
    radius = None if hp_model else min(6.0, model.truncation_radius)
    approx = bd.MeasureApproximant(model, s, T, radius, dh)
    sample = bd.sample_elements(model, 100 if hp_model else 40, band, seed=cfg.seed)
    sh = bd.shadow_lemma_audit(model, sample, r, params=params, approx=approx)
    common = {"band": list(band), "slack": sh.slack}
    for which, stats in (("plain", sh.plain), ("partial", sh.partial)):
        for key in ("min", "max", "spread"):
            report.add("shadow_lemma", f"{which}_{key}", stats[key], "sampled", **common)
    report.add("shadow_lemma", "partial_le_plain", sh.partial_le_plain, "exact")
    report.add("shadow_lemma", "flagged_rows", sum(x.flagged for x in sh.rows), "exact")
    over = [sh.plain["spread"], sh.partial["spread"]]
    if hp_model:
        rows, qc = bd.quasiconformality_audit(model, _qc_pairs(model, cfg.seed, params.r),
                                              approx=approx)
        for key in ("min", "max", "spread"):
            report.add("quasiconformality", key, qc[key], "sampled", pairs=len(rows))
        report.add("quasiconformality", "flagged_rows", sum(x.flagged for x in rows), "exact")
        over.append(qc["spread"])
        pairs = bd.sample_geodesic_pairs(model, 50, 1.0, seed=cfg.seed)
        golden = bd.BoundaryPoint((1 + math.sqrt(5)) / 2)
        c6 = bd.conical_cover_check(model, golden, 1.0, 6.0)
        c9 = bd.conical_cover_check(model, golden, 1.0, 9.0)
        report.add("conical", "golden_count_h6", c6.count, "exact")
        report.add("conical", "golden_count_h9", c9.count, "exact")
        report.add("conical", "monotone", c9.count > c6.count, "exact")
    else:
        n = int(model.truncation_radius) - 2
        pairs = bd.sample_geodesic_pairs(model, 20, 1.0, length=(n, n), seed=cfg.seed)
    st = bd.transition_stability_audit(model, pairs, bd.TransitionParams(
        eps=params.eps, R=params.R, r=1.0))
    report.add("transition_stability", "d_hat", st.d_hat, "sampled", L=_num(st.window),
               pairs=len(pairs))
    report.add("transition_stability", "skipped", st.skipped, "exact")
    report.echo["approximant"] = {k: _num(v) for k, v in approx.params().items()}
    if any(not (v <= ceiling) for v in over):
        report.status = EXIT_INCONCLUSIVE
        report.warnings.append(f"a spread exceeds the ceiling {ceiling:g}")


def _verdict_from_ratio(ratio, ceiling):
    return CONSISTENT if math.isfinite(ratio) and ratio <= ceiling else INCONSISTENT


def cmd_theorem_audit(model, cfg, report):
    ceiling = cfg.get("ceiling", 2.0)
    delta = cfg.get("delta", 1.0)
    params = _params(cfg)
    fit = None
    try:
        fit = cmd_exponent(model, cfg, report)
    except CuspGrowthError as exc:
        report.warnings.append(f"exponent fit failed: {exc}")
    dh = fit.delta_hat if fit else None

    def row(name, fn):
        try:
            verdict, detail = fn()
        except CuspGrowthError as exc:
            verdict, detail = INCONCLUSIVE, f"sub-audit failed: {exc}"
        report.verdicts.append((name, verdict, detail))

    def dop_row():
        if dh is None:
            return INCONCLUSIVE, "no exponent"
        rep = cmd_dop(model, cfg, report, fit)
        if rep.vacuous:
            return VACUOUS, rep.note
        verdicts = [v for c in rep.classes for v in (c.pcp.verdict, c.dop.verdict)]
        if any(v == se.DIVERGING for v in verdicts):
            return INCONSISTENT, f"verdicts {verdicts}"
        if all(v == se.CONVERGING for v in verdicts):
            return CONSISTENT, f"PCP and DOP sums converging; verdicts {verdicts}"
        return INCONCLUSIVE, f"verdicts {verdicts}"

    def growth_ratio(kind, table):
        ratio = _ratio(table.normalized())
        for (n, c), v in zip(table.rows, table.normalized()):
            report.add(f"growth_{kind}", f"normalized[{_num(n)}]", v, "exact", count=int(c))
        report.add(f"growth_{kind}", "max_over_min", ratio, "exact", ceiling=ceiling)
        return ratio

    def orbit_row():
        if dh is None:
            return INCONCLUSIVE, "no exponent"
        t = en.growth_table(model, "orbit", _radii(_growth_window(model, cfg, delta)), delta, dh)
        ratio = growth_ratio("orbit", t)
        return _verdict_from_ratio(ratio, ceiling), f"#A e^(-delta_hat n) max/min = {ratio:.4f}"

    def cone_row():
        if dh is None:
            return INCONCLUSIVE, "no exponent"
        g = _element(model, cfg.get("element"))
        shift = en._center_distance(model, g)
        radii = _radii(_growth_window(model, cfg, params.delta, shift))
        counts = bd.cone_counts(model, g, params, radii)
        out = []
        for col, kind in ((1, "cone"), (2, "partial_cone")):
            rows = tuple((n, c[col]) for n, c in sorted(counts.items()))
            out.append(growth_ratio(kind, en.GrowthTable(kind, rows, params.delta, dh)))
        worst = max(out)
        return (_verdict_from_ratio(worst, ceiling),
                f"cone max/min = {out[0]:.4f}, partial cone max/min = {out[1]:.4f}")

    def horoball_row():
        if not model.has_parabolics:
            return VACUOUS, "no horoballs"
        if dh is None:
            return INCONCLUSIVE, "no exponent"
        t = en.growth_table(model, "horoball", _radii(_growth_window(model, cfg, delta)), delta, dh)
        ratio = growth_ratio("horoball", t)
        return _verdict_from_ratio(ratio, ceiling), f"#H e^(-delta_hat n) max/min = {ratio:.4f}"

    row("(1) DOP", dop_row)
    row("(2) orbit growth", orbit_row)
    row("(3) cone / partial cone growth", cone_row)
    row("(4) horoball growth", horoball_row)
    for name, verdict, detail in report.verdicts:
        report.add("theorem", name, verdict, "sampled", detail=detail)
    if any(v in (INCONCLUSIVE, INCONSISTENT) for _, v, _ in report.verdicts):
        report.status = EXIT_INCONCLUSIVE


_DISPATCH = {"growth": cmd_growth, "exponent": cmd_exponent, "dop": cmd_dop,
             "shadow-audit": cmd_shadow_audit, "theorem-audit": cmd_theorem_audit}


def run(cfg: RunConfig) -> Report:
    spec = load_spec(cfg.spec_path)
    model = build_model(spec)
    report = Report(cfg.command, _echo(model, cfg, spec))
    _DISPATCH[cfg.command](model, cfg, report)
    if cfg.command == "dop" and any(
            r.key.startswith(("pcp_verdict", "dop_verdict")) and r.value == se.INCONCLUSIVE
            for r in report.rows):
        report.status = EXIT_INCONCLUSIVE
    return report


# -- rendering --------------------------------------------------------------------

def _csv_value(v):
    v = _num(v)
    return en._fmt(v) if isinstance(v, (int, float)) else str(v)


def render(report: Report, fmt: str) -> str:
    if report.table is not None:
        t = report.table
        if fmt == "csv":
            return t.to_csv()
        if fmt == "json":
            return json.dumps({"echo": report.echo, "table": t.to_dict(),
                               "warnings": report.warnings}, sort_keys=True, indent=2) + "\n"
        lines = [f"# {json.dumps(report.echo, sort_keys=True)}"]
        lines += [f"# warning: {w}" for w in report.warnings]
        lines.append(f"{'n':>6} {'count':>12} {'normalized':>14}")
        for (n, c), v in zip(t.rows, t.normalized()):
            lines.append(f"{_csv_value(n):>6} {int(c):>12} {v:>14.6f}")
        return "\n".join(lines) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["audit", "param_json", "key", "value"])
        for r in report.rows:
            params = {**report.echo, **{k: _num(v) for k, v in r.params.items()},
                      "provenance": r.provenance}
            w.writerow([r.audit, json.dumps(params, sort_keys=True), r.key, _csv_value(r.value)])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps({
            "echo": report.echo, "status": report.status, "warnings": report.warnings,
            "rows": [{"audit": r.audit, "key": r.key, "value": _num(r.value),
                      "provenance": r.provenance,
                      "params": {k: _num(v) for k, v in r.params.items()}} for r in report.rows],
            "verdicts": [{"condition": n, "verdict": v, "detail": d}
                         for n, v, d in report.verdicts],
        }, sort_keys=True, indent=2) + "\n"
    lines = [f"# {json.dumps(report.echo, sort_keys=True)}"]
    lines += [f"# warning: {w}" for w in report.warnings]
    for r in report.rows:
        v = _num(r.value)
        shown = f"{v:.6g}" if isinstance(v, float) else str(v)
        lines.append(f"{r.audit:<22} {r.key:<34} {shown:<18} {r.provenance}")
    if report.verdicts:
        lines.append("")
        lines.append(f"{'condition':<34} {'verdict':<18} detail")
        for n, v, d in report.verdicts:
            lines.append(f"{n:<34} {v:<18} {d}")
    return "\n".join(lines) + "\n"


def write_atomic(path, text):
    """Write via a temporary file in the target directory and rename over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".cuspgrowth-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        cfg = config_from_args(ns)
        report = run(cfg)
        text = render(report, cfg.fmt)
    except (SpecError, UsageError, TruncationError, OSError) as exc:
        print(f"cuspgrowth: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CuspGrowthError as exc:
        print(f"cuspgrowth: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    for w in report.warnings:
        print(f"cuspgrowth: warning: {w}", file=sys.stderr)
    if cfg.out:
        try:
            write_atomic(cfg.out, text)
        except OSError as exc:
            print(f"cuspgrowth: error: {exc}", file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(text)
    return report.status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
