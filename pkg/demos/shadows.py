"""Shadows, cones and a Patterson-Sullivan approximant for PSL(2, Z).

Shows the shadow-lemma ratios for a few orbit points, the conical-point count
along the axis of [[2, 1], [1, 1]], and the mass near the cusp at infinity.

    python demos/shadows.py
"""

import math
import pathlib

from cuspgrowth import boundary as bd
from cuspgrowth.models import build_model, load_spec

SPEC = pathlib.Path(__file__).resolve().parent.parent / "specs" / "psl2z.yaml"


def main():
    model = build_model(load_spec(SPEC))
    approx = bd.MeasureApproximant(model, 1.05 * bd.sampled_delta_hat(model), T=2.0)
    print(f"approximant: {approx.params()}")
    sample = bd.sample_elements(model, 8, (4.0, 8.0), seed=1)
    audit = bd.shadow_lemma_audit(model, sample, r=3.0, approx=approx)
    for row in audit.rows:
        print(f"g = {model.format_element(row.g):<22} d = {row.distance:6.3f} "
              f"rho = {row.rho:8.4f} partial rho = {row.rho_partial:8.4f}")
    print(f"plain spread {audit.plain['spread']:.4f}, partial spread {audit.partial['spread']:.4f}")

    golden = bd.BoundaryPoint((1 + math.sqrt(5)) / 2)
    for horizon in (3, 6, 9, 12):
        rep = bd.conical_cover_check(model, golden, 1.0, horizon)
        print(f"golden ratio, horizon {horizon:>2}: {rep.count} shadowing elements")
    masses, decreasing = bd.parabolic_atom_probe(approx)
    print(f"mass near infinity {[round(m, 5) for m in masses]}, decreasing: {decreasing}")


if __name__ == "__main__":
    main()
