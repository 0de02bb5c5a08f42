"""The cusped Cayley graph of F(a, b) with a combinatorial horoball over <a>.

Powers of a are exponentially distorted: d(e, a^n) grows like 2 log2 n until
the horoball depth cap is reached.

    python demos/cusped_graph.py
"""

import math
import pathlib

from cuspgrowth import series as se
from cuspgrowth.models import build_model, load_spec

SPEC = pathlib.Path(__file__).resolve().parent.parent / "specs" / "free_ab_cusped.yaml"


def main():
    model = build_model(load_spec(SPEC))
    for n in (1, 2, 4, 8, 16, 32, 64, 128):
        print(f"d(e, a^{n:<3}) = {model.strip_distance(n):>3}   2 log2 n = {2 * math.log2(n):5.2f}")
    fit = se.orbit_exponent(model, (4, 10))
    print(f"delta_hat_G = {fit.delta_hat:.4f}")
    rep = se.dop_audit(model, fit.delta_hat)
    for c in rep.classes:
        print(f"class {c.cls}: delta_hat_P = {c.delta_hat_P.delta_hat:.4f}, PGP {c.pgp}, "
              f"DOP gaps {({n: round(g, 6) for n, g in c.dop.gaps().items() if n >= 64})}")


if __name__ == "__main__":
    main()
