"""Orbit and horoball growth of PSL(2, Z) acting on the upper half-plane.

Prints #A(i, n, 1), #H(i, n, 1) and their normalizations by exp(-delta_hat n),
then the fitted exponents and the parabolic gap.

    python demos/modular_growth.py
"""

import pathlib

from cuspgrowth import enumeration as en
from cuspgrowth import series as se
from cuspgrowth.models import build_model, load_spec

SPEC = pathlib.Path(__file__).resolve().parent.parent / "specs" / "psl2z.yaml"


def main():
    model = build_model(load_spec(SPEC))
    fit = se.orbit_exponent(model, (6, 12))
    print(f"delta_hat_G = {fit.delta_hat:.4f} (residual {fit.residual:.2e})")
    orbit = en.growth_table(model, "orbit", range(1, 13), 1.0, fit.delta_hat)
    horo = en.growth_table(model, "horoball", range(1, 13), 1.0, fit.delta_hat)
    print(f"{'n':>3} {'#A':>10} {'#A norm':>9} {'#H':>8} {'#H norm':>9}")
    for (n, a), na, (_, h), nh in zip(orbit.rows, orbit.normalized(), horo.rows, horo.normalized()):
        print(f"{int(n):>3} {a:>10} {na:>9.4f} {h:>8} {nh:>9.4f}")
    dop = se.dop_audit(model, fit.delta_hat).classes[0]
    print(f"delta_hat_P = {dop.delta_hat_P.delta_hat:.4f}, PGP {dop.pgp}, "
          f"PCP {dop.pcp.verdict}, DOP {dop.dop.verdict}")


if __name__ == "__main__":
    main()
