"""Emission spectrum for white and Exponential(tau) noise.

Columns: p (wavenumber, m^-1), white rate, plane-wave colored rate, golden-rule
rate and f~(pc). Default parameters are the GRW values in SI units.

    python3 scripts/colored_spectrum.py [--tau 1e-18] [--kev-min 1 --kev-max 100]
"""

import argparse

from crad.correlations import Exponential
from crad.emission import GOLDEN, PLANEWAVE, WHITE, spectrum_sweep
from crad.params import C_SI, HBAR_SI, KEV, PhysicalParams


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--tau", type=float, default=1e-18, help="correlation time in s")
    parser.add_argument("--kev-min", type=float, default=1.0)
    parser.add_argument("--kev-max", type=float, default=100.0)
    parser.add_argument("--points", type=int, default=9)
    args = parser.parse_args()

    params = PhysicalParams()
    corr = Exponential(args.tau)
    p_of = lambda kev: kev * KEV / (HBAR_SI * C_SI)  # noqa: E731
    sweeps = {mode: spectrum_sweep(p_of(args.kev_min), p_of(args.kev_max), args.points,
                                   params, corr, mode)
              for mode in (WHITE, PLANEWAVE, GOLDEN)}
    print(f"# Exponential(tau={args.tau:g} s)")
    print(f"{'E_keV':>9} {'white':>12} {'planewave':>12} {'golden':>12} {'f~(pc)':>10}")
    for w, pw, gr in zip(*sweeps.values()):
        kev = w["p"] * HBAR_SI * C_SI / KEV
        print(f"{kev:9.4g} {w['rate']:12.4e} {pw['rate']:12.4e} {gr['rate']:12.4e} "
              f"{w['f_tilde_pc']:10.4g}")


if __name__ == "__main__":
    main()
