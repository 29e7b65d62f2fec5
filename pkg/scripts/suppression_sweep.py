"""Weight of the zero-frequency term for a wave packet in a finite box.

Sweeps the cutoff length at fixed box size and the box size at fixed cutoff,
printing the diagonal sum, its log-log slope and the recovered leading term.

    python3 scripts/suppression_sweep.py [--width 1] [--L 1000]
"""

import argparse

import numpy as np

from crad.wavepacket import (
    CutoffGeometry,
    continuum_limit_check,
    cutoff_independence,
    diagonal_sum,
    gaussian_packet,
    loglog_slope,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--width", type=float, default=1.0, help="packet momentum width")
    parser.add_argument("--L", type=float, default=1000.0)
    args = parser.parse_args()

    packet = gaussian_packet(args.L, args.width)
    ratios = np.geomspace(0.01, 0.1, 6)
    sums = [diagonal_sum(packet, CutoffGeometry(args.L, r * args.L)) for r in ratios]
    print(f"{'ell/L':>8} {'diagonal_sum':>14}")
    for r, s in zip(ratios, sums):
        print(f"{r:8.4f} {s:14.6e}")
    print(f"log-log slope: {loglog_slope(ratios, sums):.9f}")

    ell = 20.0 / args.width
    rep = continuum_limit_check(args.width, ell, [10 * ell, 20 * ell, 40 * ell, 80 * ell])
    print(f"\nfixed ell = {ell:g}")
    print(f"{'L':>8} {'diagonal_sum':>14} {'leading':>10} {'deviation':>12}")
    for row in rep.rows:
        print(f"{row['L']:8.4g} {row['diagonal_sum']:14.6e} {row['leading']:10.6f} "
              f"{row['deviation']:12.4e}")

    ells = [10.0 / args.width, 20.0 / args.width, 40.0 / args.width]
    vals = cutoff_independence(args.width, 2000.0 / args.width, ells)
    print("\nleading term vs ell at L = %g:" % (2000.0 / args.width))
    for e, v in zip(ells, vals):
        print(f"  ell = {e:6.4g}: {v:.6f}")


if __name__ == "__main__":
    main()
