"""Exact free white kernel against its truncated resonant part.

Prints the long-time dT/dt of both and their ratio for a few values of a,
then the same ratio from finite windows at increasing start times.

    python3 scripts/factor_of_two.py [--a 1 2 5]
"""

import argparse

from crad.harness import reproduce_factor_of_two


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--a", type=float, nargs="+", default=[0.5, 1.0, 2.0, 5.0])
    parser.add_argument("--periods", type=int, default=10)
    args = parser.parse_args()

    print(f"{'a':>8} {'t_start':>10} {'exact':>14} {'truncated':>14} {'ratio':>10}")
    for a in args.a:
        for t_start in (20.0 / a, 200.0 / a, 2000.0 / a):
            rep = reproduce_factor_of_two(a=a, t_start=t_start, n_periods=args.periods)
            print(f"{a:8.3g} {t_start:10.4g} {rep.exact_rate:14.8g} "
                  f"{rep.truncated_rate:14.8g} {rep.ratio:10.6f}")


if __name__ == "__main__":
    main()
