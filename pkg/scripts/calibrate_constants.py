"""Recompute the calibrated constants from their closed forms.

    python scripts/calibrate_constants.py --n 64 256 1024
"""

import argparse

from radionet.mis import (MisConstants, calibrate_C, calibrate_decay_iters, eed_worst_failure,
                          log_n)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--n", type=int, nargs="+", default=[64, 256, 1024])
    args = ap.parse_args()
    d = MisConstants()
    print(f"defaults: C={d.C} decay_iters={d.decay_iters}")
    print(f"{'n':>6} {'log n':>6} {'C':>4} {'worst EED failure':>18} {'decay_iters':>12}")
    for n in args.n:
        C = calibrate_C(n)
        print(f"{n:>6} {log_n(n):>6} {C:>4} {eed_worst_failure(C, n):>18.3e} {calibrate_decay_iters(n):>12}")


if __name__ == "__main__":
    main()
