"""Compete propagation rounds on king grids (independence ~ D^2) versus a
star of paths (independence far above D^2) at matching diameter.

    python scripts/compete_regimes.py --seeds 10
"""

import argparse
import math

import numpy as np
from scipy.stats import linregress

from radionet import graphs as G
from radionet.compete import CompeteConfig, compete, log_d_alpha


def rounds(g, seeds, cfg):
    st = G.compute_stats(g)
    rs = [compete(g, {0: 1}, seed=s, stats=st, config=cfg).rounds_to_agreement for s in range(seeds)]
    return st, [r for r in rs if r is not None]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--sides", type=int, nargs="+", default=[9, 17, 33])
    ap.add_argument("--arms", type=int, default=200)
    ap.add_argument("--arm-length", type=int, default=4)
    args = ap.parse_args()
    cfg = CompeteConfig(inject="propagation")
    print(f"{'graph':<22} {'n':>5} {'D':>3} {'log_D alpha':>11} {'mean rounds':>12} {'se':>7}")
    Ds, means = [], []
    rows = [(f"king-{s}x{s}", G.grid_udg(s, radius=math.sqrt(2))) for s in args.sides]
    rows.append((f"star-of-paths-{args.arms}x{args.arm_length}", G.star_of_paths(args.arms, args.arm_length)))
    for name, g in rows:
        st, rs = rounds(g, args.seeds, cfg)
        m = float(np.mean(rs))
        se = float(np.std(rs, ddof=1) / math.sqrt(len(rs))) if len(rs) > 1 else 0.0
        print(f"{name:<22} {g.n:>5} {st.D:>3} {log_d_alpha(st):>11.2f} {m:>12.1f} {se:>7.1f}")
        if name.startswith("king"):
            Ds.append(st.D)
            means.append(m)
    fit = linregress(Ds, means)
    print(f"king grids: rounds = {fit.slope:.1f} D + {fit.intercept:.1f}, R^2 = {fit.rvalue ** 2:.3f}")


if __name__ == "__main__":
    main()
