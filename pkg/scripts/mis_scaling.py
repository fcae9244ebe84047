"""MIS rounds versus log2 n on random unit-disk graphs of average degree 8.

    python scripts/mis_scaling.py --seeds 30 --out results/mis_scaling
"""

import argparse
import json

from radionet.config import ExperimentConfig
from radionet.harness import run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--n", type=int, nargs="+", default=[32, 64, 128, 256, 512])
    ap.add_argument("--family", default="udg")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results/mis_scaling")
    args = ap.parse_args()
    cfg = ExperimentConfig.from_dict({"algorithm": "mis", "graph": {"family": args.family},
                                      "n": args.n, "seeds": args.seeds, "jobs": args.jobs,
                                      "output": args.out})
    agg = run_experiment(cfg)
    print(f"{'instance':<16} {'rounds':>8} {'se':>6} {'time steps':>12}")
    for gid, e in agg["instances"].items():
        print(f"{gid:<16} {e['rounds_to_empty']['mean']:>8.2f} {e['rounds_to_empty']['se']:>6.2f} "
              f"{e['time_steps']['mean']:>12.0f}")
    print("fit rounds ~ log2 n:", json.dumps(agg["fit_rounds_vs_log2n"]))


if __name__ == "__main__":
    main()
