"""L1 distance from iid Box_n to its doubly stochastic approximant, against the budget 16 eps lam^2 n^2.

    python3 scripts/run_balance_distances.py --ns 50 100 200 --seeds 10
"""

import argparse
import csv
import sys

from permlaw.balance import ds_approximate, fit_epsilon
from permlaw.environments import box_matrix, iid_environment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", type=int, nargs="+", default=[50, 100, 200])
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args(argv)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "seed", "epsilon", "l1_distance", "l1_bound", "ratio"])
    for n in args.ns:
        for s in range(args.seeds):
            env = iid_environment(0.5, 1.5, seed=s)
            x = box_matrix(env, n)
            eps = fit_epsilon(x)
            res = ds_approximate(x, eps, env.lam)
            w.writerow([n, s, f"{eps:.17g}", f"{res.l1_distance:.17g}", f"{res.l1_bound:.17g}", f"{res.l1_distance / res.l1_bound:.17g}"])


if __name__ == "__main__":
    main()
