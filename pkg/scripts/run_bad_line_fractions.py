"""Fraction of rows/columns of an iid Box_n whose sums leave [(1-eps)n, (1+eps)n].

    python3 scripts/run_bad_line_fractions.py --ns 50 100 200 400 --eps 0.05
"""

import argparse
import csv
import sys

from permlaw.balance import fit_epsilon, row_col_sum_report
from permlaw.environments import box_matrix, iid_environment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--lo", type=float, default=0.5)
    ap.add_argument("--hi", type=float, default=1.5)
    args = ap.parse_args(argv)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["n", "seed", "bad_rows", "bad_cols", "fraction", "fitted_epsilon"])
    for n in args.ns:
        for s in range(args.seeds):
            x = box_matrix(iid_environment(args.lo, args.hi, seed=s), n)
            rep = row_col_sum_report(x, args.eps)
            frac = (len(rep.bad_rows) + len(rep.bad_cols)) / (2 * n)
            w.writerow([n, s, len(rep.bad_rows), len(rep.bad_cols), f"{frac:.17g}", f"{fit_epsilon(x):.17g}"])


if __name__ == "__main__":
    main()
