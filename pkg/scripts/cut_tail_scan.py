"""Margin of the cut-off annulus bound over a grid of (eps, k).

Prints log(bound) - log(sup density); negative entries are violations.
Also reports, per k, the largest eps on the grid from which the bound holds
for every smaller eps.
"""

import argparse

import numpy as np

from collar_bergman.collar import CollarParams, cut_tail_check


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, nargs="+", default=[2, 3, 4, 5])
    ap.add_argument("--decades", type=float, nargs=2, default=[-2.0, -7.0])
    ap.add_argument("--points", type=int, default=11)
    args = ap.parse_args()

    eps_grid = np.logspace(args.decades[0], args.decades[1], args.points)
    print("eps," + ",".join(f"margin_k{k}" for k in args.k))
    margins = {k: [] for k in args.k}
    for eps in eps_grid:
        row = []
        for k in args.k:
            m = cut_tail_check(CollarParams(float(eps), k)).margin
            margins[k].append(m)
            row.append(f"{m:.4f}")
        print(f"{eps:.3e}," + ",".join(row))
    for k in args.k:
        ms = margins[k]
        ok_from = None
        for i in range(len(ms) - 1, -1, -1):
            if ms[i] <= 0:
                break
            ok_from = eps_grid[i]
        print(f"# k={k}: holds for all grid eps <= {ok_from:.3e}" if ok_from is not None
              else f"# k={k}: fails at the smallest grid eps")


if __name__ == "__main__":
    main()
