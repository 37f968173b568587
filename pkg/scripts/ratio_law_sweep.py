"""Deviation of consecutive collar norm ratios from pi/eps + (2k+1) ln(a/(a+1)).

The deviation should shrink like eps^2 as eps decreases.
"""

import argparse
import math

import numpy as np

from collar_bergman.collar import CollarParams, collar_norm


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--a", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-2, 3e-3, 1e-3, 3e-4, 1e-4])
    args = ap.parse_args()

    print("eps,a,log_ratio,predicted,deviation,deviation_over_eps2")
    for a in args.a:
        for eps in args.eps:
            p = CollarParams(eps, args.k)
            lr = collar_norm(p, a + 1).logmag - collar_norm(p, a).logmag
            pred = math.pi / eps + (2 * args.k + 1) * math.log(a / (a + 1))
            dev = abs(lr - pred)
            print(f"{eps:.3e},{a},{lr:.12f},{pred:.12f},{dev:.6e},{dev / eps ** 2:.6f}")
    slopes = []
    for a in args.a:
        devs = []
        for eps in args.eps:
            p = CollarParams(eps, args.k)
            devs.append(abs(collar_norm(p, a + 1).logmag - collar_norm(p, a).logmag
                            - math.pi / eps - (2 * args.k + 1) * math.log(a / (a + 1))))
        slopes.append(np.polyfit(np.log(args.eps[:3]), np.log(devs[:3]), 1)[0])
    print("# fitted log-log slopes (first three eps):", ", ".join(f"{s:.3f}" for s in slopes))


if __name__ == "__main__":
    main()
