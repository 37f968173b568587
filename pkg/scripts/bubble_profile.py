"""Circle lengths and line distances along the bubble 0 <= t <= t0.

Compares the centre length with the printed asymptotic and the t0 length with
its two-section prediction, and writes the full profile as CSV if asked.
"""

import argparse
import csv
import math
import sys

from collar_bergman.audit import printed_center_log_length, printed_t0_log_length
from collar_bergman.collar import CollarParams
from collar_bergman.embedding import bubble_profile, max_line_distance


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    ap.add_argument("--samples", type=int, default=33)
    ap.add_argument("--csv", help="write all rows here")
    args = ap.parse_args()

    k = args.k
    writer = None
    if args.csv:
        fh = open(args.csv, "w", newline="")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["eps", "t", "log_circle_length", "line_distance", "log_reduced_coordinate"])
    print("eps,log_len_center,center_offset,log_len_t0,t0_offset,max_line_distance,over_k2eps")
    for eps in args.eps:
        rows = bubble_profile(CollarParams(eps, k), args.samples)
        lc = rows[0].circle_length.logmag
        le = rows[-1].circle_length.logmag
        d = max_line_distance(rows)
        print(f"{eps:.1e},{lc:.6f},{lc - printed_center_log_length(eps, k):.6f},"
              f"{le:.6f},{le - printed_t0_log_length(eps, k):.6f},{d:.6e},{d / (k * k * eps):.4f}")
        if writer:
            for r in rows:
                writer.writerow([eps, repr(r.t), repr(r.circle_length.logmag), repr(r.line_distance),
                                 repr(r.reduced_coordinate.logmag)])
    print(f"# centre offset target k + ln(2)/2 = {k + 0.5 * math.log(2):.6f}", file=sys.stderr)


if __name__ == "__main__":
    main()
