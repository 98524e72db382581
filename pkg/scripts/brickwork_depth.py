"""Design-error interval of brick-wall circuits versus depth (exact moment operators).

    python3 scripts/brickwork_depth.py --qubits 3 --max-depth 8 --csv brickwork.csv

Cost: one d^4 x d^4 symmetric eigenproblem per depth (d = 8 takes a few seconds each).
"""

import argparse
import csv
import sys
import time

from obsentropy.moments import brickwork_epsilon_bounds


def run() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--qubits", type=int, default=3)
    ap.add_argument("--max-depth", type=int, default=8)
    ap.add_argument("--csv", default="")
    args = ap.parse_args()
    rows = []
    t0 = time.perf_counter()
    for depth, b in brickwork_epsilon_bounds(args.qubits, range(1, args.max_depth + 1)):
        rows.append((depth, b.eps_lower, b.eps_upper, b.diamond_lower, b.diamond_upper))
        print(f"depth {depth:2d}: eps in [{b.eps_lower:.4e}, {b.eps_upper:.4e}]  "
              f"diamond in [{b.diamond_lower:.4e}, {b.diamond_upper:.4e}]  ({time.perf_counter() - t0:.0f}s)")
    ups = [r[2] for r in rows]
    monotone = all(b <= a * (1 + 1e-12) for a, b in zip(ups, ups[1:]))
    print(f"upper bound non-increasing in depth: {monotone}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["depth", "eps_lower", "eps_upper", "diamond_lower", "diamond_upper"])
            w.writerows(rows)
    return 0 if monotone else 1


if __name__ == "__main__":
    sys.exit(run())
