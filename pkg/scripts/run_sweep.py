"""Run the desk-scale soundness sweeps and write CSV/JSON next to this script.

    python3 scripts/run_sweep.py [--workers 4] [--samples 10000]
"""

import argparse
import sys
from pathlib import Path

from obsentropy.cli import main

HERE = Path(__file__).resolve().parent


def run() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--workers", default="1")
    ap.add_argument("--samples", default=None)
    ap.add_argument("--out", default=str(HERE / "results"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(exist_ok=True)
    worst = 0
    for name in ("sweep_full", "sweep_clifford_groups"):
        argv = ["tail", "--config", str(HERE / "configs" / f"{name}.toml"), "--workers", args.workers,
                "--out-csv", str(out / f"{name}.csv"), "--out-json", str(out / f"{name}.json")]
        if args.samples:
            argv += ["--samples", args.samples]
        print(f"== {name}")
        worst = max(worst, main(argv))
    return worst


if __name__ == "__main__":
    sys.exit(run())
