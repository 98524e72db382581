"""Bound arithmetic at d = 2^128, plus how the bounds move with delta and kappa.

    python3 scripts/worked_examples.py
"""

from obsentropy.cli import worked_examples
from obsentropy.concentration import BoundParams, design_tail_bound, haar_tail_bound


def main() -> None:
    for line in worked_examples():
        print(line)
    print()
    print("log2 of the bounds at d = 2^128, base two")
    print(f"{'log2 kappa':>11}{'log2 delta':>11}{'Haar':>16}{'2-design eps=0':>16}")
    for lk in (-10, -38, -50, -60):
        for ld in (-1, -5, -10):
            p = BoundParams(2.0 ** lk, 128, 2.0 ** ld, base="two")
            print(f"{lk:>11}{ld:>11}{haar_tail_bound(p).log2_value:>16.6g}{design_tail_bound(p).log2_value:>16.6g}")


if __name__ == "__main__":
    main()
