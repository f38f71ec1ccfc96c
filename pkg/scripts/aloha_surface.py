"""Map the slotted-Aloha cycle-time surface over a transmit-probability grid.

Writes a CSV with one row per (p_A, p_B) pair comparing the closed form with
simulation; the minimum sits at p_A = p_B = 0.5 with psi = 8 slots.
"""
import argparse
import sys

from macfair import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p-range", default="0.2:0.8:0.15", help="lo:hi:step")
    ap.add_argument("--slots", type=int, default=500_000)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="aloha_surface.csv")
    args = ap.parse_args()
    return cli.main([
        "sweep",
        "--protocols", "aloha",
        "--p-range", args.p_range,
        "--slots", str(args.slots),
        "--reps", str(args.reps),
        "--seed", str(args.seed),
        "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
