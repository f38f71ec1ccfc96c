"""Sweep packet length and compare cycle times across protocols.

Runs TDMA, both CSMA/CA variants, and slotted Aloha (slot = one packet) over a
packet-length grid, writing a CSV of analytic versus simulated psi.  Desk-scale
defaults finish in under a minute; raise --slots / --reps for tighter error
bars.
"""
import argparse
import sys

from macfair import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pkt-range", default="30:100:10", help="lo:hi:step slots")
    ap.add_argument("--slots", type=int, default=200_000)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="protocol_comparison.csv")
    args = ap.parse_args()
    return cli.main([
        "sweep",
        "--protocols", "tdma,csma-rtscts,csma-basic,aloha",
        "--pkt-range", args.pkt_range,
        "--slots", str(args.slots),
        "--reps", str(args.reps),
        "--seed", str(args.seed),
        "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
