#!/usr/bin/env python3
"""Sweep the number of supervised vertices on line data.

Runs the one-residual-hidden-layer network with graph weight -0.5 for every
supervised-set size from 1 to 7 over 8 seeds and writes mean +- standard
error of the final held-out cost per size.
"""

from __future__ import annotations

import argparse
import sys

from resqnn.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/supervised_sweep")
    parser.add_argument("--epochs", type=int, default=250)
    parser.add_argument("--seeds", nargs="+", type=int, default=list(range(8)))
    args = parser.parse_args()

    return cli_main(
        ["sweep", "--out", args.out, "--vary", "supervised",
         "--values", *[str(s) for s in range(1, 8)],
         "--seeds", *[str(s) for s in args.seeds],
         "--arch", "2,~3,2", "--topology", "line", "--vertices", "8",
         "--gamma", "-0.5", "--epochs", str(args.epochs)]
    )


if __name__ == "__main__":
    sys.exit(main())
