"""Utility and backlog against the penalty weight V.

    python scripts/v_tradeoff.py [--blocks 40000] [--seeds 5] [--values 10 50 250]
"""

import argparse

import numpy as np

from privharq.config import default_config
from privharq.experiment import ci95
from privharq.sim import run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--blocks", type=int, default=40_000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--values", type=float, nargs="+", default=[10.0, 50.0, 250.0])
    args = ap.parse_args()

    print("     V   utility (95% CI)     backlog sum(Q_p + Q_o)")
    for V in args.values:
        out = [run(default_config(V=V, n_blocks=args.blocks, seed=s)) for s in range(args.seeds)]
        u, hu = ci95([o.utility_avg for o in out])
        b = np.mean([o.total_backlog() for o in out])
        print(f"{V:6g}   {u:.3f} +- {hu:.3f}      {b:.1f}")


if __name__ == "__main__":
    main()
