"""Rate-versus-gamma and rate-versus-alpha sweeps on the four-node reference setup.

Writes ``gamma.csv``/``gamma.svg`` and ``alpha.csv``/``alpha.svg`` into the
output directory and prints the aggregated rows.

    python scripts/rate_sweeps.py --out results/ [--blocks 100000] [--seeds 5] [--realizations 5]

The full-size gamma sweep is 5 x 5 x 5 runs of 10^5 blocks; use
PRIVHARQ_WORKERS to spread it over several processes.
"""

import argparse
from pathlib import Path

from privharq.config import build
from privharq.experiment import emit_csv, emit_plot, run_sweep


def sweep(axis, values, blocks, seeds, realizations):
    spec = build({"n_blocks": blocks, "sweep": {"axis": axis, "values": values, "seeds_per_point": seeds,
                                                "realizations_per_point": realizations}})
    return run_sweep(spec)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--blocks", type=int, default=100_000)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--realizations", type=int, default=5)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    jobs = {
        "gamma": ([0.05, 0.1, 0.2, 0.3, 0.4], args.realizations),
        "alpha": ([0.2, 0.4, 0.6, 0.8, 1.0, 1.5], 1),
    }
    for axis, (values, reals) in jobs.items():
        rows = sweep(axis, values, args.blocks, args.seeds, reals)
        emit_csv(rows, out / f"{axis}.csv")
        emit_plot(rows, out / f"{axis}.svg", axis_label=axis)
        print(f"{axis:>6}  private   open      eff.private  outage   bound")
        for r in (r for r in rows if r.is_aggregate):
            print(f"{r.axis_value:6.2f}  {r.private_rate:.4f}    {r.open_rate:.4f}    {r.effective_private_rate:.4f}"
                  f"       {r.empirical_outage:.4f}   {r.markov_bound:.3f}")


if __name__ == "__main__":
    main()
