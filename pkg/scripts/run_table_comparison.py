#!/usr/bin/env python3
"""Four-algorithm target-following comparison: traces, metrics, summary table.

Writes the same artifacts as `vfphase run --preset target-following
--algorithm all` and optionally renders overview plots.
"""

import argparse
import os

import numpy as np

from vfphase.cli import _format_table
from vfphase.scenarios import (
    comparison_table,
    path_from_config,
    run_target_following,
    shipped_target_following_config,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--duration", type=float, default=50.0)
    ap.add_argument("--out", default="results/table_comparison")
    ap.add_argument("--plot", action="store_true", help="also write overview PNGs")
    args = ap.parse_args()

    cfg = shipped_target_following_config(seed=args.seed, duration=args.duration)
    path = path_from_config(cfg.path)
    os.makedirs(args.out, exist_ok=True)
    traces = {}
    for algo in ("gn", "lqt", "vm", "gc"):
        print(f"running {algo} ({args.duration:.0f} s at 1 kHz)...")
        traces[algo] = run_target_following(cfg, algo)
        traces[algo].to_csv(os.path.join(args.out, f"trace_{algo}.csv"))
    rows = comparison_table(traces, path)
    print()
    print(_format_table(rows))

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(3, 1, figsize=(9, 8), sharex=True)
        for algo, tr in traces.items():
            if algo != "gc":
                axes[0].plot(tr.t, tr.s, label=algo, lw=0.8)
                axes[1].plot(tr.t, tr.s_dot, label=algo, lw=0.8)
            axes[2].plot(tr.t, np.linalg.norm(tr.err, axis=1) * 100, label=algo, lw=0.8)
        axes[0].set_ylabel("s [m]")
        axes[1].set_ylabel("s_dot [m/s]")
        axes[2].set_ylabel("||e|| [cm]")
        axes[2].set_xlabel("t [s]")
        for ax in axes:
            ax.legend(loc="upper right", fontsize=8)
        fig.tight_layout()
        fig.savefig(os.path.join(args.out, "phase_traces.png"), dpi=130)
        print(f"wrote {args.out}/phase_traces.png")


if __name__ == "__main__":
    main()
