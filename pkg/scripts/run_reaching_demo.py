#!/usr/bin/env python3
"""Fixed-goal reaching demo: sweep the velocity-error weight and plot the
phase velocity profiles (bell shape vs corrective reversal)."""

import argparse
import os

import numpy as np

from vfphase.scenarios import run_reaching_demo, shipped_reaching_demo_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--duration", type=float, default=2.5)
    ap.add_argument("--out", default="results/reaching_demo")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()

    cfg = shipped_reaching_demo_config(duration=args.duration)
    traces = run_reaching_demo(cfg)
    os.makedirs(args.out, exist_ok=True)
    for c2, tr in sorted(traces.items(), reverse=True):
        peak = int(np.argmax(tr.s_dot))
        reversal = tr.s_dot[peak:].min() < -1e-6
        print(
            f"c2={c2:6.3f}: peak s_dot {tr.s_dot[peak]:.3f} m/s at "
            f"t={tr.t[peak]:.3f} s, reversal={'yes' if reversal else 'no'}"
        )
        tr.to_csv(os.path.join(args.out, f"trace_c2_{c2}.csv"))

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(8, 4))
        for c2, tr in sorted(traces.items(), reverse=True):
            ax.plot(tr.t, tr.s_dot, label=f"c2 = {c2}")
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set_xlabel("t [s]")
        ax.set_ylabel("s_dot [m/s]")
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(args.out, "reaching_demo.png"), dpi=130)
        print(f"wrote {args.out}/reaching_demo.png")


if __name__ == "__main__":
    main()
