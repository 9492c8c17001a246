#!/usr/bin/env python3
"""Center-reaching singularity stress test: GN vs LQT force-direction rates."""

import argparse
import os

import numpy as np

from vfphase.metrics import force_argument, rate_of_change, task_plane
from vfphase.scenarios import run_center_reaching, shipped_center_reaching_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--duration", type=float, default=10.0)
    ap.add_argument("--out", default="results/center_reaching")
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args()

    cfg = shipped_center_reaching_config(seed=args.seed, duration=args.duration)
    os.makedirs(args.out, exist_ok=True)
    traces = {}
    for algo in ("gn", "lqt"):
        print(f"running {algo}...")
        traces[algo] = run_center_reaching(cfg, algo)
        traces[algo].to_csv(os.path.join(args.out, f"trace_{algo}.csv"))

    for algo, tr in traces.items():
        e1, e2 = task_plane(tr.ref)
        f_norm = np.linalg.norm(tr.force, axis=1)
        mask = (tr.t >= 2.0) & (f_norm > 15.0)
        dang = np.abs(rate_of_change(force_argument(tr.force, e1, e2), tr.dt))[mask]
        dmag = np.abs(rate_of_change(f_norm, tr.dt))[mask]
        print(
            f"{algo}: d|F|/dt p95 {np.percentile(dmag, 95):7.1f} N/s | "
            f"d(angle F)/dt p50 {np.percentile(dang, 50):6.2f} "
            f"p95 {np.percentile(dang, 95):6.2f} max {dang.max():7.2f} rad/s | "
            f"max |ds|/dt {np.abs(np.diff(tr.s)).max() / tr.dt:6.2f} m/s"
        )

    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 2, figsize=(10, 4.5))
        for algo, tr in traces.items():
            axes[0].plot(tr.x[:, 0], tr.x[:, 1], lw=0.7, label=f"x ({algo})")
            axes[1].plot(tr.t, tr.s, lw=0.8, label=algo)
        ref = traces["lqt"].path
        s_dense = np.linspace(0, ref.length, 400)
        curve = ref.eval_many(s_dense, 0)[0]
        axes[0].plot(curve[:, 0], curve[:, 1], "k-", lw=1.2, label="curve")
        center = np.asarray(traces["lqt"].meta["osc_center"])
        axes[0].plot(*center[:2], "r+", ms=12, label="osc. center")
        axes[0].set_aspect("equal")
        axes[0].legend(fontsize=8)
        axes[1].set_xlabel("t [s]")
        axes[1].set_ylabel("s [m]")
        axes[1].legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(os.path.join(args.out, "center_reaching.png"), dpi=130)
        print(f"wrote {args.out}/center_reaching.png")


if __name__ == "__main__":
    main()
