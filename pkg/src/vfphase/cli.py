"""Command-line surface: fit paths, analyze singularity fields, run scenarios,
and serve the interactive stepping session.

Outputs are deterministic for identical inputs and seeds (no timestamps, fixed
float formatting), so repeated invocations are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import scenarios
from .errors import (
    DegenerateInputError,
    IllConditionedFitError,
    InvalidParameterError,
)
from .metrics import task_plane
from .path_model import (
    ConstraintPath,
    eds_field,
    fit_path,
    read_trajectory_csv,
    resample_spatial,
)

log = logging.getLogger("vfphase")

EXIT_USAGE = 2
EXIT_BIND = 3


def _configure_logging():
    level = os.environ.get("VFPHASE_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vfphase",
        description="Constraint-curve phase planning toolkit",
    )
    sub = p.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a constraint path from a recorded CSV")
    fit.add_argument("csv", help="input CSV with columns t,x,y,z (t optional)")
    fit.add_argument("--delta", type=float, default=0.01, help="spatial spacing [m]")
    fit.add_argument("--basis", type=int, default=30, help="number of basis functions")
    fit.add_argument("--ridge", type=float, default=0.0, help="ridge regularization")
    fit.add_argument("--out", required=True, help="output path JSON")

    field = sub.add_parser("eds-field", help="singularity census on a planar grid")
    field.add_argument("path", help="constraint path JSON")
    field.add_argument("--grid", type=int, default=120, help="grid resolution per axis")
    field.add_argument("--margin", type=float, default=0.3,
                       help="grid margin around the curve, fraction of its extent")
    field.add_argument("--out", required=True, help="output CSV")

    run = sub.add_parser("run", help="run a guidance scenario")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="scenario config JSON")
    src.add_argument("--preset",
                     choices=["center-reaching", "target-following", "reaching-demo"],
                     help="shipped scenario configuration")
    run.add_argument("--algorithm", default=None,
                     help="override: gn | lqt | vm | gc | all")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--duration", type=float, default=None)
    run.add_argument("--out", required=True, help="output directory")

    demo = sub.add_parser("demo-reaching", help="fixed-goal reaching weight sweep")
    demo.add_argument("--duration", type=float, default=2.0)
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--out", required=True, help="output directory")

    serve = sub.add_parser("serve", help="interactive stepping service")
    serve.add_argument("path", help="constraint path JSON")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8731, help="TCP protocol port")
    serve.add_argument("--ws-port", type=int, default=None,
                       help="WebSocket port (default: TCP port + 1)")
    return p


def cmd_fit(args) -> int:
    traj = read_trajectory_csv(args.csv)
    sp = resample_spatial(traj, args.delta)
    path = fit_path(sp, args.basis, args.ridge)
    path.save(args.out)
    print(f"samples: {len(sp.points)} at delta {args.delta} m, length {sp.length:.6g} m")
    print(f"fit: {path.fit_report}")
    print(f"wrote {args.out}")
    return 0


def cmd_eds_field(args) -> int:
    path = ConstraintPath.load(args.path)
    s_dense = np.linspace(0.0, path.length, 400)
    pts = path.eval_many(s_dense, 0)[0]
    e1, e2 = task_plane(pts)
    center = pts.mean(axis=0)
    u = (pts - center) @ e1
    v = (pts - center) @ e2
    half_u = (u.max() - u.min()) / 2 * (1 + args.margin) + 1e-6
    half_v = (v.max() - v.min()) / 2 * (1 + args.margin) + 1e-6
    mid_u, mid_v = (u.max() + u.min()) / 2, (v.max() + v.min()) / 2
    gu = np.linspace(mid_u - half_u, mid_u + half_u, args.grid)
    gv = np.linspace(mid_v - half_v, mid_v + half_v, args.grid)
    uu, vv = np.meshgrid(gu, gv, indexing="ij")
    queries = center[None, :] + uu.reshape(-1, 1) * e1[None, :] \
        + vv.reshape(-1, 1) * e2[None, :]
    nearest_s, cost, count, flags = eds_field(path, queries)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("u,v,x,y,z,nearest_s,nearest_cost,stationary_count,is_eds\n")
        for i in range(len(queries)):
            vals = [float(uu.flat[i]), float(vv.flat[i]), float(queries[i, 0]),
                    float(queries[i, 1]), float(queries[i, 2]),
                    float(nearest_s[i]), float(cost[i])]
            fh.write(",".join(repr(v) for v in vals)
                     + f",{int(count[i])},{int(flags[i])}\n")
    print(f"{args.grid}x{args.grid} field, {int(flags.sum())} singular cells")
    print(f"wrote {args.out}")
    return 0


def _load_run_config(args) -> scenarios.ScenarioConfig:
    if args.preset:
        factory = {
            "center-reaching": scenarios.shipped_center_reaching_config,
            "target-following": scenarios.shipped_target_following_config,
            "reaching-demo": scenarios.shipped_reaching_demo_config,
        }[args.preset]
        cfg = factory()
    else:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameterError(
                f"{args.config}:{exc.lineno}:{exc.colno}: {exc.msg}"
            ) from exc
        cfg = scenarios.ScenarioConfig.from_dict(doc)
    doc = cfg.to_dict()
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.duration is not None:
        doc["duration"] = args.duration
    if args.algorithm is not None and args.algorithm != "all":
        if args.algorithm not in scenarios.ALGORITHMS:
            raise InvalidParameterError(
                f"unknown algorithm {args.algorithm!r}; "
                f"expected one of {scenarios.ALGORITHMS} or 'all'"
            )
        doc["algorithm"] = args.algorithm
    return scenarios.ScenarioConfig.from_dict(doc)


def _format_table(rows) -> str:
    header = f"{'algo':<5} {'err mean±std [cm]':>20} {'DSJ(s)':>12} {'DSJ(x)':>12} {'F resid [N]':>12}"
    lines = [header, "-" * len(header)]
    for r in rows:
        dsj_s = f"{r['dsj_s']:.3e}" if r["dsj_s"] is not None else "   x   "
        lines.append(
            f"{r['algorithm']:<5} {r['err_mean_cm']:>10.2f}±{r['err_std_cm']:<8.2f} "
            f"{dsj_s:>12} {r['dsj_x']:>12.3e} {r['force_residual_mean']:>12.3f}"
        )
    return "\n".join(lines)


def cmd_run(args) -> int:
    cfg = _load_run_config(args)
    os.makedirs(args.out, exist_ok=True)
    if cfg.kind == "reaching_demo":
        traces = scenarios.run_reaching_demo(cfg)
        _write_demo(traces, args.out)
        print(f"wrote reaching demo sweep to {args.out}")
        return 0

    algos = list(scenarios.ALGORITHMS) if args.algorithm == "all" else [cfg.algorithm]
    path = scenarios.path_from_config(cfg.path)
    traces = {}
    for algo in algos:
        log.info("running %s / %s", cfg.kind, algo)
        traces[algo] = scenarios.run_scenario(cfg, algo)
        traces[algo].to_csv(os.path.join(args.out, f"trace_{algo}.csv"))
        _write_metric_series(
            traces[algo], path, os.path.join(args.out, f"metrics_series_{algo}.csv")
        )
        with open(os.path.join(args.out, f"meta_{algo}.json"), "w",
                  encoding="utf-8") as fh:
            json.dump(traces[algo].meta, fh, sort_keys=True, indent=1, default=str)
            fh.write("\n")
    _write_plot_long(traces, path, os.path.join(args.out, "plot_long.csv"))
    rows = scenarios.comparison_table(traces, path)
    with open(os.path.join(args.out, "metrics.json"), "w", encoding="utf-8") as fh:
        json.dump(rows, fh, sort_keys=True, indent=1)
        fh.write("\n")
    with open(os.path.join(args.out, "table.csv"), "w", encoding="utf-8") as fh:
        fh.write("algorithm,err_mean_cm,err_std_cm,dsj_s,dsj_x,force_residual_mean\n")
        for r in rows:
            dsj_s = repr(r["dsj_s"]) if r["dsj_s"] is not None else ""
            fh.write(
                f"{r['algorithm']},{r['err_mean_cm']!r},{r['err_std_cm']!r},"
                f"{dsj_s},{r['dsj_x']!r},{r['force_residual_mean']!r}\n"
            )
    print(_format_table(rows))
    print(f"wrote traces and metrics to {args.out}")
    return 0


def _write_metric_series(trace, path, filename):
    """Per-sample metric series: error norm and the force decomposition."""
    from .metrics import force_decomposition

    f_norm, f_tau, resid = force_decomposition(trace, path)
    err_cm = np.linalg.norm(trace.err, axis=1) * 100.0
    with open(filename, "w", encoding="utf-8") as fh:
        fh.write("t,err_norm_cm,f_norm,f_tau_abs,f_residual\n")
        for i in range(len(trace)):
            vals = [trace.t[i], err_cm[i], f_norm[i], f_tau[i], resid[i]]
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")


def _write_plot_long(traces: dict, path, filename, decimate: int = 10):
    """Plot-ready long format: one (algorithm, t, series, value) row per entry."""
    from .metrics import force_decomposition

    with open(filename, "w", encoding="utf-8") as fh:
        fh.write("algorithm,t,series,value\n")
        for algo, trace in traces.items():
            f_norm, _, resid = force_decomposition(trace, path)
            err_cm = np.linalg.norm(trace.err, axis=1) * 100.0
            series = {
                "s": trace.s,
                "s_dot": trace.s_dot,
                "err_norm_cm": err_cm,
                "f_norm": f_norm,
                "f_residual": resid,
            }
            for name, values in series.items():
                for i in range(0, len(trace), decimate):
                    fh.write(
                        f"{algo},{float(trace.t[i])!r},{name},{float(values[i])!r}\n"
                    )


def _write_demo(traces: dict, out_dir: str):
    long_csv = os.path.join(out_dir, "reaching_demo.csv")
    with open(long_csv, "w", encoding="utf-8") as fh:
        fh.write("c2,t,s,s_dot,s_ddot\n")
        for c2 in sorted(traces, reverse=True):
            tr = traces[c2]
            for i in range(len(tr)):
                vals = [float(c2), float(tr.t[i]), float(tr.s[i]),
                        float(tr.s_dot[i]), float(tr.s_ddot[i])]
                fh.write(",".join(repr(v) for v in vals) + "\n")
    for c2, tr in traces.items():
        peak = int(np.argmax(tr.s_dot))
        sign_change = bool(tr.s_dot[peak:].min() < -1e-6)
        print(f"c2={c2}: peak s_dot {tr.s_dot[peak]:.4f} m/s at t={tr.t[peak]:.3f} s, "
              f"reversal={'yes' if sign_change else 'no'}")


def cmd_demo_reaching(args) -> int:
    cfg = scenarios.shipped_reaching_demo_config(seed=args.seed, duration=args.duration)
    os.makedirs(args.out, exist_ok=True)
    traces = scenarios.run_reaching_demo(cfg)
    _write_demo(traces, args.out)
    print(f"wrote {os.path.join(args.out, 'reaching_demo.csv')}")
    return 0


def cmd_serve(args) -> int:
    from .session_service import SessionServer

    path = ConstraintPath.load(args.path)
    ws_port = args.ws_port if args.ws_port is not None else args.port + 1
    try:
        server = SessionServer(path, host=args.host, port=args.port, ws_port=ws_port)
        server.start()
    except OSError as exc:
        print(f"bind failed: {exc}", file=sys.stderr)
        return EXIT_BIND
    print(f"serving on tcp://{args.host}:{server.port} "
          f"ws://{args.host}:{server.ws_port}", flush=True)
    try:
        server.wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "fit": cmd_fit,
        "eds-field": cmd_eds_field,
        "run": cmd_run,
        "demo-reaching": cmd_demo_reaching,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidParameterError, DegenerateInputError, IllConditionedFitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
