"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -s` to see every line. The long
closed-loop comparison (criterion 7) runs four 50-second simulations and
dominates the suite's runtime.
"""

import json
import socket
import time

import numpy as np
import pytest

from vfphase.errors import SingularPhaseVelocityError
from vfphase.path_model import eds_analyze, nearest_point_bruteforce
from vfphase.phase_gn import GnState, gn_step, optimal_phase_velocity
from vfphase.phase_lqt import (
    LqtConfig,
    LqtTracker,
    PhaseState,
    build_system,
    delta_u_star,
    residual_and_jacobian,
    rollout,
)
from vfphase.scenarios import (
    builtin_path,
    comparison_table,
    path_from_config,
    run_center_reaching,
    run_reaching_demo,
    run_target_following,
    shipped_center_reaching_config,
    shipped_reaching_demo_config,
    shipped_target_following_config,
)

from conftest import make_path, random_smooth_polyline


def _report(num, description, ok):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {description}")
    assert ok, f"criterion {num} failed: {description}"


# -- criterion 1 -----------------------------------------------------------------------

def test_c01_unit_speed_pipeline():
    t0 = time.perf_counter()
    worst = 0.0
    for name in ("circle", "ellipse"):
        path = builtin_path(name, delta=0.01, num_basis=30)
        knots = np.arange(0.0, path.length + 1e-9, path.delta)
        speed = np.linalg.norm(path.eval_many(knots, 1)[1], axis=1)
        worst = max(worst, float(np.abs(speed - 1.0).max()))
    elapsed = time.perf_counter() - t0
    _report(
        1,
        f"unit-speed pipeline: max ||m'|-1| = {worst:.4f} <= 0.02, "
        f"{elapsed:.1f} s < 5 s",
        worst <= 0.02 and elapsed < 5.0,
    )


# -- criterion 2 -----------------------------------------------------------------------

def test_c02_derivative_and_jacobian_correctness(circle_path):
    rng = np.random.default_rng(2)
    h = 1e-5
    s = rng.uniform(2 * h, circle_path.length - 2 * h, 100)
    m_p, mp_p, _ = circle_path.eval_many(s + h, 2)
    m_m, mp_m, _ = circle_path.eval_many(s - h, 2)
    _, mp, mpp = circle_path.eval_many(s, 2)
    rel1 = np.linalg.norm((m_p - m_m) / (2 * h) - mp, axis=1) \
        / np.linalg.norm(mp, axis=1)
    rel2 = np.linalg.norm((mp_p - mp_m) / (2 * h) - mpp, axis=1) \
        / np.linalg.norm(mpp, axis=1)

    hj = 1e-6
    worst_j = 0.0
    x = np.array([0.3, 0.2, 0.05])
    xd = np.array([0.05, -0.02, 0.01])
    for _ in range(100):
        state = np.array(
            [rng.uniform(0.2, circle_path.length - 0.2), rng.normal(), rng.normal()]
        )
        _, J = residual_and_jacobian(circle_path, x, xd, state[None, :])
        fd = np.zeros((7, 3))
        for k in range(3):
            dp, dm = state.copy(), state.copy()
            dp[k] += hj
            dm[k] -= hj
            fp, _ = residual_and_jacobian(circle_path, x, xd, dp[None, :])
            fm, _ = residual_and_jacobian(circle_path, x, xd, dm[None, :])
            fd[:, k] = (fp[0] - fm[0]) / (2 * hj)
        scale = max(1.0, np.abs(J[0]).max())
        worst_j = max(worst_j, float(np.abs(fd - J[0]).max() / scale))
    ok = rel1.max() < 1e-5 and rel2.max() < 1e-5 and worst_j < 1e-5
    _report(
        2,
        f"derivatives vs finite differences: m' {rel1.max():.2e}, "
        f"m'' {rel2.max():.2e}, residual Jacobian {worst_j:.2e} < 1e-5",
        ok,
    )


# -- criterion 3 -----------------------------------------------------------------------

def test_c03_oracle_equivalence():
    rng = np.random.default_rng(42)
    cases = 0
    worst = 0.0
    while cases < 200:
        path = make_path(random_smooth_polyline(rng), delta=0.01, num_basis=25)
        for _ in range(10):
            s_base = rng.uniform(0.1 * path.length, 0.9 * path.length)
            cp = path.point(s_base)
            radius = min(cp.osc_radius, 0.5)
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            x = cp.m + rng.uniform(0.0, 0.5 * radius) * direction
            s_oracle, _ = nearest_point_bruteforce(path, x, path.delta / 2.0)
            star = path.point(s_oracle)
            feasible = (
                star.normal is None
                or abs(float((x - star.m) @ star.normal)) < 0.5 * star.osc_radius
            )
            if not feasible or not 1e-3 < s_oracle < path.length - 1e-3:
                continue
            out = gn_step(path, x, GnState(s=s_base), max_inner=100)
            worst = max(worst, abs(out.s - s_oracle) / path.length)
            cases += 1
            if cases >= 200:
                break
    _report(
        3,
        f"oracle equivalence over {cases} cases: max |s_gn - s*| = "
        f"{worst:.2e} L < 1e-6 L",
        worst < 1e-6,
    )


# -- criterion 4 -----------------------------------------------------------------------

def test_c04_eds_reproduction(circle_path):
    cp = circle_path.point(1.0)
    r = cp.osc_radius
    grid_step = circle_path.delta / 2.0

    offsets = np.linspace(0.8 * r, r, 41)
    flags = np.array(
        [eds_analyze(circle_path, cp.m + d * cp.normal).is_eds for d in offsets]
    )
    flip_ok = (not flags[0]) and flags[-1]
    flip_at = offsets[int(np.argmax(flags))]
    transition_ok = flip_ok and abs(flip_at - r) <= 2 * grid_step
    below = np.array(
        [eds_analyze(circle_path, cp.m + d * cp.normal).is_eds
         for d in np.linspace(0.1 * r, 0.75 * r, 8)]
    )
    exact_ok = not below.any()

    s0 = 1.0
    u = circle_path.eval_many([s0 + np.pi * r / 2.0], 0)[0][0]
    u = u / np.linalg.norm(u)
    eps = 1e-3 * r
    plus = gn_step(circle_path, eps * u, GnState(s=s0), max_inner=200000)
    minus = gn_step(circle_path, -eps * u, GnState(s=s0), max_inner=200000)
    jump = abs(plus.s - minus.s)
    jump_ok = jump >= 0.4 * np.pi * r

    # jerk-limited tracker on the same inputs: the per-tick phase change stays
    # below the rate bound 10 L / T
    duration = 2.0
    rate_bound = 10.0 * circle_path.length / duration
    worst_rate = 0.0
    cfg = LqtConfig(c1=47.8 * np.ones(3), c2=0.02 * np.ones(3), single_advance=True)
    for x in (eps * u, -eps * u):
        tracker = LqtTracker(circle_path, cfg, PhaseState(s0))
        prev = s0
        for _ in range(int(duration / cfg.dt)):
            rep = tracker.step(x, np.zeros(3))
            worst_rate = max(worst_rate, abs(rep.new_state.s - prev) / cfg.dt)
            prev = rep.new_state.s
    lqt_ok = worst_rate < rate_bound

    _report(
        4,
        f"EDS reproduction: transition at {flip_at:.4f} (r={r:.4f}, "
        f"+-{2 * grid_step:.3f}), no flags below 0.75r, GN jump {jump:.3f} >= "
        f"{0.4 * np.pi * r:.3f}, LQT rate {worst_rate:.2f} < {rate_bound:.1f}",
        transition_ok and exact_ok and jump_ok and lqt_ok,
    )


# -- criterion 5 -----------------------------------------------------------------------

def test_c05_phase_velocity_closed_form(circle_path):
    s0 = 1.3
    cp = circle_path.point(s0)
    r = cp.osc_radius
    v = 0.2
    x_dot = v * cp.m_prime / np.linalg.norm(cp.m_prime)
    speed = float(np.linalg.norm(cp.m_prime))
    worst = 0.0
    for frac in np.linspace(0.0, 0.9, 19):
        x = cp.m + frac * r * cp.normal
        got = optimal_phase_velocity(circle_path, s0, x, x_dot)
        closed = v * speed / (1.0 - frac)
        worst = max(worst, abs(got - closed) / abs(closed))
    # divergence shape: the amplification from d=0 to d=0.9r is 10x
    amp = optimal_phase_velocity(circle_path, s0, cp.m + 0.9 * r * cp.normal, x_dot) \
        / optimal_phase_velocity(circle_path, s0, cp.m, x_dot)
    shape_ok = abs(amp - 10.0) < 0.1
    try:
        optimal_phase_velocity(circle_path, s0, cp.m + r * cp.normal, x_dot)
        raised = False
    except SingularPhaseVelocityError:
        raised = True
    _report(
        5,
        f"phase velocity: closed-form match {worst:.2e} < 1% for d <= 0.9r, "
        f"amplification(0.9r) = {amp:.3f}, singular at d = r: {raised}",
        worst < 0.01 and shape_ok and raised,
    )


# -- criterion 6 -----------------------------------------------------------------------

def test_c06_reaching_demo_family():
    t0 = time.perf_counter()
    cfg = shipped_reaching_demo_config(duration=2.0)
    traces = run_reaching_demo(cfg)
    elapsed = time.perf_counter() - t0
    high = traces[2.0].s_dot
    low = traces[0.2].s_dot
    peak_hi = int(np.argmax(high))
    bell_ok = high.min() > -1e-6 and 0 < peak_hi < len(high) - 1
    reversal_ok = low[int(np.argmax(low)):].min() < -1e-4
    peaks = [int(np.argmax(traces[c2].s_dot)) for c2 in (2.0, 0.632, 0.2)]
    monotone_ok = peaks[0] < peaks[1] < peaks[2]
    _report(
        6,
        f"reaching demo: bell at c2=2.0, reversal at c2=0.2, peaks {peaks} "
        f"monotone, {elapsed:.1f} s < 10 s",
        bell_ok and reversal_ok and monotone_ok and elapsed < 10.0,
    )


# -- criterion 7 -----------------------------------------------------------------------

def test_c07_table_ordering():
    t0 = time.perf_counter()
    cfg = shipped_target_following_config(seed=0, duration=50.0)
    path = path_from_config(cfg.path)
    traces = {a: run_target_following(cfg, a) for a in ("gn", "lqt", "vm", "gc")}
    elapsed = time.perf_counter() - t0
    rows = {r["algorithm"]: r for r in comparison_table(traces, path)}

    dsj_order = rows["lqt"]["dsj_s"] < rows["vm"]["dsj_s"] < rows["gn"]["dsj_s"]
    dsj_margin = rows["lqt"]["dsj_s"] * 100.0 <= rows["gn"]["dsj_s"]
    err_ok = all(0.5 <= rows[a]["err_mean_cm"] <= 10.0 for a in ("gn", "lqt", "vm"))
    gc_resid = rows["gc"]["force_residual_mean"]
    resid_ok = all(
        gc_resid > rows[a]["force_residual_mean"] for a in ("gn", "lqt", "vm")
    )
    _report(
        7,
        "table ordering: DSJ(s) LQT {:.2e} < VM {:.2e} < GN {:.2e} "
        "(ratio {:.0f}x), fixture errors {} cm in [0.5, 10], gc residual "
        "{:.2f} N above fixtures, {:.0f} s < 120 s".format(
            rows["lqt"]["dsj_s"], rows["vm"]["dsj_s"], rows["gn"]["dsj_s"],
            rows["gn"]["dsj_s"] / rows["lqt"]["dsj_s"],
            [round(rows[a]["err_mean_cm"], 2) for a in ("gn", "lqt", "vm")],
            gc_resid, elapsed,
        ),
        dsj_order and dsj_margin and err_ok and resid_ok and elapsed < 120.0,
    )


# -- criterion 8 -----------------------------------------------------------------------

def test_c08_batch_rollout_identity(circle_path):
    rng = np.random.default_rng(8)
    worst_roll = 0.0
    for _ in range(50):
        T = int(rng.integers(2, 30))
        sys = build_system(float(rng.uniform(1e-4, 0.05)), T)
        s1 = rng.normal(size=3)
        u = rng.normal(size=T)
        batch = rollout(sys, s1, u)
        rec = [np.asarray(s1, dtype=float)]
        for k in range(T - 1):
            rec.append(sys.A @ rec[-1] + sys.B * u[k])
        worst_roll = max(worst_roll, float(np.abs(batch - np.stack(rec)).max()))

    worst_ne = 0.0
    for _ in range(20):
        T = int(rng.integers(3, 20))
        sys = build_system(1e-3, T)
        u = rng.normal(size=T)
        traj = rollout(sys, [rng.uniform(0.2, 2.8), rng.normal(), rng.normal()], u)
        f, J = residual_and_jacobian(
            circle_path, rng.normal(scale=0.3, size=3),
            rng.normal(scale=0.1, size=3), traj,
        )
        w = np.abs(rng.normal(size=7)) + 0.01
        r = 10 ** rng.uniform(-6, -2)
        du = delta_u_star(sys, f, J, w, r, u)
        Su = sys.S_u.reshape(T, 3, T)
        G = np.einsum("tij,tjk->tik", J, Su)
        M = np.einsum("tiy,tiz->yz", G, w[None, :, None] * G) + r * np.eye(T)
        rhs = -np.einsum("tiy,ti->y", G, w[None, :] * f) - r * u
        resid = np.linalg.norm(M @ du - rhs) / max(np.linalg.norm(rhs), 1e-30)
        worst_ne = max(worst_ne, float(resid))
    _report(
        8,
        f"batch identity: rollout vs recursion {worst_roll:.2e} <= 1e-12, "
        f"normal-equation residual {worst_ne:.2e} <= 1e-8",
        worst_roll <= 1e-12 and worst_ne <= 1e-8,
    )


# -- criterion 9 -----------------------------------------------------------------------

def test_c09_determinism(tmp_path):
    from vfphase.cli import main as cli_main

    cfg = shipped_center_reaching_config(seed=13, duration=1.0)
    f = tmp_path / "cfg.json"
    cfg.save(f)
    outs = []
    for name in ("o1", "o2"):
        out = tmp_path / name
        rc = cli_main(["run", "--config", str(f), "--algorithm", "lqt",
                       "--out", str(out)])
        assert rc == 0
        outs.append(out)
    same = all(
        (outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
        for n in ("trace_lqt.csv", "metrics.json", "table.csv")
    )
    _report(9, "determinism: repeated runs yield byte-identical outputs", same)


# -- criteria 10 and 11 (secondary: stepping service driven over the protocol) -----------

class _Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        self.fh = self.sock.makefile("rb")
        self.recv()                                    # hello

    def send(self, doc):
        payload = json.dumps(doc).encode()
        self.sock.sendall(str(len(payload)).encode() + b"\n" + payload)

    def recv(self):
        header = self.fh.readline()
        if not header:
            raise ConnectionError("closed")
        return json.loads(self.fh.read(int(header.strip())))

    def rpc(self, doc, rid):
        doc = dict(doc)
        doc["id"] = rid
        self.send(doc)
        for _ in range(2000):
            msg = self.recv()
            if msg.get("id") == rid:
                return msg
        raise AssertionError("reply not received")

    def close(self):
        self.sock.close()


@pytest.fixture(scope="module")
def acceptance_server():
    from vfphase.session_service import SessionServer

    path = builtin_path("circle", radius=0.15)
    server = SessionServer(path, host="127.0.0.1", port=0, ws_port=0)
    server.start()
    yield path, server
    server.stop()


def test_c10_protocol_equivalence_and_rates(acceptance_server):
    path, server = acceptance_server
    cfg = shipped_center_reaching_config(seed=4, duration=0.8)
    trace = run_center_reaching(cfg, "lqt")
    client = _Client(server.port)
    client.rpc({"type": "run", "on": False}, 1)
    client.rpc({"type": "load_path", "path": json.loads(path.to_json())}, 2)
    client.rpc({"type": "set_mode", "mode": "apply-force"}, 3)
    client.rpc({"type": "set_params", "lqt": cfg.lqt.to_dict()}, 4)
    s_hat = trace.meta["s_hat"]
    x0 = path.eval_many([s_hat], 0)[0][0]
    client.rpc({"type": "reset", "s": s_hat, "x": [float(v) for v in x0]}, 5)
    worst = 0.0
    for i in range(400):
        state = client.rpc(
            {"type": "step", "F": [float(v) for v in trace.force[i]]}, 100 + i
        )
        worst = max(
            worst,
            float(np.max(np.abs(np.array(state["x"]) - trace.x[i]))),
            abs(state["s"] - trace.s[i]),
        )
    replay_ok = worst < 1e-9

    # live rates: stream drag inputs for 2 seconds on a second connection
    import threading

    counts = {"state": 0}
    stop = threading.Event()
    live = _Client(server.port)

    def reader():
        try:
            while not stop.is_set():
                msg = live.recv()
                if msg["type"] == "state":
                    counts["state"] += 1
        except (ConnectionError, OSError, ValueError):
            pass

    live.send({"type": "run", "on": True})
    live.send({"type": "set_mode", "mode": "drag-ee"})
    cp = path.point(0.3)
    live.send({"type": "reset", "s": 0.3, "x": [float(v) for v in cp.m]})
    threading.Thread(target=reader, daemon=True).start()
    ticks0 = server.ticks_done
    t_end = time.time() + 2.0
    i = 0
    while time.time() < t_end:
        x = cp.m + 0.01 * np.array([np.cos(i * 0.05), np.sin(i * 0.05), 0.0])
        live.send({"type": "input", "x": [float(v) for v in x]})
        i += 1
        time.sleep(0.008)
    ticks = server.ticks_done - ticks0
    stop.set()
    live.close()
    rate_ok = ticks >= 400 and counts["state"] >= 60

    client.rpc({"type": "run", "on": False}, 900)
    client.rpc({"type": "set_mode", "mode": "drag-ee"}, 901)
    t0 = time.perf_counter()
    for k in range(40):
        client.rpc({"type": "step", "x": [float(v) for v in x0]}, 1000 + k)
    latency = (time.perf_counter() - t0) / 40 * 1000
    client.rpc({"type": "run", "on": True}, 990)
    client.close()
    latency_ok = latency < 5.0
    _report(
        10,
        f"protocol: replay max deviation {worst:.2e} < 1e-9, "
        f"{ticks / 2.0:.0f} Hz stepping >= 200, {counts['state'] / 2.0:.0f} Hz "
        f"broadcast >= 30, {latency:.2f} ms round-trip < 5",
        replay_ok and rate_ok and latency_ok,
    )


def test_c11_interactive_eds_demo(acceptance_server):
    """Headless protocol client dragging across the circle center: the
    nearest-point law jumps the reference within one frame; the jerk-limited
    law moves it continuously."""
    path, server = acceptance_server
    cp = path.point(0.2)
    r = cp.osc_radius
    center = cp.m + r * cp.normal
    ticks_per_frame = 33                      # one 30 Hz frame at 1 kHz stepping

    def drag_through(algorithm):
        client = _Client(server.port)
        client.rpc({"type": "run", "on": False}, 1)
        client.rpc({"type": "select_algorithm", "algorithm": algorithm}, 2)
        client.rpc({"type": "reset", "s": 0.2, "x": [float(v) for v in cp.m]}, 3)
        # drag path: from the curve through the center, slightly off-diameter
        side = np.cross(cp.normal, cp.m_prime)
        side /= np.linalg.norm(side)
        frames = []
        n_steps = 1200
        for i in range(n_steps):
            frac = i / (n_steps - 1)
            x = cp.m + frac * 1.35 * r * cp.normal + 0.03 * r * np.sin(
                np.pi * frac) * side
            state = client.rpc({"type": "step", "x": [float(v) for v in x]}, 100 + i)
            if i % ticks_per_frame == 0:
                frames.append(state["s"])
        client.close()
        return np.abs(np.diff(np.asarray(frames)))

    gn_jumps = drag_through("gn")
    lqt_jumps = drag_through("lqt")
    gn_ok = gn_jumps.max() >= 0.3 * np.pi * r
    lqt_ok = lqt_jumps.max() <= 0.1 * np.pi * r
    _report(
        11,
        f"interactive EDS demo: GN per-frame jump {gn_jumps.max():.3f} >= "
        f"{0.3 * np.pi * r:.3f}, LQT per-frame max {lqt_jumps.max():.3f} <= "
        f"{0.1 * np.pi * r:.3f}",
        gn_ok and lqt_ok,
    )
