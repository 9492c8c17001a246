"""Closed-loop guidance scenarios at desk scale.

Wires the simulated plant, a synthetic operator, and one of the phase
trackers into the reference-position loop, and ships three experiments:
reaching toward the osculating center (singularity stress), following a
moving on-curve target (smoothness comparison), and a plant-free reaching
demo sweeping the velocity-error weight.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields

import numpy as np

from .errors import InvalidParameterError
from .metrics import MetricsConfig, dsj_phase, dsj_position, tracking_error_stats
from .path_model import ConstraintPath, RawTrajectory, fit_path, resample_spatial
from .phase_gn import GnState, gn_step
from .phase_lqt import LqtConfig, LqtTracker, PhaseState
from .phase_vm import VmParams, vm_phase_rate
from .plant import AdmittanceParams, HumanModel, PlantState, admittance_step, human_force

CONFIG_SCHEMA_VERSION = 1
ALGORITHMS = ("gn", "lqt", "vm", "gc")
VEL_SMOOTHING_ALPHA = 0.1       # exponential smoothing of differenced positions


# -- built-in path shapes -----------------------------------------------------------

def _dense_line(length=2.0, **_):
    t = np.linspace(0.0, length, max(int(length * 2000), 64))
    return np.stack([t, np.zeros_like(t), np.zeros_like(t)], axis=1)


def _dense_circle(radius=0.5, **_):
    th = np.linspace(0.0, 2 * np.pi, max(int(radius * 40000), 512))
    return radius * np.stack([np.cos(th), np.sin(th), np.zeros_like(th)], axis=1)


def _dense_arc(radius=0.5, span_deg=270.0, **_):
    th = np.linspace(0.0, np.radians(span_deg), max(int(radius * 40000), 512))
    return radius * np.stack([np.cos(th), np.sin(th), np.zeros_like(th)], axis=1)


def _dense_ellipse(a=0.55, b=0.4, **_):
    th = np.linspace(0.0, 2 * np.pi, 40000)
    return np.stack([a * np.cos(th), b * np.sin(th), np.zeros_like(th)], axis=1)


def _dense_scurve(extent=1.3, amplitude=0.22, lobes=2.0, **_):
    x = np.linspace(0.0, extent, 24000)
    y = amplitude * np.sin(np.pi * lobes * x / extent)
    return np.stack([x, y, np.zeros_like(x)], axis=1)


BUILTIN_SHAPES = {
    "line": _dense_line,
    "circle": _dense_circle,
    "arc": _dense_arc,
    "ellipse": _dense_ellipse,
    "scurve": _dense_scurve,
}


def builtin_path(name: str, delta: float = 0.01, num_basis: int = 30,
                 **geometry) -> ConstraintPath:
    """Generate a named analytic shape and push it through the full pipeline."""
    if name not in BUILTIN_SHAPES:
        raise InvalidParameterError(
            f"unknown built-in path {name!r}; available: {sorted(BUILTIN_SHAPES)}"
        )
    points = BUILTIN_SHAPES[name](**geometry)
    sp = resample_spatial(RawTrajectory(points), delta)
    return fit_path(sp, num_basis)


def path_from_config(spec: dict) -> ConstraintPath:
    spec = dict(spec)
    if "file" in spec:
        return ConstraintPath.load(spec["file"])
    name = spec.pop("builtin", None)
    if name is None:
        raise InvalidParameterError("path spec needs 'builtin' or 'file'")
    return builtin_path(name, **spec)


# -- configuration --------------------------------------------------------------------

@dataclass
class HumanConfig:
    k_h: float = 50.0           # grip stiffness toward the scheduled target [N/m]
    f_max: float = 30.0
    curve_gain: float = 0.0     # operator's own pull toward the curve [N/m]
    correction_delay: float = 0.18      # visuomotor latency of that pull [s]
    wander_amp: float = 0.0     # slow aiming imprecision [m]
    wander_hz: float = 0.3
    tremor_amp: float = 0.0     # fast physiological tremor [m]
    tremor_hz: float = 8.0

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> "HumanConfig":
        _reject_unknown(doc, cls)
        return cls(**doc)


@dataclass
class ScenarioConfig:
    kind: str = "target_following"
    algorithm: str = "lqt"
    duration: float = 50.0
    dt: float = 1e-3
    seed: int = 0
    path: dict = field(default_factory=lambda: {"builtin": "scurve"})
    lqt: LqtConfig = field(default_factory=LqtConfig)
    vm: VmParams = field(default_factory=VmParams)
    admittance: AdmittanceParams = field(default_factory=AdmittanceParams)
    human: HumanConfig = field(default_factory=HumanConfig)
    gn_max_inner: int = 10
    target_speed: float = 0.07          # moving-target speed along the curve [m/s]
    target_span: tuple = (0.05, 0.95)   # phase fraction bounds of the sweep
    s_hat_frac: float = 0.25            # center-reaching: anchor point on the curve
    settle_time: float = 1.0            # center-reaching: hold on-curve first [s]
    ramp_time: float = 2.0              # center-reaching: travel to the center [s]
    center_overshoot: float = 0.35      # press past the center by this radius fraction
    goal_frac: float = 0.75             # reaching demo: goal position fraction
    c2_sweep: tuple = (2.0, 0.632, 0.2)

    def __post_init__(self):
        if self.kind not in ("center_reaching", "target_following", "reaching_demo"):
            raise InvalidParameterError(f"unknown scenario kind {self.kind!r}")
        if self.algorithm not in ALGORITHMS:
            raise InvalidParameterError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            )
        if self.duration <= 0 or self.dt <= 0:
            raise InvalidParameterError("duration and dt must be positive")

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_SCHEMA_VERSION,
            "kind": self.kind,
            "algorithm": self.algorithm,
            "duration": self.duration,
            "dt": self.dt,
            "seed": self.seed,
            "path": dict(self.path),
            "lqt": self.lqt.to_dict(),
            "vm": {"k": self.vm.k, "b": self.vm.b},
            "admittance": {
                "m": self.admittance.m,
                "b": self.admittance.b,
                "k": self.admittance.k,
            },
            "human": self.human.to_dict(),
            "gn_max_inner": self.gn_max_inner,
            "target_speed": self.target_speed,
            "target_span": list(self.target_span),
            "s_hat_frac": self.s_hat_frac,
            "settle_time": self.settle_time,
            "ramp_time": self.ramp_time,
            "center_overshoot": self.center_overshoot,
            "goal_frac": self.goal_frac,
            "c2_sweep": list(self.c2_sweep),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        doc = dict(doc)
        version = doc.pop("version", CONFIG_SCHEMA_VERSION)
        if version != CONFIG_SCHEMA_VERSION:
            raise InvalidParameterError(f"unsupported config version {version}")
        converters = {
            "lqt": lambda d: LqtConfig.from_dict(d),
            "vm": lambda d: VmParams(**d),
            "admittance": lambda d: AdmittanceParams(**d),
            "human": lambda d: HumanConfig.from_dict(d),
            "target_span": tuple,
            "c2_sweep": tuple,
        }
        for key, conv in converters.items():
            if key in doc and isinstance(doc[key], (dict, list)):
                try:
                    doc[key] = conv(doc[key])
                except TypeError as exc:
                    raise InvalidParameterError(f"bad field {key!r}: {exc}") from exc
        _reject_unknown(doc, cls)
        return cls(**doc)

    @classmethod
    def from_json_file(cls, filename) -> "ScenarioConfig":
        with open(filename, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, filename):
        with open(filename, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")


def _reject_unknown(doc: dict, cls) -> None:
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise InvalidParameterError(
            f"unknown {cls.__name__} fields: {sorted(unknown)}"
        )


# -- trackers with a common stepping interface -------------------------------------------

class GnTrackerAdapter:
    name = "gn"

    def __init__(self, path: ConstraintPath, s0: float, dt: float, max_inner: int = 10):
        self.path = path
        self.dt = dt
        self.max_inner = max_inner
        self.state = GnState(s=s0)
        self._prev_s = s0
        self._prev_sd = 0.0

    @property
    def phase(self) -> float:
        return self.state.s

    def reference(self, x):
        return self.path.eval_many([self.state.s], 0)[0][0]

    def step(self, x, x_dot):
        self.state = gn_step(self.path, x, self.state, self.max_inner)
        sd = (self.state.s - self._prev_s) / self.dt
        sdd = (sd - self._prev_sd) / self.dt
        self._prev_s, self._prev_sd = self.state.s, sd
        diag = {"gn_iterations": float(self.state.iterations)}
        return self.state.s, sd, sdd, diag


class LqtTrackerAdapter:
    name = "lqt"

    def __init__(self, path: ConstraintPath, s0: float, cfg: LqtConfig):
        self.path = path
        self.tracker = LqtTracker(path, cfg, PhaseState(s0))

    @property
    def phase(self) -> float:
        return self.tracker.state.s

    def reference(self, x):
        return self.path.eval_many([self.tracker.state.s], 0)[0][0]

    def step(self, x, x_dot):
        rep = self.tracker.step(x, x_dot)
        st = rep.new_state
        diag = {
            "lqt_inner": float(rep.inner_iterations),
            "lqt_du_norm": rep.final_delta_u_norm,
        }
        return st.s, st.s_dot, st.s_ddot, diag


class VmTrackerAdapter:
    name = "vm"

    def __init__(self, path: ConstraintPath, s0: float, dt: float, params: VmParams):
        self.path = path
        self.dt = dt
        self.params = params
        self.s = s0
        self._prev_sd = 0.0

    @property
    def phase(self) -> float:
        return self.s

    def reference(self, x):
        return self.path.eval_many([self.s], 0)[0][0]

    def step(self, x, x_dot):
        sd = vm_phase_rate(self.path, x, x_dot, self.s, self.params)
        self.s = float(np.clip(self.s + sd * self.dt, 0.0, self.path.length))
        sdd = (sd - self._prev_sd) / self.dt
        self._prev_sd = sd
        return self.s, sd, sdd, {}


class GcTrackerAdapter:
    """No fixture: the reference is the end effector itself. The phase column
    is filled with the nearest table point purely for post-hoc metrics."""

    name = "gc"

    def __init__(self, path: ConstraintPath, dt: float):
        self.path = path
        self.dt = dt
        grid = np.linspace(0.0, path.length, int(path.length / (path.delta / 2)) + 1)
        self._s_grid = grid
        self._m_grid = path.eval_many(grid, 0)[0]
        self._prev_s = 0.0
        self._prev_sd = 0.0

    @property
    def phase(self) -> float:
        return self._prev_s

    def reference(self, x):
        return np.asarray(x, dtype=float)

    def nearest_s(self, x):
        d2 = np.sum((self._m_grid - np.asarray(x)[None, :]) ** 2, axis=1)
        return float(self._s_grid[int(np.argmin(d2))])

    def step(self, x, x_dot):
        s = self.nearest_s(x)
        sd = (s - self._prev_s) / self.dt
        sdd = (sd - self._prev_sd) / self.dt
        self._prev_s, self._prev_sd = s, sd
        return s, sd, sdd, {}


def make_tracker(algorithm: str, path: ConstraintPath, s0: float, cfg: ScenarioConfig):
    if algorithm == "gn":
        return GnTrackerAdapter(path, s0, cfg.dt, cfg.gn_max_inner)
    if algorithm == "lqt":
        lqt_cfg = cfg.lqt
        if lqt_cfg.dt != cfg.dt:
            doc = lqt_cfg.to_dict()
            doc["dt"] = cfg.dt
            lqt_cfg = LqtConfig.from_dict(doc)
        return LqtTrackerAdapter(path, s0, lqt_cfg)
    if algorithm == "vm":
        return VmTrackerAdapter(path, s0, cfg.dt, cfg.vm)
    if algorithm == "gc":
        return GcTrackerAdapter(path, cfg.dt)
    raise InvalidParameterError(f"unknown algorithm {algorithm!r}")


# -- the simulated guidance loop ------------------------------------------------------------

class GuidanceLoop:
    """One tick of the reference-position loop, shared by the batch runner and
    the interactive stepping service.

    Force mode: the interaction force drives the admittance plant whose
    reference is the tracker's current curve point; the tracker then follows
    the realized position. Drag mode: an externally imposed position bypasses
    the plant and feeds the tracker directly.
    """

    def __init__(self, path: ConstraintPath, tracker, admittance: AdmittanceParams,
                 plant_state: PlantState, dt: float):
        self.path = path
        self.tracker = tracker
        self.admittance = admittance
        self.plant = plant_state
        self.dt = dt
        self.t = 0.0
        self.vel_hat = np.zeros(3)
        self._prev_pos = plant_state.pos.copy()

    def _estimate_velocity(self, pos):
        raw = (pos - self._prev_pos) / self.dt
        self.vel_hat = (1.0 - VEL_SMOOTHING_ALPHA) * self.vel_hat \
            + VEL_SMOOTHING_ALPHA * raw
        self._prev_pos = pos.copy()
        return self.vel_hat

    def _advance_tracker(self, x, v_est, force, plant_vel):
        s, sd, sdd, diag = self.tracker.step(x, v_est)
        ref = self.path.eval_many([s], 0)[0][0]
        self.t += self.dt
        return {
            "t": self.t,
            "x": x.copy(),
            "v": plant_vel.copy(),
            "force": np.asarray(force, dtype=float).copy(),
            "s": s,
            "s_dot": sd,
            "s_ddot": sdd,
            "ref": ref,
            "err": x - ref,
            "diag": diag,
        }

    def step_force(self, force):
        m_ref = self.tracker.reference(self.plant.pos)
        self.plant = admittance_step(self.admittance, self.plant, m_ref, force, self.dt)
        v_est = self._estimate_velocity(self.plant.pos)
        return self._advance_tracker(self.plant.pos, v_est, force, self.plant.vel)

    def step_drag(self, x):
        x = np.asarray(x, dtype=float).reshape(3)
        v_est = self._estimate_velocity(x)
        self.plant = PlantState(pos=x, vel=v_est)
        return self._advance_tracker(x, v_est, np.zeros(3), v_est)


# -- trace recording ----------------------------------------------------------------------

TRACE_COLUMNS = [
    "t", "x", "y", "z", "vx", "vy", "vz", "Fx", "Fy", "Fz",
    "s", "s_dot", "s_ddot", "mx", "my", "mz", "ex", "ey", "ez",
]


@dataclass
class SimTrace:
    dt: float
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    force: np.ndarray
    s: np.ndarray
    s_dot: np.ndarray
    s_ddot: np.ndarray
    ref: np.ndarray
    err: np.ndarray
    diag: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    path: ConstraintPath | None = None

    def __len__(self):
        return len(self.t)

    def row_arrays(self):
        cols = [self.t,
                self.x[:, 0], self.x[:, 1], self.x[:, 2],
                self.v[:, 0], self.v[:, 1], self.v[:, 2],
                self.force[:, 0], self.force[:, 1], self.force[:, 2],
                self.s, self.s_dot, self.s_ddot,
                self.ref[:, 0], self.ref[:, 1], self.ref[:, 2],
                self.err[:, 0], self.err[:, 1], self.err[:, 2]]
        names = list(TRACE_COLUMNS)
        for key in sorted(self.diag):
            names.append(f"diag_{key}")
            cols.append(np.asarray(self.diag[key], dtype=float))
        return names, cols

    def to_csv(self, filename):
        names, cols = self.row_arrays()
        with open(filename, "w", encoding="utf-8") as fh:
            fh.write(",".join(names) + "\n")
            for i in range(len(self.t)):
                fh.write(",".join(repr(float(c[i])) for c in cols) + "\n")

    @classmethod
    def from_csv(cls, filename, dt: float | None = None) -> "SimTrace":
        with open(filename, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        idx = {name: j for j, name in enumerate(header)}
        missing = [c for c in TRACE_COLUMNS if c not in idx]
        if missing:
            raise InvalidParameterError(f"trace CSV missing columns: {missing}")
        get = lambda *names: np.stack([data[:, idx[n]] for n in names], axis=1)
        t = data[:, idx["t"]]
        if dt is None:
            dt = float(t[1] - t[0]) if len(t) > 1 else 1e-3
        diag = {
            name[5:]: data[:, j] for name, j in idx.items() if name.startswith("diag_")
        }
        return cls(
            dt=dt, t=t,
            x=get("x", "y", "z"), v=get("vx", "vy", "vz"),
            force=get("Fx", "Fy", "Fz"),
            s=data[:, idx["s"]], s_dot=data[:, idx["s_dot"]],
            s_ddot=data[:, idx["s_ddot"]],
            ref=get("mx", "my", "mz"), err=get("ex", "ey", "ez"),
            diag=diag,
        )


class _Recorder:
    def __init__(self):
        self.rows = []
        self.diag_keys = None

    def add(self, row: dict):
        if self.diag_keys is None:
            self.diag_keys = sorted(row["diag"])
        self.rows.append(row)

    def build(self, dt: float, meta: dict, path: ConstraintPath) -> SimTrace:
        n = len(self.rows)
        arr = lambda key: np.array([r[key] for r in self.rows])
        diag = {}
        for key in self.diag_keys or []:
            diag[key] = np.array([r["diag"].get(key, 0.0) for r in self.rows])
        return SimTrace(
            dt=dt,
            t=arr("t"),
            x=np.stack([r["x"] for r in self.rows]) if n else np.zeros((0, 3)),
            v=np.stack([r["v"] for r in self.rows]) if n else np.zeros((0, 3)),
            force=np.stack([r["force"] for r in self.rows]) if n else np.zeros((0, 3)),
            s=arr("s"), s_dot=arr("s_dot"), s_ddot=arr("s_ddot"),
            ref=np.stack([r["ref"] for r in self.rows]) if n else np.zeros((0, 3)),
            err=np.stack([r["err"] for r in self.rows]) if n else np.zeros((0, 3)),
            diag=diag, meta=meta, path=path,
        )


# -- synthetic operator noise ------------------------------------------------------------

def _band_noise(rng, n: int, dt: float, amp: float, hz: float) -> np.ndarray:
    """Seeded smooth noise per axis: white noise through a one-pole filter at
    the given bandwidth, rescaled to the requested RMS amplitude."""
    if amp <= 0.0:
        return np.zeros((n, 3))
    raw = rng.standard_normal((n, 3))
    alpha = float(np.clip(2.0 * np.pi * hz * dt, 1e-4, 1.0))
    out = np.empty_like(raw)
    acc = np.zeros(3)
    for i in range(n):
        acc += alpha * (raw[i] - acc)
        out[i] = acc
    rms = np.sqrt(np.mean(out**2, axis=0))
    rms[rms == 0.0] = 1.0
    return out / rms * amp


def _carrier(rng, n: int, dt: float, amp: float, hz: float) -> np.ndarray:
    """Seeded narrowband tremor: a drifting-phase sinusoid per axis."""
    if amp <= 0.0:
        return np.zeros((n, 3))
    t = np.arange(n) * dt
    phases = rng.uniform(0.0, 2 * np.pi, 3)
    drift = _band_noise(rng, n, dt, amp=0.35, hz=0.5)
    return amp * np.sin(
        2 * np.pi * hz * t[:, None] + phases[None, :] + 2 * np.pi * drift
    )


# -- scenario runners -----------------------------------------------------------------------

def _curve_nearest_fn(path: ConstraintPath):
    grid = np.linspace(0.0, path.length, int(path.length / (path.delta / 2)) + 1)
    table = path.eval_many(grid, 0)[0]

    def nearest(x):
        d2 = np.sum((table - np.asarray(x)[None, :]) ** 2, axis=1)
        return table[int(np.argmin(d2))]

    return nearest


def _make_loop(cfg: ScenarioConfig, path: ConstraintPath, algorithm: str,
               s0: float, x0) -> GuidanceLoop:
    tracker = make_tracker(algorithm, path, s0, cfg)
    return GuidanceLoop(path, tracker, cfg.admittance, PlantState.at_rest(x0), cfg.dt)


def run_center_reaching(cfg: ScenarioConfig, algorithm: str | None = None) -> SimTrace:
    """Drive the end effector from the curve toward the osculating center.

    The synthetic operator grips stiffly and moves its target from the anchor
    point through the center of the local osculating circle (pressing slightly
    past it, like an operator leaning through the singular point), then
    dwells; seeded tremor supplies the small perturbations around it. The
    spring equilibrium between grip and fixture would otherwise stop short of
    the center and never expose the singularity."""
    algorithm = algorithm or cfg.algorithm
    path = path_from_config(cfg.path)
    n = int(round(cfg.duration / cfg.dt))
    s_hat = cfg.s_hat_frac * path.length
    anchor = path.point(s_hat)
    if anchor.normal is None:
        raise InvalidParameterError("center reaching needs a curved anchor point")
    center = anchor.m + anchor.osc_radius * anchor.normal
    goal = center + cfg.center_overshoot * anchor.osc_radius * anchor.normal

    rng = np.random.default_rng(cfg.seed)
    tremor = _carrier(rng, n, cfg.dt, cfg.human.tremor_amp, cfg.human.tremor_hz)
    wander = _carrier(rng, n, cfg.dt, cfg.human.wander_amp, cfg.human.wander_hz)

    t_hold = cfg.settle_time
    t_ramp = cfg.ramp_time
    times = np.arange(1, n + 1) * cfg.dt
    frac = np.clip((times - t_hold) / t_ramp, 0.0, 1.0)
    base = anchor.m[None, :] * (1.0 - frac[:, None]) + goal[None, :] * frac[:, None]
    targets = base + tremor + wander

    model = HumanModel(
        kind="spring-to-target", k_h=cfg.human.k_h, f_max=cfg.human.f_max,
        target=None, curve_gain=cfg.human.curve_gain,
        curve_nearest=_curve_nearest_fn(path) if cfg.human.curve_gain > 0 else None,
    )
    loop = _make_loop(cfg, path, algorithm, s_hat, anchor.m)
    rec = _Recorder()
    for i in range(n):
        model.target = lambda t, i=i: targets[i]
        force = human_force(model, loop.plant, times[i])
        row = loop.step_force(force)
        row["diag"]["target_x"] = targets[i][0]
        row["diag"]["target_y"] = targets[i][1]
        row["diag"]["target_z"] = targets[i][2]
        rec.add(row)
    meta = {
        "scenario": "center_reaching", "algorithm": algorithm, "seed": cfg.seed,
        "config": cfg.to_dict(), "s_hat": s_hat,
        "osc_center": [float(v) for v in center],
        "osc_radius": anchor.osc_radius,
    }
    return rec.build(cfg.dt, meta, path)


def run_target_following(cfg: ScenarioConfig, algorithm: str | None = None) -> SimTrace:
    """Follow a point sweeping back and forth along the curve.

    The operator grip has seeded narrowband wander and tremor; a delayed
    curve-keeping pull stands in for the operator's own visual correction
    toward the task curve. That correction acts on where the hand was a
    visuomotor latency ago, so it stays quiet when a fixture already holds
    the end effector on the curve and works hard (and oscillates, as delayed
    feedback does) when nothing else enforces the constraint."""
    algorithm = algorithm or cfg.algorithm
    path = path_from_config(cfg.path)
    n = int(round(cfg.duration / cfg.dt))
    lo = cfg.target_span[0] * path.length
    hi = cfg.target_span[1] * path.length

    times = np.arange(1, n + 1) * cfg.dt
    span = hi - lo
    phase = np.mod(cfg.target_speed * times, 2 * span)
    s_target = lo + np.where(phase <= span, phase, 2 * span - phase)
    base = path.eval_many(s_target, 0)[0]

    rng = np.random.default_rng(cfg.seed)
    tremor = _carrier(rng, n, cfg.dt, cfg.human.tremor_amp, cfg.human.tremor_hz)
    wander = _carrier(rng, n, cfg.dt, cfg.human.wander_amp, cfg.human.wander_hz)
    targets = base + tremor + wander

    model = HumanModel(
        kind="spring-to-target", k_h=cfg.human.k_h, f_max=cfg.human.f_max,
        target=None,
    )
    nearest = _curve_nearest_fn(path) if cfg.human.curve_gain > 0 else None
    delay_ticks = max(int(round(cfg.human.correction_delay / cfg.dt)), 1)
    pos_history = []

    x0 = base[0]
    loop = _make_loop(cfg, path, algorithm, float(s_target[0]), x0)
    rec = _Recorder()
    from .plant import saturate
    for i in range(n):
        model.target = lambda t, i=i: targets[i]
        force = human_force(model, loop.plant, times[i])
        if nearest is not None:
            x_del = pos_history[-delay_ticks] if len(pos_history) >= delay_ticks \
                else loop.plant.pos
            force = saturate(
                force + cfg.human.curve_gain * (nearest(x_del) - x_del),
                cfg.human.f_max,
            )
        pos_history.append(loop.plant.pos.copy())
        if len(pos_history) > delay_ticks + 1:
            pos_history.pop(0)
        row = loop.step_force(force)
        row["diag"]["target_x"] = targets[i][0]
        row["diag"]["target_y"] = targets[i][1]
        row["diag"]["target_z"] = targets[i][2]
        rec.add(row)
    meta = {
        "scenario": "target_following", "algorithm": algorithm, "seed": cfg.seed,
        "config": cfg.to_dict(),
    }
    return rec.build(cfg.dt, meta, path)


def run_reaching_demo(cfg: ScenarioConfig) -> dict:
    """Plant-free reaching toward a fixed goal on the curve, sweeping the
    velocity-error weight. Returns one trace per weight setting."""
    path = path_from_config(cfg.path)
    n = int(round(cfg.duration / cfg.dt))
    goal_s = cfg.goal_frac * path.length
    goal = path.eval_many([goal_s], 0)[0][0]
    out = {}
    for c2 in cfg.c2_sweep:
        doc = cfg.lqt.to_dict()
        doc["c2"] = [float(c2)] * 3
        doc["dt"] = cfg.dt
        lqt_cfg = LqtConfig.from_dict(doc)
        tracker = LqtTracker(path, lqt_cfg, PhaseState(0.0))
        rec = _Recorder()
        t = 0.0
        for _ in range(n):
            rep = tracker.step(goal, np.zeros(3))
            st = rep.new_state
            t += cfg.dt
            ref = path.eval_many([st.s], 0)[0][0]
            rec.add({
                "t": t, "x": goal, "v": np.zeros(3), "force": np.zeros(3),
                "s": st.s, "s_dot": st.s_dot, "s_ddot": st.s_ddot,
                "ref": ref, "err": goal - ref,
                "diag": {"lqt_inner": float(rep.inner_iterations)},
            })
        meta = {
            "scenario": "reaching_demo", "algorithm": "lqt", "seed": cfg.seed,
            "c2": float(c2), "goal_s": goal_s, "config": cfg.to_dict(),
        }
        out[float(c2)] = rec.build(cfg.dt, meta, path)
    return out


def run_scenario(cfg: ScenarioConfig, algorithm: str | None = None):
    if cfg.kind == "center_reaching":
        return run_center_reaching(cfg, algorithm)
    if cfg.kind == "target_following":
        return run_target_following(cfg, algorithm)
    return run_reaching_demo(cfg)


# -- shipped experiment configurations ---------------------------------------------------------

def shipped_center_reaching_config(seed: int = 0, duration: float = 10.0,
                                   algorithm: str = "lqt") -> ScenarioConfig:
    """Center-reaching stress test on a desk-scale circle (published weights)."""
    return ScenarioConfig(
        kind="center_reaching", algorithm=algorithm, duration=duration, seed=seed,
        path={"builtin": "circle", "radius": 0.15},
        lqt=LqtConfig(
            c1=47.8 * np.ones(3), c2=0.02 * np.ones(3), c3=0.01, r_weight=1e-5,
            single_advance=True,
        ),
        human=HumanConfig(k_h=2000.0, f_max=60.0, tremor_amp=3e-4, tremor_hz=8.0),
        s_hat_frac=0.25, settle_time=1.0, ramp_time=1.5, center_overshoot=0.35,
    )


def shipped_target_following_config(seed: int = 0, duration: float = 50.0,
                                    algorithm: str = "lqt") -> ScenarioConfig:
    """Moving-target comparison scenario (published weights)."""
    return ScenarioConfig(
        kind="target_following", algorithm=algorithm, duration=duration, seed=seed,
        path={"builtin": "scurve"},
        lqt=LqtConfig(
            c1=400.0 * np.ones(3), c2=0.14 * np.ones(3), c3=0.01, r_weight=1e-5,
            single_advance=True,
        ),
        human=HumanConfig(
            k_h=50.0, f_max=30.0, curve_gain=120.0, correction_delay=0.18,
            wander_amp=0.035, wander_hz=0.25, tremor_amp=0.002, tremor_hz=8.0,
        ),
        target_speed=0.07,
    )


def shipped_reaching_demo_config(seed: int = 0, duration: float = 2.0) -> ScenarioConfig:
    """Fixed-goal reaching demo sweeping the velocity-error weight."""
    return ScenarioConfig(
        kind="reaching_demo", algorithm="lqt", duration=duration, seed=seed,
        path={"builtin": "line", "length": 2.0, "num_basis": 2},
        lqt=LqtConfig(c1=47.8 * np.ones(3), c3=0.01, r_weight=1e-5),
        goal_frac=0.75, c2_sweep=(2.0, 0.632, 0.2),
    )


# -- comparison table -------------------------------------------------------------------------

def comparison_table(traces: dict, path: ConstraintPath) -> list[dict]:
    """Table-shaped summary per algorithm: tracking error (cm), phase DSJ, and
    position DSJ. The no-fixture run reports its error against the scheduled
    target instead of a fixture reference."""
    from .metrics import force_decomposition

    rows = []
    for name, trace in traces.items():
        cfg = MetricsConfig(
            duration=float(trace.t[-1]),
            path_length=path.length,
            t0=0.0,
            window=20,
            dt=trace.dt,
        )
        if name == "gc":
            tgt = np.stack(
                [trace.diag[k] for k in ("target_x", "target_y", "target_z")], axis=1
            )
            norms = np.linalg.norm(trace.x - tgt, axis=1) * 100.0
            mean_e, std_e = float(norms.mean()), float(norms.std())
            dsj_s = None
        else:
            mean_e, std_e = tracking_error_stats(trace)
            dsj_s = dsj_phase(trace.s, cfg)
        _, _, resid = force_decomposition(trace, path)
        rows.append({
            "algorithm": name,
            "err_mean_cm": mean_e,
            "err_std_cm": std_e,
            "dsj_s": dsj_s,
            "dsj_x": dsj_position(trace.x, cfg),
            "force_residual_mean": float(np.mean(resid)),
        })
    return rows
