"""Arc-length-parametrized constraint curves.

Builds the curve in three stages: resample a demonstrated trajectory at uniform
geometric spacing, fit a Bernstein-basis polynomial over the curvilinear
coordinate, then query positions, derivatives, curvature and the Euclidean
distance singularity (EDS) structure of the fitted curve.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInputError,
    FitQualityWarning,
    IllConditionedFitError,
    InvalidParameterError,
)

# Tolerances shared by fitting and EDS analysis.
UNIT_SPEED_TOL = 0.02       # allowed |speed - 1| at knots after fitting
CURVATURE_FLOOR = 1e-9      # below this 1/m the normal is undefined and r = inf
EDS_OFFSET_RTOL = 1e-3      # relative slack on the offset >= osculating-radius test
PATH_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RawTrajectory:
    """A demonstrated end-effector recording: ordered 3D samples, optional times."""

    samples: np.ndarray                 # (n, 3) positions [m]
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if samples.ndim != 2 or samples.shape[1] != 3:
            raise InvalidParameterError("samples must be an (n, 3) array")
        if samples.shape[0] < 2:
            raise DegenerateInputError("need at least 2 samples")
        if np.allclose(samples, samples[0], atol=0.0, rtol=0.0):
            raise DegenerateInputError("all samples identical")
        object.__setattr__(self, "samples", samples)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps, dtype=float)
            if ts.shape != (samples.shape[0],):
                raise InvalidParameterError("timestamps must match samples")
            object.__setattr__(self, "timestamps", ts)


@dataclass(frozen=True)
class SpatialPath:
    """Uniformly resampled curve: consecutive points at geometric distance delta."""

    delta: float
    points: np.ndarray                  # (M + 1, 3)
    knots: np.ndarray                   # (M + 1,) curvilinear coordinates k * delta
    length: float                       # M * delta

    @property
    def num_segments(self) -> int:
        return len(self.points) - 1


@dataclass
class FitReport:
    residual_rms: float
    speed_min: float
    speed_max: float
    unit_speed_ok: bool

    def __str__(self):
        status = "ok" if self.unit_speed_ok else "VIOLATED"
        return (
            f"residual rms {self.residual_rms:.3e} m, knot speed in "
            f"[{self.speed_min:.4f}, {self.speed_max:.4f}] (unit-speed {status})"
        )


@dataclass(frozen=True)
class CurvePoint:
    """Pointwise curve data at curvilinear coordinate s."""

    s: float
    m: np.ndarray                       # position [m]
    m_prime: np.ndarray                 # d m / d s (unit tangent up to fit error)
    m_second: np.ndarray                # d^2 m / d s^2 [1/m]
    normal: np.ndarray | None           # unit normal, None on straight segments
    kappa: float                        # curvature [1/m]
    osc_radius: float                   # osculating radius, inf when kappa ~ 0
    clamped: bool = False               # query s fell outside [0, L]


@dataclass(frozen=True)
class EdsReport:
    """Stationary-point census of the squared-distance cost for one query point."""

    query: np.ndarray
    stationary_points: list             # (s, cost, is_local_min) triples
    is_eds: bool
    nearest_s: float
    normal_offset: float
    osc_radius_at_nearest: float


class ConstraintPath:
    """Bernstein-basis curve over the normalized curvilinear coordinate s / L.

    Immutable after construction; all queries are read-only and safe to share
    across threads.
    """

    def __init__(self, weights: np.ndarray, length: float, delta: float,
                 fit_report: FitReport | None = None):
        weights = np.asarray(weights, dtype=float)
        if weights.ndim != 2 or weights.shape[1] != 3 or weights.shape[0] < 2:
            raise InvalidParameterError("weights must be (N, 3) with N >= 2")
        if length <= 0 or delta <= 0:
            raise InvalidParameterError("length and delta must be positive")
        self.weights = weights
        self.length = float(length)
        self.delta = float(delta)
        self.fit_report = fit_report

    @property
    def num_basis(self) -> int:
        return self.weights.shape[0]

    @property
    def basis_degree(self) -> int:
        return self.weights.shape[0] - 1

    def eval_many(self, s, derivatives: int = 2):
        """Evaluate position (and up to two s-derivatives) at an array of s values.

        Queries outside [0, L] are clamped. Returns a tuple of (k, 3) arrays.
        """
        s = np.atleast_1d(np.asarray(s, dtype=float))
        u = np.clip(s, 0.0, self.length) / self.length
        n = self.basis_degree
        if derivatives >= 2:
            b0, d1, d2 = _bernstein_all(u, n)
            return (
                b0 @ self.weights,
                (d1 @ self.weights) / self.length,
                (d2 @ self.weights) / self.length**2,
            )
        out = [bernstein_matrix(u, n, 0) @ self.weights]
        if derivatives >= 1:
            out.append((bernstein_matrix(u, n, 1) @ self.weights) / self.length)
        return tuple(out)

    def point(self, s: float) -> CurvePoint:
        clamped = s < 0.0 or s > self.length
        m, mp, mpp = self.eval_many([s], 2)
        m, mp, mpp = m[0], mp[0], mpp[0]
        kappa = float(np.linalg.norm(mpp))
        if kappa > CURVATURE_FLOOR:
            normal = mpp / kappa
            radius = 1.0 / kappa
        else:
            normal = None
            radius = math.inf
        return CurvePoint(
            s=float(np.clip(s, 0.0, self.length)), m=m, m_prime=mp, m_second=mpp,
            normal=normal, kappa=kappa, osc_radius=radius, clamped=clamped,
        )

    # -- persistence ---------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "version": PATH_SCHEMA_VERSION,
            "kind": "constraint_path",
            "delta": self.delta,
            "length": self.length,
            "degree": self.basis_degree,
            "weights": [[float(v) for v in row] for row in self.weights],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ": "), indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ConstraintPath":
        doc = json.loads(text)
        if doc.get("kind") != "constraint_path":
            raise InvalidParameterError("not a constraint path document")
        if doc.get("version") != PATH_SCHEMA_VERSION:
            raise InvalidParameterError(f"unsupported path schema version {doc.get('version')}")
        weights = np.asarray(doc["weights"], dtype=float)
        if weights.shape[0] != doc["degree"] + 1:
            raise InvalidParameterError("degree field inconsistent with weights")
        return cls(weights=weights, length=doc["length"], delta=doc["delta"])

    def save(self, filename):
        with open(filename, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, filename) -> "ConstraintPath":
        with open(filename, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


# -- Bernstein basis ----------------------------------------------------------

_COMB_CACHE: dict[int, np.ndarray] = {}


def _comb_row(n: int) -> np.ndarray:
    row = _COMB_CACHE.get(n)
    if row is None:
        row = np.array([math.comb(n, k) for k in range(n + 1)], dtype=float)
        _COMB_CACHE[n] = row
    return row


def _bernstein_values(u: np.ndarray, n: int) -> np.ndarray:
    i = np.arange(n + 1)
    return _comb_row(n) * np.power.outer(u, i) * np.power.outer(1.0 - u, n - i)


def _bernstein_all(u: np.ndarray, n: int):
    """Basis values plus first and second u-derivative matrices, sharing the
    power tables across the three degree reductions."""
    pu = np.power.outer(u, np.arange(n + 1))
    pv = np.power.outer(1.0 - u, np.arange(n + 1))
    b0 = _comb_row(n) * pu[:, : n + 1] * pv[:, n::-1]
    d1 = np.zeros((u.size, n + 1))
    d2 = np.zeros((u.size, n + 1))
    if n >= 1:
        low1 = _comb_row(n - 1) * pu[:, :n] * pv[:, n - 1::-1]
        d1[:, 1:] += n * low1
        d1[:, :-1] -= n * low1
    if n >= 2:
        low2 = _comb_row(n - 2) * pu[:, : n - 1] * pv[:, n - 2::-1]
        c = n * (n - 1)
        d2[:, 2:] += c * low2
        d2[:, 1:-1] -= 2 * c * low2
        d2[:, :-2] += c * low2
    return b0, d1, d2


def bernstein_matrix(u, degree: int, deriv: int = 0) -> np.ndarray:
    """Design matrix of the degree-n Bernstein basis (or its u-derivatives) at u.

    Derivatives use the standard degree-reduction recurrences, so rows of the
    deriv=0 matrix sum to one exactly (partition of unity).
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = degree
    if deriv == 0:
        return _bernstein_values(u, n)
    if deriv == 1:
        out = np.zeros((u.size, n + 1))
        if n >= 1:
            lower = _bernstein_values(u, n - 1)
            out[:, 1:] += n * lower
            out[:, :-1] -= n * lower
        return out
    if deriv == 2:
        out = np.zeros((u.size, n + 1))
        if n >= 2:
            lower = _bernstein_values(u, n - 2)
            c = n * (n - 1)
            out[:, 2:] += c * lower
            out[:, 1:-1] -= 2 * c * lower
            out[:, :-2] += c * lower
        return out
    raise InvalidParameterError("deriv must be 0, 1 or 2")


# -- spatial resampling -------------------------------------------------------

def resample_spatial(traj: RawTrajectory, delta: float) -> SpatialPath:
    """Resample a recording at uniform geometric spacing delta.

    Walks the input polyline and emits a point each time the position first
    reaches Euclidean distance delta from the previously emitted point, so
    consecutive output samples are exactly delta apart and the knot spacing
    equals the geometric spacing (which is what makes the fitted curve
    unit-speed). The first output point is the first input point; a trailing
    stretch shorter than delta is dropped.
    """
    if delta <= 0:
        raise InvalidParameterError("delta must be positive")
    pts = traj.samples
    seg = np.diff(pts, axis=0)
    seg_len = np.linalg.norm(seg, axis=1)
    total = float(seg_len.sum())
    if total <= 0.0:
        raise DegenerateInputError("polyline has zero length")
    if total < delta:
        raise DegenerateInputError("polyline shorter than one delta step")

    out = [pts[0].copy()]
    last = pts[0]
    i, tau = 0, 0.0                      # current segment and consumed parameter
    while i < len(seg):
        if seg_len[i] <= 1e-15:
            i, tau = i + 1, 0.0
            continue
        a, d = pts[i], seg[i]
        w = a - last
        qa = float(d @ d)
        qb = 2.0 * float(w @ d)
        qc = float(w @ w) - delta * delta
        disc = qb * qb - 4.0 * qa * qc
        t_hit = None
        if disc >= 0.0:
            sq = math.sqrt(disc)
            for t in ((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)):
                if t > tau + 1e-15 and t <= 1.0 + 1e-12:
                    t_hit = min(t, 1.0)
                    break
        if t_hit is None:
            i, tau = i + 1, 0.0
            continue
        last = a + t_hit * d
        out.append(last.copy())
        tau = t_hit

    points = np.asarray(out)
    m = len(out) - 1
    return SpatialPath(
        delta=delta,
        points=points,
        knots=np.arange(len(out), dtype=float) * delta,
        length=m * delta,
    )


def read_trajectory_csv(filename) -> RawTrajectory:
    """Load a recording from CSV with columns t,x,y,z (t optional, header optional)."""
    import csv as _csv

    rows, header = [], None
    with open(filename, "r", encoding="utf-8", newline="") as fh:
        for record in _csv.reader(fh):
            record = [c.strip() for c in record if c.strip() != ""]
            if not record:
                continue
            try:
                rows.append([float(c) for c in record])
            except ValueError:
                if header is None and not rows:
                    header = [c.lower() for c in record]
                else:
                    raise DegenerateInputError(f"unparseable CSV row: {record}")
    if not rows:
        raise DegenerateInputError("empty trajectory file")
    data = np.asarray(rows, dtype=float)
    if header is not None:
        cols = {name: j for j, name in enumerate(header)}
        if not {"x", "y", "z"} <= set(cols):
            raise InvalidParameterError("CSV header must include x,y,z")
        xyz = data[:, [cols["x"], cols["y"], cols["z"]]]
        ts = data[:, cols["t"]] if "t" in cols else None
    elif data.shape[1] == 4:
        ts, xyz = data[:, 0], data[:, 1:4]
    elif data.shape[1] == 3:
        ts, xyz = None, data
    else:
        raise InvalidParameterError(f"expected 3 or 4 CSV columns, got {data.shape[1]}")
    return RawTrajectory(samples=xyz, timestamps=ts)


# -- fitting -------------------------------------------------------------------

def fit_path(sp: SpatialPath, num_basis: int, ridge: float = 0.0) -> ConstraintPath:
    """Least-squares Bernstein fit of the resampled points over s / L.

    With ridge == 0 a rank-deficient design matrix raises; with ridge > 0 the
    regularized normal equations are solved instead. The unit-speed property is
    checked at the knots and a FitQualityWarning is emitted when violated (the
    fit is still returned, with the report attached).
    """
    if num_basis < 2:
        raise InvalidParameterError("need at least 2 basis functions")
    if ridge < 0:
        raise InvalidParameterError("ridge must be nonnegative")
    m1 = len(sp.points)
    if m1 < num_basis:
        raise IllConditionedFitError(
            f"{m1} samples cannot determine {num_basis} basis weights"
        )
    u = sp.knots / sp.length
    design = bernstein_matrix(u, num_basis - 1, 0)
    if ridge > 0.0:
        gram = design.T @ design + ridge * np.eye(num_basis)
        weights = np.linalg.solve(gram, design.T @ sp.points)
    else:
        weights, _, rank, _ = np.linalg.lstsq(design, sp.points, rcond=None)
        if rank < num_basis:
            raise IllConditionedFitError(
                f"design matrix rank {rank} < {num_basis}; add ridge or lower the degree"
            )

    path = ConstraintPath(weights=weights, length=sp.length, delta=sp.delta)
    residual = design @ weights - sp.points
    rms = float(np.sqrt(np.mean(np.sum(residual**2, axis=1))))
    speed = np.linalg.norm(path.eval_many(sp.knots, 1)[1], axis=1)
    report = FitReport(
        residual_rms=rms,
        speed_min=float(speed.min()),
        speed_max=float(speed.max()),
        unit_speed_ok=bool(np.all(np.abs(speed - 1.0) <= UNIT_SPEED_TOL)),
    )
    path.fit_report = report
    if not report.unit_speed_ok:
        warnings.warn(
            f"unit-speed violated: knot speed in [{report.speed_min:.4f}, "
            f"{report.speed_max:.4f}]",
            FitQualityWarning,
        )
    return path


# -- nearest point and EDS analysis --------------------------------------------

def golden_section_minimize(fun, lo: float, hi: float, tol: float) -> float:
    """Bounded golden-section minimization (deterministic, derivative-free)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def nearest_point_bruteforce(path: ConstraintPath, x, grid_step: float):
    """Global nearest-point search: dense grid scan plus golden-section refine.

    Independent of the iterative trackers; serves as their oracle. Grid ties
    are broken toward the smallest s.
    """
    if grid_step <= 0:
        raise InvalidParameterError("grid_step must be positive")
    x = np.asarray(x, dtype=float)
    n = int(math.ceil(path.length / grid_step)) + 1
    s_grid = np.linspace(0.0, path.length, max(n, 2))
    m = path.eval_many(s_grid, 0)[0]
    cost = np.sum((x[None, :] - m) ** 2, axis=1)
    k = int(np.argmin(cost))
    step = s_grid[1] - s_grid[0]
    lo = max(0.0, s_grid[k] - step)
    hi = min(path.length, s_grid[k] + step)

    def f(s):
        p = path.eval_many([s], 0)[0][0]
        return float(np.sum((x - p) ** 2))

    s_star = golden_section_minimize(f, lo, hi, tol=1e-10 * max(path.length, 1.0))
    return s_star, f(s_star)


def _grid_for(path: ConstraintPath, grid_step: float | None) -> np.ndarray:
    step = path.delta / 2.0 if grid_step is None else grid_step
    n = int(math.ceil(path.length / step)) + 1
    return np.linspace(0.0, path.length, max(n, 3))


def eds_analyze(path: ConstraintPath, x, grid_step: float | None = None,
                eps_eds: float | None = None) -> EdsReport:
    """Classify a query point against the curve's Euclidean distance singularities.

    Stationary points of the squared-distance cost are located by sign changes
    of the tangential alignment g(s) = (x - m(s))' m'(s) on a dense grid,
    refined by bisection, and classified by the curvature-based convexity test.
    The query is flagged singular when the normal offset at the lowest-cost
    stationary point reaches the osculating radius, or when two or more
    global minimizers tie within eps_eds.
    """
    x = np.asarray(x, dtype=float)
    if eps_eds is None:
        eps_eds = 1e-6 * path.length**2
    s_grid = _grid_for(path, grid_step)
    step = s_grid[1] - s_grid[0]
    m, mp, _ = path.eval_many(s_grid, 2)
    diff = x[None, :] - m
    g = np.einsum("ij,ij->i", diff, mp)
    cost = np.sum(diff**2, axis=1)

    def g_at(s):
        mm, mmp = path.eval_many([s], 1)
        return float((x - mm[0]) @ mmp[0])

    def cost_at(s):
        mm = path.eval_many([s], 0)[0][0]
        return float(np.sum((x - mm) ** 2))

    roots = []
    for i in range(len(s_grid) - 1):
        gi, gj = g[i], g[i + 1]
        if gi == 0.0:
            roots.append(s_grid[i])
        elif gi * gj < 0.0:
            a, b, fa = s_grid[i], s_grid[i + 1], gi
            for _ in range(60):
                mid = 0.5 * (a + b)
                fm = g_at(mid)
                if fa * fm <= 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
    if g[-1] == 0.0:
        roots.append(s_grid[-1])

    deduped = []
    for r in sorted(roots):
        if not deduped or r - deduped[-1] > step / 4.0:
            deduped.append(r)

    stationary = []
    for s_r in deduped:
        cp = path.point(s_r)
        convex = 1.0 - float((x - cp.m) @ cp.m_second) > 0.0
        stationary.append((s_r, cost_at(s_r), convex))

    candidates = list(stationary)
    for s_end in (0.0, path.length):
        if not any(abs(s_end - s_r) <= step / 4.0 for s_r, _, _ in stationary):
            candidates.append((s_end, cost_at(s_end), False))

    candidates.sort(key=lambda t: (t[1], t[0]))
    nearest_s, nearest_cost, _ = candidates[0]
    cp = path.point(nearest_s)
    e = x - cp.m
    if cp.normal is not None:
        normal_offset = float(e @ cp.normal)
    else:
        # straight segment: distance from the tangent line
        normal_offset = float(np.linalg.norm(e - (e @ cp.m_prime) * cp.m_prime))

    beyond_center = (
        cp.normal is not None
        and normal_offset >= cp.osc_radius * (1.0 - EDS_OFFSET_RTOL)
    )
    # count global-cost ties at geometrically distinct curve points (a closed
    # curve's seam exposes s=0 and s=L as the same point; do not double count)
    ties = sorted(s_c for s_c, c, _ in candidates if c <= nearest_cost + eps_eds)
    tie_positions: list[np.ndarray] = []
    for s_c in ties:
        pos = path.eval_many([s_c], 0)[0][0]
        if all(np.linalg.norm(pos - p) > path.delta for p in tie_positions):
            tie_positions.append(pos)
    tie_count = len(tie_positions)
    return EdsReport(
        query=x,
        stationary_points=stationary,
        is_eds=bool(beyond_center or tie_count >= 2),
        nearest_s=float(nearest_s),
        normal_offset=normal_offset,
        osc_radius_at_nearest=float(cp.osc_radius),
    )


def eds_field(path: ConstraintPath, queries, grid_step: float | None = None,
              eps_eds: float | None = None, chunk: int = 1024):
    """Vectorized EDS census over many query points.

    Returns arrays (nearest_s, nearest_cost, stationary_count, is_eds) using
    the same decision rule as eds_analyze, with stationary points refined by
    batched bisection instead of per-root scalar iteration.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    if eps_eds is None:
        eps_eds = 1e-6 * path.length**2
    s_grid = _grid_for(path, grid_step)
    step = s_grid[1] - s_grid[0]
    m, mp, _ = path.eval_many(s_grid, 2)

    n = queries.shape[0]
    nearest_s = np.zeros(n)
    nearest_cost = np.zeros(n)
    stationary_count = np.zeros(n, dtype=int)
    is_eds = np.zeros(n, dtype=bool)

    for beg in range(0, n, chunk):
        q = queries[beg:beg + chunk]
        diff = q[:, None, :] - m[None, :, :]            # (c, grid, 3)
        g = np.einsum("cgj,gj->cg", diff, mp)
        cost = np.einsum("cgj,cgj->cg", diff, diff)
        sign_flip = g[:, :-1] * g[:, 1:] < 0.0
        stationary_count[beg:beg + chunk] = sign_flip.sum(axis=1)

        # lowest-cost sign-change bracket per query (fall back to grid argmin)
        bracket_cost = np.where(sign_flip, np.minimum(cost[:, :-1], cost[:, 1:]), np.inf)
        best = np.argmin(bracket_cost, axis=1)
        has_root = np.isfinite(bracket_cost[np.arange(len(q)), best])
        lo = s_grid[best].copy()
        hi = s_grid[best + 1].copy()
        g_lo = g[np.arange(len(q)), best].copy()
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            mm, mmp = path.eval_many(mid, 1)
            g_mid = np.einsum("cj,cj->c", q - mm, mmp)
            take_hi = g_lo * g_mid <= 0.0
            hi = np.where(take_hi, mid, hi)
            lo = np.where(take_hi, lo, mid)
            g_lo = np.where(take_hi, g_lo, g_mid)
        s_root = 0.5 * (lo + hi)

        grid_best = np.argmin(cost, axis=1)
        grid_best_cost = cost[np.arange(len(q)), grid_best]
        root_m = path.eval_many(s_root, 0)[0]
        root_cost = np.einsum("cj,cj->c", q - root_m, q - root_m)
        # a refined root only counts as the nearest point if it actually beats
        # the grid minimum (a boundary minimum has no sign-change bracket, and
        # the best bracket may be a far stationary point)
        root_is_nearest = has_root & (root_cost <= grid_best_cost + eps_eds)
        s_near = np.where(root_is_nearest, s_root, s_grid[grid_best])
        mm, mmp, mmpp = path.eval_many(s_near, 2)
        e = q - mm
        c_near = np.einsum("cj,cj->c", e, e)
        kappa = np.linalg.norm(mmpp, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            normal = mmpp / kappa[:, None]
            offset = np.einsum("cj,cj->c", e, normal)
            radius = 1.0 / kappa
        curved = kappa > CURVATURE_FLOOR
        beyond = curved & (offset >= radius * (1.0 - EDS_OFFSET_RTOL))

        # grid-level tie detection: multiple separated near-global minima
        near_min = cost <= (c_near[:, None] + eps_eds)
        interior_min = np.zeros_like(near_min)
        interior_min[:, 1:-1] = (cost[:, 1:-1] <= cost[:, :-2]) & (cost[:, 1:-1] <= cost[:, 2:])
        interior_min[:, 0] = cost[:, 0] <= cost[:, 1]
        interior_min[:, -1] = cost[:, -1] <= cost[:, -2]
        tied = near_min & interior_min
        # count runs of tied cells, merging runs that sit at the same curve
        # position (a closed curve's seam aliases s=0 with s=L)
        padded = np.zeros((len(q), tied.shape[1] + 2), dtype=bool)
        padded[:, 1:-1] = tied
        starts = padded[:, 1:] & ~padded[:, :-1]
        run_counts = starts.sum(axis=1)
        multi = run_counts >= 2
        for row in np.nonzero(multi)[0]:
            run_idx = np.nonzero(starts[row, :-1])[0]
            positions: list[np.ndarray] = []
            for gi in run_idx:
                pos = m[min(gi, len(s_grid) - 1)]
                if all(np.linalg.norm(pos - p) > path.delta for p in positions):
                    positions.append(pos)
            multi[row] = len(positions) >= 2

        sl = slice(beg, beg + len(q))
        nearest_s[sl] = s_near
        nearest_cost[sl] = c_near
        is_eds[sl] = beyond | multi
    return nearest_s, nearest_cost, stationary_count, is_eds
