"""Time integration of the graph flow rho' = A rho + N(rho).

The stiff linear part A (the linearization at the cylinder) is diagonal
in the cosine x harmonic basis, so it is treated implicitly per mode at
no cost; the remainder N = G - A is evaluated pointwise and treated
explicitly. Two schemes:

    imex1:  c_new = (c + dt * N_c) / (1 - dt * lambda)        (first order)
    imex2:  midpoint predictor + trapezoid on A                (second order)

Kernel modes have lambda = 0 and therefore evolve purely explicitly,
which is what carries the slow drift along the cylinder family. Both
schemes fix every equilibrium of the flow exactly: there N = -A rho, and
the update reduces to the identity.

Stability guard: a step whose nonlinear remainder grows by more than 4x
halves dt for the rest of the run (the linear part is unconditionally
stable; only the explicit remainder limits dt). Runs never raise out of
run(); leaving the graph regime or tripping the blowup guard ends the
trajectory with a termination reason instead.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import AxisTouched, Blowup, InsufficientData, NewtonDiverged
from .geometry import avg_mean_curvature, nonlinear_remainder, surface_scalars, volume
from .grid import (
    CoeffField,
    CylinderSpec,
    Field,
    Grid,
    from_coeffs,
    l2_norm,
    make_grid,
    quad,
    sup_norm,
    to_coeffs,
)
from .spectral import ModeIndex, eigenvalue, project_center, raw_mode
from .stationary import CylinderParams, cylinder_graph, solve_chart

__all__ = [
    "InitialCondition",
    "FlowConfig",
    "DiagnosticsRecord",
    "Trajectory",
    "DecayFit",
    "build_initial",
    "step",
    "run",
    "fit_decay_rate",
    "fit_decay_series",
    "distance_to_cylinders",
    "write_diagnostics_csv",
    "save_field",
    "load_field",
]

SCHEMES = ("imex1", "imex2")

DIAGNOSTIC_COLUMNS = ("t", "volume", "area", "h", "sup_rho", "stable_norm")  # then y0..yn, min_radius


@dataclass(frozen=True)
class InitialCondition:
    """Initial height data: cylinder parameters plus mode perturbations.

    modes is a sequence of (l, p, m, amplitude); amplitudes multiply the
    raw (peak-one) separated modes, so ((0, 1, 1, 0.01),) means
    0.01 cos(pi z / d). random_amplitude adds seeded uniform coefficients
    on all modes with l <= random_max_l, m <= random_max_m.
    """

    modes: tuple = ()
    cylinder_params: tuple | None = None
    random_amplitude: float = 0.0
    random_max_l: int = 0
    random_max_m: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "modes", tuple((int(l), int(p), int(m), float(a)) for l, p, m, a in self.modes)
        )
        if self.cylinder_params is not None:
            object.__setattr__(
                self, "cylinder_params", tuple(float(v) for v in self.cylinder_params)
            )


@dataclass(frozen=True)
class FlowConfig:
    spec: CylinderSpec
    N_z: int
    dt: float
    t_end: float
    N_theta: int | None = None
    scheme: str = "imex1"
    initial: InitialCondition = dataclass_field(default_factory=InitialCondition)
    renormalize_volume: bool = False
    output_stride: int = 1
    blowup_fraction: float = 0.9
    max_dt_halvings: int = 20

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (self.dt > 0):
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("dt must not exceed t_end")
        if self.output_stride < 1:
            raise ValueError("output_stride must be >= 1")


@dataclass(eq=False)
class DiagnosticsRecord:
    t: float
    volume: float
    area: float
    h: float
    sup_rho: float
    stable_norm: float
    y: np.ndarray
    min_radius: float


@dataclass(eq=False)
class Trajectory:
    config: FlowConfig
    snapshots: list
    records: list
    termination: str

    def record_times(self) -> np.ndarray:
        return np.array([rec.t for rec in self.records])

    def stable_norms(self) -> np.ndarray:
        return np.array([rec.stable_norm for rec in self.records])


def build_initial(ic: InitialCondition, grid: Grid) -> Field:
    """Realize an InitialCondition on a grid; validates the graph regime."""
    rho = grid.zeros()
    if ic.cylinder_params is not None:
        rho = rho + cylinder_graph(CylinderParams(ic.cylinder_params), grid)
    for l, p, m, amp in ic.modes:
        rho = rho + amp * raw_mode(grid, ModeIndex(l, p, m))
    if ic.random_amplitude > 0.0:
        rng = np.random.default_rng(ic.seed)
        max_l = ic.random_max_l if grid.N_theta is not None else 0
        for l in range(max_l + 1):
            for p in (1,) if l == 0 else (1, 2):
                for m in range(ic.random_max_m + 1):
                    if l == 0 and p == 1 and m == 0:
                        coeff = rng.uniform(-1.0, 1.0)  # constant mode
                        rho = rho + ic.random_amplitude * coeff
                        continue
                    coeff = rng.uniform(-1.0, 1.0)
                    rho = rho + (ic.random_amplitude * coeff) * raw_mode(grid, ModeIndex(l, p, m))
    if np.min(grid.spec.R + rho.values) <= 0:
        raise ValueError("initial data touches the axis: min(R + rho) <= 0")
    return rho


# ---------------------------------------------------------------------------
# IMEX stepping


def _mode_eigenvalues(grid: Grid) -> np.ndarray:
    """Per-coefficient eigenvalue of the linearization (0 on kernel modes)."""
    spec = grid.spec
    m = np.arange(grid.N_z)
    if grid.N_theta is None:
        lam = np.array([eigenvalue(spec, 0, int(mm)) for mm in m])
        return lam
    lam = np.empty((grid.N_z, grid.N_theta))
    for col, l in enumerate(grid.angular_orders):
        for mm in m:
            lam[mm, col] = eigenvalue(spec, int(l), int(mm))
    return lam


_LAMBDA_CACHE: dict = {}


def _lambda_table(grid: Grid) -> np.ndarray:
    tab = _LAMBDA_CACHE.get(grid)
    if tab is None:
        tab = _mode_eigenvalues(grid)
        _LAMBDA_CACHE[grid] = tab
    return tab


def _imex_step(state: Field, remainder: Field, dt: float, scheme: str) -> Field:
    """Advance one step; `remainder` is N(state), precomputed by the caller."""
    grid = state.grid
    lam = _lambda_table(grid)
    a = to_coeffs(state).coeffs
    g = to_coeffs(remainder).coeffs
    if scheme == "imex1":
        new = (a + dt * g) / (1.0 - dt * lam)
    elif scheme == "imex2":
        half = 0.5 * dt
        mid = (a + half * g) / (1.0 - half * lam)
        g_mid = to_coeffs(nonlinear_remainder(from_coeffs(CoeffField(grid, mid)))).coeffs
        new = ((1.0 + half * lam) * a + dt * g_mid) / (1.0 - half * lam)
    else:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    return from_coeffs(CoeffField(grid, new))


def step(
    state: Field,
    t: float = 0.0,
    dt: float = 1e-3,
    scheme: str = "imex1",
    blowup_fraction: float = 0.9,
) -> Field:
    """Single IMEX step of the flow (the equation is autonomous; t is unused).

    Raises Blowup when the height exceeds blowup_fraction * R (graph
    regime and the local theory both fail far from the cylinder) and
    AxisTouched when the surface reaches the axis.
    """
    del t
    if sup_norm(state) >= blowup_fraction * state.grid.spec.R:
        raise Blowup(
            f"sup |rho| = {sup_norm(state):.3e} exceeds {blowup_fraction} R"
        )
    return _imex_step(state, nonlinear_remainder(state), dt, scheme)


def _center_estimate(state: Field, coords: np.ndarray) -> np.ndarray:
    """Linearized chart coordinates, used when the Newton inversion fails."""
    from .spectral import kernel_basis

    scale = np.array([math.sqrt(quad(v * v)) for v in kernel_basis(state.grid)])
    y = np.zeros(state.grid.spec.n + 1)
    y[: scale.size] = coords[: scale.size] / scale
    return y


def _diagnostics(state: Field, t: float) -> DiagnosticsRecord:
    spec = state.grid.spec
    s = surface_scalars(state)
    h = avg_mean_curvature(s)
    coords, Pu = project_center(state)
    stable = l2_norm(state - Pu)
    try:
        y, _dist = distance_to_cylinders(state)
    except NewtonDiverged:
        y = _center_estimate(state, coords)
    return DiagnosticsRecord(
        t=t,
        volume=volume(state),
        area=quad(s.mu),
        h=h,
        sup_rho=sup_norm(state),
        stable_norm=stable,
        y=y,
        min_radius=float(np.min(spec.R + state.values)),
    )


def run(config: FlowConfig) -> Trajectory:
    """Integrate to t_end, or to axis contact / blowup, recording diagnostics.

    Diagnostics and snapshots are taken at step 0, every output_stride-th
    accepted step, and at the final state. Step errors terminate the
    trajectory (reason recorded); they never propagate out.

    With renormalize_volume the radius field is rescaled after every step
    to hold the enclosed volume exactly; off by default, because the
    semi-discrete flow conserves volume already and the drift of the
    time discretization is worth measuring.
    """
    grid = make_grid(config.spec, config.N_z, config.N_theta)
    rho = build_initial(config.initial, grid)
    v_target = volume(rho)
    records = [_diagnostics(rho, 0.0)]
    snapshots = [(0.0, rho.copy())]
    termination = "completed"
    t = 0.0
    dt_cur = config.dt
    halvings = 0
    accepted = 0
    recorded_t = 0.0
    # floor below which remainder growth is roundoff noise, not instability
    guard_floor = 1e-9 * (config.spec.n - 1) / config.spec.R
    try:
        gt = nonlinear_remainder(rho)
    except AxisTouched:
        return Trajectory(config, snapshots, records, "axis_touched")
    while t < config.t_end * (1.0 - 1e-12):
        if sup_norm(rho) >= config.blowup_fraction * config.spec.R:
            termination = "blowup"
            break
        dt_step = min(dt_cur, config.t_end - t)
        try:
            candidate = _imex_step(rho, gt, dt_step, config.scheme)
            gt_new = nonlinear_remainder(candidate)
        except AxisTouched:
            termination = "axis_touched"
            break
        if sup_norm(gt_new) > 4.0 * max(sup_norm(gt), guard_floor):
            halvings += 1
            if halvings > config.max_dt_halvings:
                termination = "blowup"
                break
            dt_cur *= 0.5
            continue
        if config.renormalize_volume:
            r_new = config.spec.R + candidate.values
            alpha = (v_target / volume(candidate)) ** (1.0 / config.spec.n)
            candidate = Field(grid, alpha * r_new - config.spec.R, "cos")
            gt_new = nonlinear_remainder(candidate)
        rho = candidate
        gt = gt_new
        t += dt_step
        accepted += 1
        if accepted % config.output_stride == 0:
            records.append(_diagnostics(rho, t))
            snapshots.append((t, rho.copy()))
            recorded_t = t
    if recorded_t != t:
        records.append(_diagnostics(rho, t))
        snapshots.append((t, rho.copy()))
    return Trajectory(config, snapshots, records, termination)


# ---------------------------------------------------------------------------
# decay fitting and the distance to the cylinder family


@dataclass(frozen=True)
class DecayFit:
    """Least-squares decay rate of a positive series on a window.

    rate is the negated log slope; nondecaying flags a nonpositive rate
    (growth), reported as a value rather than an error.
    """

    rate: float
    nondecaying: bool
    npoints: int
    window: tuple


def fit_decay_series(t: np.ndarray, values: np.ndarray, window: tuple) -> DecayFit:
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    ta, tb = float(window[0]), float(window[1])
    mask = (t >= ta) & (t <= tb)
    if int(mask.sum()) < 10:
        raise InsufficientData(f"only {int(mask.sum())} samples in window [{ta}, {tb}]")
    vals = values[mask]
    if np.any(vals <= 0.0) or not np.all(np.isfinite(vals)):
        raise InsufficientData("fitted series must be strictly positive and finite")
    slope = np.polyfit(t[mask], np.log(vals), 1)[0]
    return DecayFit(
        rate=-float(slope), nondecaying=bool(slope >= 0), npoints=int(mask.sum()), window=(ta, tb)
    )


def fit_decay_rate(traj: Trajectory, window: tuple) -> DecayFit:
    """Fit the decay rate of the stable-component norm over a time window."""
    return fit_decay_series(traj.record_times(), traj.stable_norms(), window)


def distance_to_cylinders(state: Field) -> tuple:
    """Nearest cylinder in the chart: parameters y and the L2 distance.

    y solves for the cylinder whose kernel coordinates match those of the
    state (Newton through the chart); axisymmetric grids use the radius
    slot only. Raises NewtonDiverged when the coordinates fall outside
    the local chart.
    """
    coords, _ = project_center(state)
    y = solve_chart(coords, state.grid)
    dist = l2_norm(state - cylinder_graph(CylinderParams(y), state.grid))
    return y, dist


# ---------------------------------------------------------------------------
# export


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_diagnostics_csv(traj: Trajectory, path) -> None:
    """Fixed-order CSV: t, volume, area, h, sup_rho, stable_norm, y0..yn, min_radius."""
    n = traj.config.spec.n
    header = list(DIAGNOSTIC_COLUMNS) + [f"y{k}" for k in range(n + 1)] + ["min_radius"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for rec in traj.records:
            row = [
                _fmt(rec.t),
                _fmt(rec.volume),
                _fmt(rec.area),
                _fmt(rec.h),
                _fmt(rec.sup_rho),
                _fmt(rec.stable_norm),
            ]
            row += [_fmt(v) for v in rec.y]
            row.append(_fmt(rec.min_radius))
            writer.writerow(row)


def save_field(f: Field, path, t: float | None = None) -> None:
    """Plain-text grid dump: one JSON header line, then the value rows."""
    g = f.grid
    header = {
        "n": g.spec.n,
        "R": g.spec.R,
        "d": g.spec.d,
        "N_z": g.N_z,
        "N_theta": g.N_theta,
        "parity": f.parity,
    }
    if t is not None:
        header["t"] = t
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        np.savetxt(fh, np.atleast_2d(f.values), fmt="%.17g")


def load_field(path) -> Field:
    """Inverse of save_field (the optional time stamp is dropped)."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        values = np.loadtxt(fh, ndmin=2)
    spec = CylinderSpec(header["n"], header["R"], header["d"])
    grid = make_grid(spec, header["N_z"], header["N_theta"])
    if grid.N_theta is None:
        values = values.reshape(grid.shape)
    return Field(grid, values, header.get("parity", "cos"))
