"""Equilibria of the flow: cylinder graphs, the center-manifold map,
axisymmetric constant-mean-curvature profiles and the branch of
non-cylindrical profiles that appears at the critical radius.

A cylinder of radius R + y_0 whose (vertical) axis meets the z = 0 plane
at (y_1, ..., y_n, 0) is the graph of

    rho(y) = s - R + sqrt(s^2 + (R + y_0)^2 - |y'|^2),
    s = sum_k y_k u_k,  u_k the unit-sphere coordinate functions,

which is z-independent and exact. The map from y to the kernel
coordinates of the projection is a local diffeomorphism (its derivative
at zero is diagonal and positive), inverted here by Newton; composing it
with the graph formula realizes the locally-invariant manifold of the
flow as the cylinder family itself.

Axis convention: translations live in the x_1..x_n coordinates; the
slab direction x_{n+1} carries no translation freedom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AxisTouched, NewtonDiverged, OutsideChart, SingularJacobian
from .geometry import surface_scalars, volume
from .grid import (
    CylinderSpec,
    Field,
    Grid,
    make_grid,
    quad,
    sphere_area,
    _cos_analysis_z,
    _cos_synthesis_z,
    _sin_synthesis_z,
)
from .spectral import critical_radius, kernel_basis, project_center
from . import geometry

__all__ = [
    "CylinderParams",
    "CmcProfile",
    "BranchResult",
    "cylinder_graph",
    "chart_coords",
    "solve_chart",
    "center_manifold_map",
    "cmc_residual",
    "cmc_jacobian",
    "solve_cmc",
    "trace_branch",
    "check_area_volume_condition",
    "write_branch_csv",
]


@dataclass(frozen=True)
class CylinderParams:
    """Chart parameters y in R^{n+1}: radius offset y_0, axis offset (y_1..y_n)."""

    y: tuple

    def __init__(self, y):
        object.__setattr__(self, "y", tuple(float(v) for v in np.atleast_1d(y)))

    def as_array(self) -> np.ndarray:
        return np.array(self.y)


def cylinder_graph(params: CylinderParams, grid: Grid) -> Field:
    """Height function whose graph is the offset cylinder; an exact equilibrium."""
    spec = grid.spec
    y = params.as_array()
    if y.shape != (spec.n + 1,):
        raise ValueError(f"expected {spec.n + 1} chart parameters, got {y.shape[0]}")
    y0, trans = y[0], y[1:]
    if grid.N_theta is None:
        if np.any(trans != 0.0):
            raise ValueError("axis translations require a full-mode grid")
        s = np.zeros(grid.shape)
    else:
        s = trans[0] * np.cos(grid.theta) + trans[1] * np.sin(grid.theta)
        s = np.broadcast_to(s, grid.shape).copy()
    radicand = s**2 + (spec.R + y0) ** 2 - float(trans @ trans)
    if spec.R + y0 <= 0 or np.min(radicand) <= 0:
        raise OutsideChart(f"cylinder parameters {params.y} leave the local chart")
    return Field(grid, s - spec.R + np.sqrt(radicand), "cos")


def chart_coords(params: CylinderParams, grid: Grid) -> np.ndarray:
    """Kernel coordinates of the projected cylinder graph."""
    coords, _ = project_center(cylinder_graph(params, grid))
    return coords


def _params_from_reduced(x: np.ndarray, grid: Grid) -> CylinderParams:
    n = grid.spec.n
    y = np.zeros(n + 1)
    if grid.N_theta is None:
        y[0] = x[0]
    else:
        y[: n + 1] = x
    return CylinderParams(y)


def solve_chart(target_coords: np.ndarray, grid: Grid) -> np.ndarray:
    """Invert the chart: find y with kernel coordinates equal to target_coords.

    Newton with finite-difference Jacobian on the representable slots
    (just y_0 on axisymmetric grids). Raises NewtonDiverged outside the
    local chart.
    """
    target = np.asarray(target_coords, dtype=float)
    n = grid.spec.n
    if target.shape != (n + 1,):
        raise ValueError(f"expected {n + 1} coordinates, got {target.shape}")
    ndof = n + 1 if grid.N_theta is not None else 1
    # initial guess from the derivative of the chart at zero (diagonal)
    scale = np.array([np.sqrt(quad(v * v)) for v in kernel_basis(grid)])
    x = target[:ndof] / scale
    tol = 1e-13 * (1.0 + float(np.max(np.abs(target))))
    fd = 1e-7
    last = np.inf
    for _ in range(40):
        try:
            f = chart_coords(_params_from_reduced(x, grid), grid)[:ndof] - target[:ndof]
        except OutsideChart as exc:
            raise NewtonDiverged(f"chart inversion left the chart: {exc}") from exc
        res = float(np.max(np.abs(f)))
        if res <= tol:
            return _params_from_reduced(x, grid).as_array()
        J = np.empty((ndof, ndof))
        for k in range(ndof):
            xp = x.copy()
            xp[k] += fd
            try:
                J[:, k] = (
                    chart_coords(_params_from_reduced(xp, grid), grid)[:ndof]
                    - f
                    - target[:ndof]
                ) / fd
            except OutsideChart as exc:
                raise NewtonDiverged(f"chart inversion left the chart: {exc}") from exc
        try:
            dx = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError as exc:
            raise NewtonDiverged(f"singular chart Jacobian at {x}") from exc
        x = x + dx
        last = res
    raise NewtonDiverged(f"chart inversion stalled, last residual {last:.3e}")


def center_manifold_map(z_coords: np.ndarray, grid: Grid) -> Field:
    """Stable-space component of the equilibrium with kernel coordinates z_coords.

    Vanishes to second order at zero (tangency to the kernel); exactly
    zero for pure radius changes, whose cylinders are concentric.
    """
    y = solve_chart(np.asarray(z_coords, dtype=float), grid)
    rho = cylinder_graph(CylinderParams(y), grid)
    _, Pu = project_center(rho)
    return rho - Pu


# ---------------------------------------------------------------------------
# axisymmetric CMC profiles


@dataclass(eq=False)
class CmcProfile:
    """Axisymmetric profile r(z_j) with its constant mean curvature h."""

    r: np.ndarray
    h: float
    spec: CylinderSpec

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        if self.r.ndim != 1 or self.r.size < 4:
            raise ValueError("r must be a 1-D array with at least 4 samples")
        if not np.all(np.isfinite(self.r)) or not np.isfinite(self.h):
            raise ValueError("profile entries must be finite")
        if np.min(self.r) <= 0:
            raise ValueError("profile radius must stay positive")

    @property
    def grid(self) -> Grid:
        return make_grid(self.spec, self.r.size)

    def height_field(self) -> Field:
        return Field(self.grid, self.r - self.spec.R, "cos")

    def amplitude(self) -> float:
        """cos(pi z/d) coefficient of the profile."""
        return float(_cos_analysis_z(self.r.copy())[1])


def cmc_residual(p: CmcProfile) -> np.ndarray:
    """Pointwise mean-curvature defect H(r) - h; zero iff the profile is CMC."""
    H = surface_scalars(p.height_field()).H.values
    return H - p.h


def _dz_matrices(N: int, d: float) -> tuple:
    eye = np.eye(N)
    a = _cos_analysis_z(eye)
    k = np.arange(N) * (np.pi / d)
    D1 = _sin_synthesis_z(-a * k[:, None])
    D2 = _cos_synthesis_z(-a * k[:, None] ** 2)
    return D1, D2


def _amplitude_row(N: int) -> np.ndarray:
    return _cos_analysis_z(np.eye(N))[1]


def _curvature_jacobian(p: CmcProfile) -> np.ndarray:
    """Exact derivative of r -> H(r) (axisymmetric closed form)."""
    grid = p.grid
    n, d = p.spec.n, p.spec.d
    D1, D2 = _dz_matrices(p.r.size, d)
    rz = D1 @ p.r
    rzz = D2 @ p.r
    q = 1.0 + rz**2
    sq = np.sqrt(q)
    c0 = -(n - 1) / (p.r**2 * sq)
    c1 = -(n - 1) * rz / (p.r * q * sq) + 3.0 * rzz * rz / (q**2 * sq)
    c2 = -1.0 / (q * sq)
    return np.diag(c0) + c1[:, None] * D1 + c2[:, None] * D2


def cmc_jacobian(
    p: CmcProfile, fixed_volume: float | None = None, fixed_amplitude: float | None = None
) -> np.ndarray:
    """Jacobian of the constrained CMC system at (r, h).

    Rows 0..N-1: derivative of H(r) - h; the last row is the constraint
    (volume or cos-amplitude). Exactly one constraint must be given. At
    the critical radius the volume-constrained Jacobian at the cylinder
    is singular with a one-dimensional cos(pi z/d) kernel; away from it
    the kernel closes.
    """
    if (fixed_volume is None) == (fixed_amplitude is None):
        raise ValueError("give exactly one of fixed_volume or fixed_amplitude")
    N = p.r.size
    J = np.zeros((N + 1, N + 1))
    J[:N, :N] = _curvature_jacobian(p)
    J[:N, N] = -1.0
    if fixed_volume is not None:
        w = p.grid.z_weights
        J[N, :N] = sphere_area(p.spec.n) * w * p.r ** (p.spec.n - 1)
    else:
        J[N, :N] = _amplitude_row(N)
    return J


def _constraint_value(
    p: CmcProfile, fixed_volume: float | None, fixed_amplitude: float | None
) -> float:
    if fixed_volume is not None:
        return volume(p.height_field()) - fixed_volume
    return p.amplitude() - fixed_amplitude


def solve_cmc(
    initial: CmcProfile,
    fixed_volume: float | None = None,
    fixed_amplitude: float | None = None,
    tol: float = 1e-12,
    max_iter: int = 60,
) -> CmcProfile:
    """Newton solve for a CMC profile under a volume or amplitude constraint.

    Unknowns are the radius samples and h; the Jacobian is the exact
    linearization, so convergence is quadratic once close. Backtracking
    halves steps that increase the residual. Raises SingularJacobian when
    the linear solve degenerates (expected exactly at the bifurcation
    when solving at zero amplitude) and NewtonDiverged, carrying the last
    residual, when the iteration stalls or leaves the graph regime.
    """
    if (fixed_volume is None) == (fixed_amplitude is None):
        raise ValueError("give exactly one of fixed_volume or fixed_amplitude")
    r = initial.r.copy()
    h = float(initial.h)
    spec = initial.spec
    N = r.size

    def residual(rr, hh):
        prof = CmcProfile(rr, hh, spec)
        return np.concatenate(
            [cmc_residual(prof), [_constraint_value(prof, fixed_volume, fixed_amplitude)]]
        )

    try:
        F = residual(r, h)
    except (AxisTouched, ValueError) as exc:
        raise NewtonDiverged(f"initial profile invalid: {exc}") from exc
    for _ in range(max_iter):
        res = float(np.max(np.abs(F)))
        if res <= tol:
            return CmcProfile(r, h, spec)
        J = cmc_jacobian(
            CmcProfile(r, h, spec), fixed_volume=fixed_volume, fixed_amplitude=fixed_amplitude
        )
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(f"singular CMC Jacobian at residual {res:.3e}") from exc
        # backtracking on the residual norm
        step = 1.0
        for _bt in range(12):
            rn = r + step * dx[:N]
            hn = h + step * dx[N]
            try:
                Fn = residual(rn, hn)
            except (AxisTouched, ValueError):
                step *= 0.5
                continue
            if np.max(np.abs(Fn)) < res or step < 1e-3:
                break
            step *= 0.5
        else:
            raise NewtonDiverged(f"CMC Newton stalled at residual {res:.3e}")
        r, h, F = rn, hn, Fn
    raise NewtonDiverged(f"CMC Newton did not converge, last residual {np.max(np.abs(F)):.3e}")


@dataclass(eq=False)
class BranchResult:
    """Amplitude-ordered CMC profiles; complete=False marks a truncated trace."""

    profiles: list
    complete: bool = True
    message: str = ""

    def __iter__(self):
        return iter(self.profiles)

    def __len__(self):
        return len(self.profiles)

    def __getitem__(self, i):
        return self.profiles[i]


def trace_branch(
    spec: CylinderSpec, a_max: float, steps: int, N_z: int = 64, tol: float = 1e-12
) -> BranchResult:
    """Continue the non-cylindrical CMC family from the cylinder at R*.

    The zero-amplitude member is the cylinder itself (returned exactly;
    the amplitude-constrained Jacobian is singular there because the
    cylinder family is tangent to the constraint). Subsequent members
    are solved at amplitudes j*a_max/steps with a secant predictor. A
    Newton failure truncates the branch rather than raising.
    """
    rstar = critical_radius(spec.n, spec.d)
    if abs(spec.R - rstar) > 1e-6 * max(1.0, rstar):
        raise ValueError(
            f"branch tracing expects R at the critical radius {rstar:.9g}, got R = {spec.R}"
        )
    cyl = CmcProfile(np.full(N_z, spec.R), (spec.n - 1) / spec.R, spec)
    profiles = [cyl]
    if a_max == 0 or steps == 0:
        return BranchResult(profiles)
    if a_max < 0 or steps < 0:
        raise ValueError("a_max and steps must be nonnegative")
    z = cyl.grid.z
    cosz = np.cos(np.pi * z / spec.d)
    amps = np.linspace(a_max / steps, a_max, steps)
    prev = None
    cur = cyl
    for a in amps:
        if prev is None:
            guess = CmcProfile(cur.r + (a - cur.amplitude()) * cosz, cur.h, spec)
        else:
            guess = CmcProfile(
                np.maximum(2 * cur.r - prev.r, 1e-6 * spec.R), 2 * cur.h - prev.h, spec
            )
        try:
            sol = solve_cmc(guess, fixed_amplitude=float(a), tol=tol)
        except (NewtonDiverged, SingularJacobian) as exc:
            return BranchResult(profiles, complete=False, message=str(exc))
        prev, cur = cur, sol
        profiles.append(sol)
    return BranchResult(profiles)


def check_area_volume_condition(rho: Field) -> tuple:
    """Evaluate the area vs volume/width comparison for graph(rho).

    Returns (holds, lhs, rhs) with lhs the surface area and rhs the
    enclosed volume divided by the slab width; for a cylinder the
    comparison reduces to R >= n d, with equality exactly at R = n d.
    """
    lhs = geometry.area(rho)
    rhs = geometry.volume(rho) / rho.grid.spec.d
    return (lhs <= rhs, lhs, rhs)


def write_branch_csv(branch: BranchResult, path) -> None:
    """Branch table: a, h, min_r, max_r, volume, area, residual_inf."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["a", "h", "min_r", "max_r", "volume", "area", "residual_inf"])
        for p in branch:
            rho = p.height_field()
            writer.writerow(
                [
                    f"{p.amplitude():.17g}",
                    f"{p.h:.17g}",
                    f"{np.min(p.r):.17g}",
                    f"{np.max(p.r):.17g}",
                    f"{geometry.volume(rho):.17g}",
                    f"{geometry.area(rho):.17g}",
                    f"{np.max(np.abs(cmc_residual(p))):.17g}",
                ]
            )
