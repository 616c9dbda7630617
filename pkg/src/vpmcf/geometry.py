"""Differential geometry of the radial graph r = R + rho over the cylinder.

Sign conventions, fixed once: the unit normal points away from the axis,
the cylinder has mean curvature H = (n-1)/R > 0, and the normal speed of
the flow is h - H, so regions curved more than average move inward.

The mean curvature is evaluated from closed-form expressions in
r = R + rho and its spectral grid derivatives. Axisymmetric profiles use

    H = (n-1) / (r sqrt(1+r_z^2)) - r_zz / (1+r_z^2)^{3/2},

and full-mode surfaces (n = 2, parametrized (r cos th, r sin th, z)) use
the second-fundamental-form expression assembled in _scalars_full. Both
are validated in the test suite against finite differences and against
the first variations of area and volume.

The gradient factor L = sqrt(1 + g^{ij} d_i rho d_j rho) (inverse metric
of the displaced cylinder) equals 1/<nu, e_r>, the conversion between
normal speed and radial graph speed; concretely L = sqrt(1+r_z^2)
axisymmetric and W/r in full mode, with W^2 = r^2 + r_th^2 + r^2 r_z^2.
The area-element ratio is mu = (r/R)^{n-1} L in both cases.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AxisTouched
from .grid import Field, d2_dz2, d_dtheta, d_dz, quad
from . import spectral

__all__ = [
    "SurfaceScalars",
    "surface_scalars",
    "area",
    "volume",
    "avg_mean_curvature",
    "speed",
    "nonlinear_remainder",
]

# fail before curvature formulas blow up, not at exact contact
_AXIS_FRACTION = 1e-9


@dataclass(eq=False)
class SurfaceScalars:
    """Pointwise surface quantities of a graph: H (1/length), mu, L (>= 1)."""

    H: Field
    mu: Field
    L: Field


def _radius_values(rho: Field) -> np.ndarray:
    spec = rho.grid.spec
    r = spec.R + rho.values
    if np.min(r) <= _AXIS_FRACTION * spec.R:
        raise AxisTouched(
            f"graph radius reached {np.min(r):.3e} (R = {spec.R}); surface left the graph regime"
        )
    return r


def surface_scalars(rho: Field) -> SurfaceScalars:
    """Mean curvature, area-element ratio and gradient factor of graph(rho)."""
    if rho.parity != "cos":
        raise ValueError("surface_scalars expects a cosine-parity height field")
    grid = rho.grid
    n, R = grid.spec.n, grid.spec.R
    r = _radius_values(rho)
    rz = d_dz(rho).values
    rzz = d2_dz2(rho).values
    if grid.N_theta is None:
        q = 1.0 + rz**2
        sq = np.sqrt(q)
        H = (n - 1) / (r * sq) - rzz / (q * sq)
        L = sq
        mu = (r / R) ** (n - 1) * L
    else:
        rt = d_dtheta(rho).values
        rtt = d_dtheta(d_dtheta(rho)).values
        rtz = d_dtheta(d_dz(rho)).values
        W2 = r**2 + rt**2 + (r * rz) ** 2
        W = np.sqrt(W2)
        H = (
            (1.0 + rz**2) * (r**2 + 2.0 * rt**2 - r * rtt)
            + 2.0 * rt * rz * (r * rtz - rt * rz)
            - (r**2 + rt**2) * r * rzz
        ) / (W2 * W)
        L = W / r
        mu = W / R
    return SurfaceScalars(
        H=Field(grid, H, "cos"), mu=Field(grid, mu, "cos"), L=Field(grid, L, "cos")
    )


def area(rho: Field) -> float:
    """Surface area of graph(rho), the integral of mu against d mu_0."""
    return quad(surface_scalars(rho).mu)


def volume(rho: Field) -> float:
    """Volume enclosed between graph(rho) and the slab walls."""
    grid = rho.grid
    n, R = grid.spec.n, grid.spec.R
    r = _radius_values(rho)
    return quad(Field(grid, r**n / (n * R ** (n - 1)), "cos"))


def avg_mean_curvature(s: SurfaceScalars) -> float:
    """Area average h of the mean curvature, quad(H mu) / quad(mu).

    Computed with the same quadrature as volume, which makes the discrete
    volume-conservation identity quad((h - H) mu) = 0 exact by
    construction.
    """
    return quad(s.H * s.mu) / quad(s.mu)


def speed(rho: Field) -> Field:
    """Graph speed G(rho) = L (h - H); zero exactly on cylinders."""
    s = surface_scalars(rho)
    h = avg_mean_curvature(s)
    return s.L * (h - s.H.values)


def nonlinear_remainder(rho: Field) -> Field:
    """speed(rho) minus its linearization at zero; vanishes to second order."""
    lin = spectral.apply_linearized(rho.grid.spec, rho)
    return speed(rho) - lin
