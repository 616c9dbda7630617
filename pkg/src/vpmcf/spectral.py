"""Spectrum and eigenbasis of the flow linearized at the cylinder.

The linearization acting on height perturbations u is

    A u = ((n-1)/R^2 + Laplacian_C) u - (n-1)/R^2 * mean(u),

with mean(u) the d mu_0 average. Its eigenfunctions are the separated
modes cos(m pi z/d) Y_{l,p}(q) with eigenvalues

    lambda_{l,m} = -(m^2 pi^2 / d^2 + (l(l+n-2) - (n-1)) / R^2),

except that the constant has eigenvalue 0 (the nonlocal term cancels the
zeroth-order term there); we relabel it as mode (1, 0, 0). The kernel is
(n+1)-dimensional: the constant plus the n first-order harmonics, i.e.
radius changes and axis translations. All other eigenvalues are negative
exactly when R exceeds the critical radius d sqrt(n-1) / pi.

Kernel coordinate convention for n = 2: (constant, cos theta, sin theta),
each L2(d mu_0)-normalized. Axisymmetric grids can only represent the
constant kernel mode; project_center then returns zeros in the
translation slots (the cos/sin theta components of axisymmetric data
vanish identically, so nothing is lost for such data).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveGap
from .grid import (
    CylinderSpec,
    Field,
    Grid,
    l2_norm,
    laplacian_cyl,
    quad,
)

__all__ = [
    "ModeIndex",
    "SpectrumEntry",
    "eigenvalue",
    "multiplicity",
    "eigenfunction",
    "raw_mode",
    "kernel_basis",
    "apply_linearized",
    "project_center",
    "critical_radius",
    "spectral_gap",
    "spectrum_table",
]


def multiplicity(n: int, l: int) -> int:
    """Number of independent order-l spherical harmonics on S^{n-1}.

    C(l+n-1, n-1) - C(l+n-3, n-1), with binomials of negative upper index
    read as zero; in particular M_0 = 1 and M_1 = n.
    """
    if l < 0:
        raise ValueError("l must be >= 0")
    first = math.comb(l + n - 1, n - 1)
    second = math.comb(l + n - 3, n - 1) if l + n - 3 >= n - 1 else 0
    return first - second


@dataclass(frozen=True)
class ModeIndex:
    """Separated-mode label (l, p, m): harmonic order, harmonic slot, axial order.

    For n = 2 the slots are p = 1 for cos(l theta) and p = 2 for
    sin(l theta). The constant eigenfunction is relabeled (1, 0, 0); the
    equivalent pre-relabeling name (0, 1, 0) is accepted too.
    """

    l: int
    p: int
    m: int

    def __post_init__(self):
        if self.l < 0 or self.m < 0:
            raise ValueError("l and m must be >= 0")
        if (self.l, self.p, self.m) == (1, 0, 0):
            return  # relabeled constant
        if self.p < 1:
            raise ValueError("p must be >= 1 (p = 0 is reserved for the constant (1,0,0))")

    def is_constant(self) -> bool:
        return (self.l, self.p, self.m) in ((1, 0, 0), (0, 1, 0))


@dataclass(frozen=True)
class SpectrumEntry:
    index: ModeIndex
    lam: float
    multiplicity: int


def eigenvalue(spec: CylinderSpec, l: int, m: int) -> float:
    """Eigenvalue lambda_{l,m} of the linearized operator.

    (l, m) = (0, 0) addresses the constant mode and returns 0; (1, 0)
    returns 0 through the formula itself. Everything else is
    -(m^2 pi^2/d^2 + (l(l+n-2) - (n-1))/R^2).
    """
    if l < 0 or m < 0:
        raise ValueError("l and m must be >= 0")
    if l == 0 and m == 0:
        return 0.0
    n, R, d = spec.n, spec.R, spec.d
    val = -((m * math.pi / d) ** 2 + (l * (l + n - 2) - (n - 1)) / R**2)
    return val + 0.0  # normalize -0.0


def raw_mode(grid: Grid, idx: ModeIndex) -> Field:
    """Unnormalized separated mode: cos(m pi z/d) times 1, cos(l th) or sin(l th)."""
    spec = grid.spec
    if idx.is_constant():
        return Field(grid, np.ones(grid.shape), "cos")
    if idx.m > grid.N_z - 1:
        raise ValueError(f"axial order m={idx.m} not representable on N_z={grid.N_z}")
    axial = np.cos(idx.m * np.pi * grid.z / spec.d)
    if idx.l == 0:
        if idx.p != 1:
            raise ValueError(f"l=0 has a single harmonic slot p=1, got p={idx.p}")
        if grid.N_theta is None:
            return Field(grid, axial, "cos")
        return Field(grid, np.repeat(axial[:, None], grid.N_theta, axis=1), "cos")
    if grid.N_theta is None:
        raise ValueError(
            f"harmonic order l={idx.l} requires a full-mode grid "
            "(axisymmetric grids carry only l=0 data)"
        )
    if idx.p > multiplicity(spec.n, idx.l):
        raise ValueError(f"p={idx.p} exceeds the multiplicity of order l={idx.l}")
    if idx.l > grid.N_theta // 2 or (idx.l == grid.N_theta // 2 and idx.p == 2):
        raise ValueError(f"harmonic order l={idx.l} not representable on N_theta={grid.N_theta}")
    angular = np.cos(idx.l * grid.theta) if idx.p == 1 else np.sin(idx.l * grid.theta)
    return Field(grid, axial[:, None] * angular[None, :], "cos")


def eigenfunction(grid: Grid, idx: ModeIndex) -> Field:
    """L2(d mu_0)-normalized eigenfunction v_{l,p,m}; distinct indices are orthogonal."""
    v = raw_mode(grid, idx)
    return v * (1.0 / l2_norm(v))


def kernel_basis(grid: Grid) -> list:
    """Orthonormal basis of the zero eigenspace representable on the grid.

    Order: constant, then (n = 2, full mode) cos theta, sin theta. On an
    axisymmetric grid only the constant is representable; see the module
    docstring for what project_center does in that case.
    """
    basis = [eigenfunction(grid, ModeIndex(1, 0, 0))]
    if grid.N_theta is not None:
        basis.append(eigenfunction(grid, ModeIndex(1, 1, 0)))
        basis.append(eigenfunction(grid, ModeIndex(1, 2, 0)))
    return basis


def apply_linearized(spec: CylinderSpec, u: Field, harmonic_order: int = 0) -> Field:
    """Apply the linearized operator A to u.

    harmonic_order handles separated data u(z) Y_l(q) on axisymmetric
    grids (the mean term vanishes for l >= 1 since Y_l integrates to
    zero); full-mode grids carry their own angular content.
    """
    if spec != u.grid.spec:
        raise ValueError("spec does not match the grid of u")
    c = (spec.n - 1) / spec.R**2
    out = c * u + laplacian_cyl(u, harmonic_order=harmonic_order)
    if harmonic_order == 0:
        out = out - c * (quad(u) / spec.measure)
    return out


def project_center(u: Field) -> tuple:
    """Project onto the zero eigenspace: coordinates and the projected field.

    Returns (coords, Pu) where coords has length n+1 in the order
    (constant, translations...); translation slots are zero on
    axisymmetric grids.
    """
    basis = kernel_basis(u.grid)
    coords = np.zeros(u.grid.spec.n + 1)
    Pu = u.grid.zeros()
    for k, v in enumerate(basis):
        coords[k] = quad(u * v)
        Pu = Pu + coords[k] * v
    return coords, Pu


def critical_radius(n: int, d: float) -> float:
    """Radius d sqrt(n-1) / pi below which the first axial mode destabilizes."""
    return d * math.sqrt(n - 1) / math.pi


def spectral_gap(spec: CylinderSpec, l_max: int = 64, m_max: int = 64) -> float:
    """Smallest |lambda| over the nonzero eigenvalues.

    Scans l, m <= 64 by default; enough because the eigenvalues decrease
    beyond the first few branches (the minimum is attained among
    lambda_{0,1}, lambda_{2,0}, lambda_{1,1}).
    """
    if spec.R <= critical_radius(spec.n, spec.d):
        raise NonPositiveGap(
            f"R = {spec.R} is at or below the critical radius "
            f"{critical_radius(spec.n, spec.d):.6g}; the gap is not positive"
        )
    gap = math.inf
    for l in range(l_max + 1):
        for m in range(m_max + 1):
            if l + m < 1 or (l, m) == (1, 0):
                continue
            gap = min(gap, -eigenvalue(spec, l, m))
    return gap


def spectrum_table(spec: CylinderSpec, l_max: int, m_max: int) -> list:
    """Entries (index, lambda, M_l) for all l <= l_max, m <= m_max."""
    if l_max < 0 or m_max < 0:
        raise ValueError("l_max and m_max must be >= 0")
    table = []
    for l in range(l_max + 1):
        for m in range(m_max + 1):
            idx = ModeIndex(l, 1, m)
            table.append(SpectrumEntry(idx, eigenvalue(spec, l, m), multiplicity(spec.n, l)))
    return table
