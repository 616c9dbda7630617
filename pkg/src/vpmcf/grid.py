"""Spectral discretization of the reference cylinder S^{n-1}_R x [0, d].

The axial direction uses the endpoint-including cosine basis cos(m*pi*z/d)
on uniform nodes (DCT-I), so the Neumann condition drho/dz = 0 at z = 0, d
is structural rather than enforced. The angular direction (n = 2 only)
uses real circular harmonics {1, cos l*theta, sin l*theta} on a uniform
periodic grid. For n > 2 only axisymmetric fields are representable;
separated fields u(z) * Y_l(q) are handled by passing the harmonic order
to the operators that need it.

Fields carry a parity tag: 'cos' for data representable in the cosine
basis (even extension across the walls) and 'sin' for axial derivatives
of such data (odd extension, vanishing at the walls). Differentiation in
z flips the tag, which is what makes d_dz(d_dz(f)) agree with d2_dz2(f)
to roundoff on band-limited fields.

Products of fields are formed pointwise on the collocation grid. Grids
should be chosen with N_z (and N_theta) at least twice the active mode
content of the data so aliasing stays harmless; this is documented, not
enforced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy import fft as _fft

__all__ = [
    "CylinderSpec",
    "Grid",
    "Field",
    "CoeffField",
    "sphere_area",
    "make_grid",
    "to_coeffs",
    "from_coeffs",
    "d_dz",
    "d2_dz2",
    "d_dtheta",
    "laplacian_cyl",
    "quad",
    "l2_norm",
    "sup_norm",
    "coeff_norms",
]


def sphere_area(n: int) -> float:
    """Surface area of the unit (n-1)-sphere, 2 pi^{n/2} / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class CylinderSpec:
    """Reference cylinder: dimension n >= 2, radius R > 0, slab width d > 0.

    The hypersurface is n-dimensional and lives in R^{n+1}; the slab is
    0 <= z <= d along the last coordinate axis.
    """

    n: int
    R: float
    d: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n}")
        if not (self.R > 0):
            raise ValueError(f"R must be positive, got {self.R}")
        if not (self.d > 0):
            raise ValueError(f"d must be positive, got {self.d}")

    @property
    def measure(self) -> float:
        """Total reference measure |C| = sigma_{n-1} R^{n-1} d."""
        return sphere_area(self.n) * self.R ** (self.n - 1) * self.d


@dataclass(frozen=True)
class Grid:
    """Collocation grid: z_j = d*j/(N_z-1) crossed with uniform theta (full mode).

    Full mode (N_theta set) requires n = 2; the angular spectral basis is
    implemented only for the circle. N_theta must be even.
    """

    spec: CylinderSpec
    N_z: int
    N_theta: int | None = None

    def __post_init__(self):
        if self.N_z < 4:
            raise ValueError(f"N_z must be >= 4, got {self.N_z}")
        if self.N_theta is not None:
            if self.spec.n != 2:
                raise ValueError("full mode requires n=2")
            if self.N_theta < 4:
                raise ValueError(f"N_theta must be >= 4, got {self.N_theta}")
            if self.N_theta % 2 != 0:
                raise ValueError(f"N_theta must be even, got {self.N_theta}")

    @property
    def mode(self) -> str:
        return "axisymmetric" if self.N_theta is None else "full"

    @property
    def shape(self) -> tuple:
        if self.N_theta is None:
            return (self.N_z,)
        return (self.N_z, self.N_theta)

    @cached_property
    def z(self) -> np.ndarray:
        return np.linspace(0.0, self.spec.d, self.N_z)

    @cached_property
    def theta(self) -> np.ndarray:
        if self.N_theta is None:
            raise ValueError("axisymmetric grid has no theta nodes")
        return np.arange(self.N_theta) * (2.0 * np.pi / self.N_theta)

    @cached_property
    def z_weights(self) -> np.ndarray:
        """Trapezoidal weights, exact on the cosine basis below the Nyquist mode."""
        w = np.full(self.N_z, self.spec.d / (self.N_z - 1))
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @cached_property
    def angular_orders(self) -> np.ndarray:
        """Harmonic order l of each angular coefficient column (full mode).

        Columns are packed [1, cos(th), sin(th), cos(2th), sin(2th), ...,
        cos(N_theta/2 th)]; the Nyquist cosine has no sine partner.
        """
        if self.N_theta is None:
            raise ValueError("axisymmetric grid has no angular columns")
        half = self.N_theta // 2
        orders = np.empty(self.N_theta, dtype=int)
        orders[0] = 0
        for l in range(1, half):
            orders[2 * l - 1] = l
            orders[2 * l] = l
        orders[-1] = half
        return orders

    def zeros(self, parity: str = "cos") -> "Field":
        return Field(self, np.zeros(self.shape), parity)


def make_grid(spec: CylinderSpec, N_z: int, N_theta: int | None = None) -> Grid:
    """Build a collocation grid; see Grid for the node layout and constraints."""
    return Grid(spec, N_z, N_theta)


_PARITIES = ("cos", "sin")


@dataclass(eq=False)
class Field:
    """Real samples of a scalar on the grid nodes.

    parity 'cos' marks data with an even extension across z = 0, d (the
    cosine-representable class); 'sin' marks odd-extension data such as
    axial derivatives, which vanish at the walls.
    """

    grid: Grid
    values: np.ndarray
    parity: str = "cos"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid shape {self.grid.shape}"
            )
        if self.parity not in _PARITIES:
            raise ValueError(f"parity must be one of {_PARITIES}, got {self.parity!r}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy(), self.parity)

    def _check_compatible(self, other: "Field"):
        if self.grid != other.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check_compatible(other)
            if self.parity != other.parity:
                raise ValueError("cannot add fields of different parity")
            return Field(self.grid, self.values + other.values, self.parity)
        return Field(self.grid, self.values + other, self.parity)

    __radd__ = __add__

    def __sub__(self, other):
        return self.__add__(-other if isinstance(other, Field) else -np.asarray(other))

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __neg__(self):
        return Field(self.grid, -self.values, self.parity)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check_compatible(other)
            # even*even = odd*odd = even; even*odd = odd
            parity = "cos" if self.parity == other.parity else "sin"
            return Field(self.grid, self.values * other.values, parity)
        return Field(self.grid, self.values * other, self.parity)

    __rmul__ = __mul__


@dataclass(eq=False)
class CoeffField:
    """Coefficients in the cos(m pi z/d) x circular-harmonic basis.

    Axisymmetric: shape (N_z,), index m. Full mode: shape (N_z, N_theta),
    index (m, angular column) with the column packing of
    Grid.angular_orders.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(
                f"coeffs shape {self.coeffs.shape} does not match grid shape {self.grid.shape}"
            )


# ---------------------------------------------------------------------------
# transforms


def _cos_analysis_z(values: np.ndarray) -> np.ndarray:
    """Samples -> coefficients a_m with f_j = sum_m a_m cos(pi m j/(N-1))."""
    N = values.shape[0]
    a = _fft.dct(values, type=1, axis=0) / (N - 1)
    a[0] *= 0.5
    a[-1] *= 0.5
    return a

def _cos_synthesis_z(coeffs: np.ndarray) -> np.ndarray:
    x = coeffs.copy()
    x[1:-1] *= 0.5
    return _fft.dct(x, type=1, axis=0)


def _sin_analysis_z(values: np.ndarray) -> np.ndarray:
    """Samples (zero at the walls) -> b_m with f_j = sum b_m sin(pi m j/(N-1))."""
    N = values.shape[0]
    b = np.zeros_like(values)
    b[1:-1] = _fft.dst(values[1:-1], type=1, axis=0) / (N - 1)
    return b


def _sin_synthesis_z(coeffs: np.ndarray) -> np.ndarray:
    out = np.zeros_like(coeffs)
    out[1:-1] = _fft.dst(coeffs[1:-1], type=1, axis=0) * 0.5
    return out


def _theta_analysis(values: np.ndarray) -> np.ndarray:
    """Angular samples -> real harmonic columns (see Grid.angular_orders)."""
    T = values.shape[1]
    half = T // 2
    F = np.fft.rfft(values, axis=1)
    out = np.empty_like(values)
    out[:, 0] = F[:, 0].real / T
    for l in range(1, half):
        out[:, 2 * l - 1] = 2.0 * F[:, l].real / T
        out[:, 2 * l] = -2.0 * F[:, l].imag / T
    out[:, -1] = F[:, half].real / T
    return out


def _theta_synthesis(coeffs: np.ndarray) -> np.ndarray:
    T = coeffs.shape[1]
    half = T // 2
    F = np.zeros((coeffs.shape[0], half + 1), dtype=complex)
    F[:, 0] = T * coeffs[:, 0]
    for l in range(1, half):
        F[:, l] = (T / 2.0) * (coeffs[:, 2 * l - 1] - 1j * coeffs[:, 2 * l])
    F[:, half] = T * coeffs[:, -1]
    return np.fft.irfft(F, n=T, axis=1)


def to_coeffs(f: Field) -> CoeffField:
    """Forward transform. Defined for cosine-parity fields only."""
    if f.parity != "cos":
        raise ValueError("to_coeffs expects a cosine-parity field")
    a = f.values
    if f.grid.N_theta is not None:
        a = _theta_analysis(a)
    return CoeffField(f.grid, _cos_analysis_z(a))


def from_coeffs(c: CoeffField) -> Field:
    """Inverse of to_coeffs."""
    v = _cos_synthesis_z(c.coeffs)
    if c.grid.N_theta is not None:
        v = _theta_synthesis(v)
    return Field(c.grid, v, "cos")


# ---------------------------------------------------------------------------
# differentiation


def _axial_wavenumbers(grid: Grid) -> np.ndarray:
    return np.arange(grid.N_z) * (np.pi / grid.spec.d)


def d_dz(f: Field) -> Field:
    """Axial derivative; flips the parity tag.

    On a cosine field the result is an exact sine synthesis, so it
    vanishes at z = 0, d to machine precision. Differentiating twice
    reproduces d2_dz2 because the sine analysis is exact in turn.
    """
    k = _axial_wavenumbers(f.grid)
    if f.grid.N_theta is not None:
        k = k[:, None]
    if f.parity == "cos":
        a = _cos_analysis_z(f.values)
        return Field(f.grid, _sin_synthesis_z(-a * k), "sin")
    b = _sin_analysis_z(f.values)
    return Field(f.grid, _cos_synthesis_z(b * k), "cos")


def d2_dz2(f: Field) -> Field:
    """Second axial derivative; preserves the parity tag."""
    k2 = _axial_wavenumbers(f.grid) ** 2
    if f.grid.N_theta is not None:
        k2 = k2[:, None]
    if f.parity == "cos":
        a = _cos_analysis_z(f.values)
        return Field(f.grid, _cos_synthesis_z(-a * k2), "cos")
    b = _sin_analysis_z(f.values)
    return Field(f.grid, _sin_synthesis_z(-b * k2), "sin")


def d_dtheta(f: Field) -> Field:
    """Angular derivative (full mode). The Nyquist mode derivative is zeroed."""
    if f.grid.N_theta is None:
        raise ValueError("d_dtheta requires a full-mode grid")
    T = f.grid.N_theta
    F = np.fft.rfft(f.values, axis=1)
    l = np.arange(T // 2 + 1)
    F *= 1j * l
    F[:, -1] = 0.0
    return Field(f.grid, np.fft.irfft(F, n=T, axis=1), f.parity)


def laplacian_cyl(f: Field, harmonic_order: int = 0) -> Field:
    """Laplace-Beltrami operator of the reference cylinder, sphere part + d^2/dz^2.

    On a full-mode grid every angular column carries its own sphere
    eigenvalue -l(l+n-2)/R^2. On an axisymmetric grid the values are the
    z-profile of u(z) * Y_l(q); pass harmonic_order=l (default 0) to add
    the corresponding sphere eigenvalue analytically.
    """
    if f.parity != "cos":
        raise ValueError("laplacian_cyl expects a cosine-parity field")
    spec = f.grid.spec
    k2 = _axial_wavenumbers(f.grid) ** 2
    a = _cos_analysis_z(f.values)
    if f.grid.N_theta is not None:
        if harmonic_order != 0:
            raise ValueError("harmonic_order applies to axisymmetric grids only")
        a = _theta_analysis(a)
        l = f.grid.angular_orders
        lam = -(k2[:, None] + (l * (l + spec.n - 2))[None, :] / spec.R**2)
        return Field(f.grid, _theta_synthesis(_cos_synthesis_z(a * lam)), "cos")
    if harmonic_order < 0:
        raise ValueError("harmonic_order must be >= 0")
    l = harmonic_order
    lam = -(k2 + l * (l + spec.n - 2) / spec.R**2)
    return Field(f.grid, _cos_synthesis_z(a * lam), "cos")


# ---------------------------------------------------------------------------
# quadrature


def quad(f: Field) -> float:
    """Integral of f against the reference measure d mu_0.

    Trapezoidal-with-endpoint weights in z and uniform weights in theta;
    together they are the exact discrete inner product of the transform,
    so Parseval holds with the norms from coeff_norms. quad(1) equals
    sigma_{n-1} R^{n-1} d.
    """
    g = f.grid
    wz = g.z_weights
    if g.N_theta is None:
        return sphere_area(g.spec.n) * g.spec.R ** (g.spec.n - 1) * float(wz @ f.values)
    dtheta = 2.0 * np.pi / g.N_theta
    return g.spec.R * dtheta * float(wz @ f.values.sum(axis=1))


def l2_norm(f: Field) -> float:
    """L2(d mu_0) norm computed with quad."""
    return math.sqrt(max(quad(f * f), 0.0))


def sup_norm(f: Field) -> float:
    return float(np.max(np.abs(f.values)))


@lru_cache(maxsize=None)
def _coeff_norms_cached(grid: Grid) -> np.ndarray:
    spec = grid.spec
    nz = np.full(grid.N_z, spec.d / 2.0)
    nz[0] = spec.d
    nz[-1] = spec.d  # discrete norm of the axial Nyquist mode
    if grid.N_theta is None:
        return sphere_area(spec.n) * spec.R ** (spec.n - 1) * nz
    nt = np.full(grid.N_theta, np.pi * spec.R)
    nt[0] = 2.0 * np.pi * spec.R
    nt[-1] = 2.0 * np.pi * spec.R  # discrete norm of the angular Nyquist mode
    return nz[:, None] * nt[None, :]


def coeff_norms(grid: Grid) -> np.ndarray:
    """Squared discrete L2(d mu_0) norms of the basis functions, per coefficient."""
    return _coeff_norms_cached(grid).copy()
