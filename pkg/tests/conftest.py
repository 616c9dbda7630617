import numpy as np
import pytest

from vpmcf import CoeffField, CylinderSpec, Field, from_coeffs, make_grid


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[{status}] {name}")


@pytest.fixture
def spec2():
    """n=2, R=1, d=2: the default working geometry."""
    return CylinderSpec(2, 1.0, 2.0)


@pytest.fixture
def axi_grid(spec2):
    return make_grid(spec2, 33)


@pytest.fixture
def full_grid(spec2):
    return make_grid(spec2, 33, 32)


def random_band_limited(grid, seed=0, amplitude=1.0, decay=0.6):
    """Random smooth field: band-limited with exponentially decaying spectrum.

    Coefficients live in the lower half of the mode range and fall off
    like exp(-decay * mode), so pointwise products stay resolvable on the
    collocation grid. sup norm is scaled to `amplitude`.
    """
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(grid.shape)
    if grid.N_theta is None:
        band = grid.N_z // 2
        m = np.arange(band)
        coeffs[:band] = rng.uniform(-1.0, 1.0, band) * np.exp(-decay * m)
    else:
        bz, bt = grid.N_z // 2, grid.N_theta // 2
        m = np.arange(bz)[:, None]
        l = grid.angular_orders[None, :bt]
        coeffs[:bz, :bt] = rng.uniform(-1.0, 1.0, (bz, bt)) * np.exp(-decay * (m + l))
    f = from_coeffs(CoeffField(grid, coeffs))
    return (amplitude / np.max(np.abs(f.values))) * f


def cos_field(grid, m, l=0, p=1):
    """Raw separated sample cos(m pi z/d) * {1, cos(l th), sin(l th)}."""
    axial = np.cos(m * np.pi * grid.z / grid.spec.d)
    if grid.N_theta is None:
        assert l == 0
        return Field(grid, axial)
    if l == 0:
        ang = np.ones(grid.N_theta)
    elif p == 1:
        ang = np.cos(l * grid.theta)
    else:
        ang = np.sin(l * grid.theta)
    return Field(grid, axial[:, None] * ang[None, :])
