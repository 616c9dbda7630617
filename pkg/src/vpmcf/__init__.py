"""Volume-preserving mean curvature flow of radial graphs over a cylinder.

Simulation and analysis toolkit for hypersurfaces in a slab that are
radial graphs over a reference cylinder and meet the slab walls at right
angles. Provides the spectral discretization (cosine x circular-harmonic
collocation), the graph-surface geometry, the spectrum of the flow
linearized at the cylinder, IMEX time integration with diagnostics, the
cylinder equilibrium family with its chart, and continuation of the
non-cylindrical constant-mean-curvature branch that appears at the
critical radius R* = d sqrt(n-1) / pi.
"""

from .errors import (
    AxisTouched,
    Blowup,
    InsufficientData,
    NewtonDiverged,
    NonPositiveGap,
    OutsideChart,
    SingularJacobian,
)
from .grid import (
    CoeffField,
    CylinderSpec,
    Field,
    Grid,
    coeff_norms,
    d2_dz2,
    d_dtheta,
    d_dz,
    from_coeffs,
    l2_norm,
    laplacian_cyl,
    make_grid,
    quad,
    sphere_area,
    sup_norm,
    to_coeffs,
)
from .geometry import (
    SurfaceScalars,
    area,
    avg_mean_curvature,
    nonlinear_remainder,
    speed,
    surface_scalars,
    volume,
)
from .spectral import (
    ModeIndex,
    SpectrumEntry,
    apply_linearized,
    critical_radius,
    eigenfunction,
    eigenvalue,
    kernel_basis,
    multiplicity,
    project_center,
    raw_mode,
    spectral_gap,
    spectrum_table,
)
from .stationary import (
    BranchResult,
    CmcProfile,
    CylinderParams,
    center_manifold_map,
    check_area_volume_condition,
    cmc_jacobian,
    cmc_residual,
    cylinder_graph,
    solve_chart,
    solve_cmc,
    trace_branch,
    write_branch_csv,
)
from .flow import (
    DecayFit,
    DiagnosticsRecord,
    FlowConfig,
    InitialCondition,
    Trajectory,
    build_initial,
    distance_to_cylinders,
    fit_decay_rate,
    fit_decay_series,
    load_field,
    run,
    save_field,
    step,
    write_diagnostics_csv,
)

__version__ = "0.1.0"
