"""Time-integration tests.

Checks the per-mode IMEX update against the scalar ODE it reduces to,
equilibrium preservation, conservation behaviour of full runs (volume
drift first order in dt, area monotone), linear-regime fidelity against
exp(lambda t), the second-order convergence of imex2, decay-rate
fitting, and the distance-to-cylinder-family measurement.
"""

import numpy as np
import pytest

from vpmcf import (
    Blowup,
    CylinderParams,
    CylinderSpec,
    DiagnosticsRecord,
    Field,
    FlowConfig,
    InitialCondition,
    InsufficientData,
    ModeIndex,
    Trajectory,
    build_initial,
    cylinder_graph,
    distance_to_cylinders,
    eigenfunction,
    eigenvalue,
    fit_decay_rate,
    fit_decay_series,
    l2_norm,
    load_field,
    make_grid,
    run,
    save_field,
    step,
    sup_norm,
    to_coeffs,
    write_diagnostics_csv,
)


def single_mode_config(spec, amp, t_end, dt=1e-3, N_z=33, stride=1, **kw):
    return FlowConfig(
        spec=spec,
        N_z=N_z,
        dt=dt,
        t_end=t_end,
        initial=InitialCondition(modes=((0, 1, 1, amp),)),
        output_stride=stride,
        **kw,
    )


class TestStep:
    def test_zero_is_fixed(self, axi_grid):
        out = step(axi_grid.zeros(), dt=1e-2)
        assert sup_norm(out) < 1e-14

    def test_single_mode_decay_factor(self, axi_grid):
        # at eps = 1e-6 the remainder is negligible and one imex1 step is
        # the scalar backward-Euler update
        eps, dt = 1e-6, 1e-3
        v = eigenfunction(axi_grid, ModeIndex(0, 1, 1))
        state = eps * v
        lam = eigenvalue(axi_grid.spec, 0, 1)
        out = step(state, dt=dt)
        c_in = to_coeffs(state).coeffs[1]
        c_out = to_coeffs(out).coeffs[1]
        assert c_out / c_in == pytest.approx(1.0 / (1.0 - dt * lam), rel=1e-8)

    def test_equilibrium_drift_per_step(self, full_grid):
        rho = cylinder_graph(CylinderParams((0.02, 0.03, -0.01)), full_grid)
        out = step(rho, dt=1e-3)
        assert sup_norm(out - rho) <= 1e-10

    def test_blowup_guard(self, axi_grid):
        big = Field(axi_grid, np.full(axi_grid.N_z, 0.95))
        with pytest.raises(Blowup):
            step(big, dt=1e-3)

    def test_unknown_scheme_rejected(self, axi_grid):
        with pytest.raises(ValueError):
            step(axi_grid.zeros(), dt=1e-3, scheme="rk4")


class TestBuildInitial:
    def test_modes_plus_cylinder(self, full_grid):
        ic = InitialCondition(modes=((0, 1, 1, 0.01),), cylinder_params=(0.1, 0.0, 0.0))
        rho = build_initial(ic, full_grid)
        expected = 0.1 + 0.01 * np.cos(np.pi * full_grid.z / 2.0)
        assert np.max(np.abs(rho.values - expected[:, None])) < 1e-13

    def test_random_reproducible(self, axi_grid):
        ic = InitialCondition(random_amplitude=0.01, random_max_m=5, seed=42)
        a = build_initial(ic, axi_grid)
        b = build_initial(ic, axi_grid)
        assert np.array_equal(a.values, b.values)

    def test_axis_violation_rejected(self, axi_grid):
        ic = InitialCondition(cylinder_params=(-1.5, 0.0, 0.0))
        with pytest.raises(Exception):
            build_initial(ic, axi_grid)


class TestRun:
    def test_trivial_trajectory(self, spec2):
        cfg = FlowConfig(spec=spec2, N_z=17, dt=1e-2, t_end=0.1)
        traj = run(cfg)
        assert traj.termination == "completed"
        vols = [r.volume for r in traj.records]
        assert np.allclose(vols, vols[0], rtol=1e-13)
        assert sup_norm(traj.snapshots[-1][1]) < 1e-13

    def test_stable_run_decays_monotonically(self, spec2):
        traj = run(single_mode_config(spec2, 0.01, t_end=5.0, stride=100))
        norms = traj.stable_norms()
        assert traj.termination == "completed"
        # after the transient the stable norm is strictly decreasing
        tail = norms[2:]
        assert np.all(np.diff(tail) < 0)
        assert tail[-1] < 1e-3 * tail[0]

    def test_unstable_mode_grows_at_eigenvalue_rate(self):
        # below the critical radius lambda_{0,1} itself is positive
        spec = CylinderSpec(2, 0.8, np.pi)
        growth = eigenvalue(spec, 0, 1)
        assert growth == pytest.approx(0.5625, abs=1e-12)
        traj = run(single_mode_config(spec, 0.001, t_end=5.0, stride=10))
        fit = fit_decay_rate(traj, (0.5, 4.0))
        assert fit.nondecaying
        assert -fit.rate == pytest.approx(growth, rel=0.05)

    def test_unstable_run_terminates_with_reason(self):
        spec = CylinderSpec(2, 0.8, np.pi)
        traj = run(single_mode_config(spec, 0.05, t_end=30.0, stride=50))
        assert traj.termination in ("blowup", "axis_touched")
        assert traj.records[-1].t < 30.0

    def test_volume_drift_first_order(self, spec2):
        def drift(dt):
            traj = run(single_mode_config(spec2, 0.01, t_end=2.0, dt=dt, N_z=48, stride=10**6))
            return abs(traj.records[-1].volume - traj.records[0].volume)

        ratio = drift(1e-3) / drift(5e-4)
        assert 1.7 <= ratio <= 2.3

    def test_renormalized_volume_exact(self, spec2):
        cfg = single_mode_config(
            spec2, 0.01, t_end=0.3, N_z=48, stride=10, renormalize_volume=True
        )
        traj = run(cfg)
        vols = np.array([r.volume for r in traj.records])
        assert np.max(np.abs(vols - vols[0])) <= 1e-13 * vols[0] * len(traj.records)

    def test_area_never_increases(self, spec2):
        traj = run(single_mode_config(spec2, 0.02, t_end=1.0, N_z=48))
        areas = np.array([r.area for r in traj.records])
        assert np.all(np.diff(areas) <= 1e-9 * areas[:-1])

    def test_equilibria_persist_many_steps(self, spec2):
        grid = make_grid(spec2, 17, 16)
        y = (0.02, 0.03, -0.01)
        cfg = FlowConfig(
            spec=spec2,
            N_z=17,
            N_theta=16,
            dt=1e-3,
            t_end=10.0,
            initial=InitialCondition(cylinder_params=y),
            output_stride=10**6,
        )
        traj = run(cfg)  # 10^4 steps
        assert traj.termination == "completed"
        target = cylinder_graph(CylinderParams(y), grid)
        assert sup_norm(traj.snapshots[-1][1] - target) <= 1e-8

    def test_linear_regime_fidelity(self, spec2):
        # single eigenmode at 1e-4: coefficient tracks eps*exp(lambda t)
        # within 1 percent out to t = 3/|lambda|
        lam = eigenvalue(spec2, 0, 1)
        t_end = 3.0 / abs(lam)
        traj = run(single_mode_config(spec2, 1e-4, t_end=t_end, stride=200))
        for t, snap in traj.snapshots[1:]:
            coeff = to_coeffs(snap).coeffs[1]
            assert coeff == pytest.approx(1e-4 * np.exp(lam * t), rel=0.01)

    def test_imex2_second_order(self, spec2):
        def final_state(dt, scheme):
            cfg = single_mode_config(
                spec2, 0.05, t_end=0.1, dt=dt, N_z=33, stride=10**6, scheme=scheme
            )
            return run(cfg).snapshots[-1][1]

        ref = final_state(1.25e-4, "imex2")
        e1 = sup_norm(final_state(1e-3, "imex2") - ref)
        e2 = sup_norm(final_state(5e-4, "imex2") - ref)
        assert 3.0 <= e1 / e2 <= 5.5

    def test_records_monotone_time(self, spec2):
        traj = run(single_mode_config(spec2, 0.01, t_end=0.5, stride=7))
        t = traj.record_times()
        assert np.all(np.diff(t) > 0)


class TestDecayFit:
    def _synthetic(self, rate):
        t = np.linspace(0.0, 4.0, 200)
        return t, np.exp(-rate * t)

    def test_exact_exponential(self):
        t, v = self._synthetic(1.5)
        fit = fit_decay_series(t, v, (0.0, 4.0))
        assert fit.rate == pytest.approx(1.5, abs=1e-9)
        assert not fit.nondecaying

    def test_growth_flagged(self):
        t, v = self._synthetic(-0.5625)
        fit = fit_decay_series(t, v, (0.0, 4.0))
        assert fit.nondecaying
        assert fit.rate == pytest.approx(-0.5625, abs=1e-9)

    def test_window_too_small(self):
        t, v = self._synthetic(1.0)
        with pytest.raises(InsufficientData):
            fit_decay_series(t, v, (3.9, 4.0))

    def test_nonpositive_values_rejected(self):
        t = np.linspace(0, 1, 50)
        v = np.ones(50)
        v[20] = 0.0
        with pytest.raises(InsufficientData):
            fit_decay_series(t, v, (0.0, 1.0))

    def test_trajectory_fit_matches_gap(self, spec2):
        traj = run(single_mode_config(spec2, 0.01, t_end=2.0, N_z=48, stride=10))
        fit = fit_decay_rate(traj, (0.5, 2.0))
        gap = np.pi**2 / 4 - 1
        assert fit.rate == pytest.approx(gap, rel=0.05)


class TestDistanceToCylinders:
    def test_zero_state(self, full_grid):
        y, dist = distance_to_cylinders(full_grid.zeros())
        assert np.max(np.abs(y)) < 1e-12
        assert dist < 1e-12

    def test_round_trip(self, full_grid):
        y_in = np.array([0.03, 0.02, -0.01])
        rho = cylinder_graph(CylinderParams(y_in), full_grid)
        y, dist = distance_to_cylinders(rho)
        assert np.max(np.abs(y - y_in)) <= 1e-10
        assert dist <= 1e-10

    def test_stable_mode_is_pure_distance(self, axi_grid):
        rho = Field(axi_grid, 0.01 * np.cos(np.pi * axi_grid.z / 2.0))
        y, dist = distance_to_cylinders(rho)
        assert np.max(np.abs(y)) <= 1e-10
        assert dist == pytest.approx(l2_norm(rho), rel=1e-10)


class TestExport:
    def test_diagnostics_csv_round_trip(self, spec2, tmp_path):
        traj = run(single_mode_config(spec2, 0.01, t_end=0.1, stride=10))
        path = tmp_path / "diag.csv"
        write_diagnostics_csv(traj, path)
        rows = path.read_text().strip().split("\n")
        header = rows[0].split(",")
        assert header == [
            "t", "volume", "area", "h", "sup_rho", "stable_norm",
            "y0", "y1", "y2", "min_radius",
        ]
        assert len(rows) - 1 == len(traj.records)
        first = [float(x) for x in rows[1].split(",")]
        assert first[0] == 0.0
        assert first[1] == pytest.approx(traj.records[0].volume, rel=1e-15)

    def test_field_save_load(self, full_grid, tmp_path):
        rng = np.random.default_rng(0)
        f = Field(full_grid, rng.standard_normal(full_grid.shape))
        path = tmp_path / "field.txt"
        save_field(f, path, t=1.25)
        g = load_field(path)
        assert g.grid == full_grid
        assert np.max(np.abs(g.values - f.values)) < 1e-15

    def test_axisymmetric_field_save_load(self, axi_grid, tmp_path):
        f = Field(axi_grid, np.cos(np.pi * axi_grid.z / 2.0))
        path = tmp_path / "field.txt"
        save_field(f, path)
        g = load_field(path)
        assert g.grid == axi_grid
        assert np.max(np.abs(g.values - f.values)) < 1e-15
