"""Command-line driver tests.

Exercises each subcommand in process through main(argv): spectrum table
content and headers, simulate on the bundled configs (including the
physically terminated unstable run), config validation failure modes
(exit 2, no partial outputs), sweep sign change across the threshold,
stationary branch files, decay-fit, determinism of the diagnostics CSV,
and manifest completeness.
"""

import json
import pathlib

import numpy as np
import pytest

from vpmcf import distance_to_cylinders, load_field
from vpmcf.cli import main

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "demos" / "configs"


def write_config(tmp_path, **overrides):
    cfg = {
        "schema_version": 1,
        "label": "test",
        "n": 2,
        "R": 1.0,
        "d": 2.0,
        "N_z": 33,
        "dt": 1e-3,
        "t_end": 0.5,
        "output_stride": 10,
        "initial": {"modes": [[0, 1, 1, 0.01]]},
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


class TestSpectrum:
    def test_table_content(self, capsys, tmp_path):
        rc = main(
            ["spectrum", "--n", "2", "--R", "1", "--d", "2", "--l-max", "2", "--m-max", "2",
             "--out", str(tmp_path)]
        )
        assert rc == 0
        out = capsys.readouterr().out
        lines = out.strip().split("\n")
        assert lines[0].startswith("# critical_radius = ")
        assert lines[1].startswith("# spectral_gap = ")
        rows = [ln.split(",") for ln in lines[3:]]
        assert len(rows) == 9
        by_lm = {(int(r[0]), int(r[1])): (float(r[2]), int(r[3])) for r in rows}
        lam10, mult10 = by_lm[(1, 0)]
        assert lam10 == 0.0 and mult10 == 2
        assert (tmp_path / "spectrum.csv").read_text() == out

    def test_threshold_header(self, capsys):
        rc = main(["spectrum", "--n", "2", "--R", "2", "--d", str(np.pi), "--l-max", "0",
                   "--m-max", "0"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "# critical_radius = 1" in out

    def test_invalid_spec_exits_2(self, capsys):
        assert main(["spectrum", "--n", "1", "--R", "1", "--d", "1"]) == 2


class TestSimulate:
    def test_stable_bundled_config(self, tmp_path):
        out = tmp_path / "stable"
        rc = main(["simulate", "--config", str(CONFIGS / "stable_axisym.json"),
                   "--out", str(out)])
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["termination"] == "completed"
        for rel in manifest["outputs"]:
            assert pathlib.Path(rel).exists()
        final = load_field(out / "field_final.txt")
        _, dist = distance_to_cylinders(final)
        assert dist <= 1e-6

    def test_unstable_bundled_config(self, tmp_path):
        out = tmp_path / "unstable"
        rc = main(["simulate", "--config", str(CONFIGS / "unstable_R_below_star.json"),
                   "--out", str(out)])
        assert rc == 0  # a physically terminated run is a successful experiment
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["termination"] in ("blowup", "axis_touched")

    def test_malformed_json_exits_2_no_outputs(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        out = tmp_path / "never"
        rc = main(["simulate", "--config", str(bad), "--out", str(out)])
        assert rc == 2
        assert not out.exists()

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(tmp_path)
        cfg = json.loads(path.read_text())
        cfg["not_a_key"] = 1
        path.write_text(json.dumps(cfg))
        assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2

    def test_wrong_schema_version_rejected(self, tmp_path):
        path = write_config(tmp_path, schema_version=2)
        assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2

    def test_deterministic_diagnostics(self, tmp_path):
        path = write_config(tmp_path, seed=7)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", str(path), "--out", str(a)]) == 0
        assert main(["simulate", "--config", str(path), "--out", str(b)]) == 0
        assert (a / "diagnostics.csv").read_bytes() == (b / "diagnostics.csv").read_bytes()

    def test_snapshot_stride(self, tmp_path):
        path = write_config(tmp_path, snapshot_stride=2, t_end=0.1)
        out = tmp_path / "snaps"
        assert main(["simulate", "--config", str(path), "--out", str(out)]) == 0
        assert (out / "field_000000.txt").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        for rel in manifest["outputs"]:
            assert pathlib.Path(rel).exists()


class TestSweep:
    def test_rate_sign_change_across_threshold(self, tmp_path):
        # d = pi so the critical radius is 1
        base = write_config(
            tmp_path,
            d=np.pi,
            N_z=33,
            t_end=6.0,
            output_stride=10,
            initial={"modes": [[0, 1, 1, 1e-4]]},
        )
        out = tmp_path / "sweep"
        rc = main(["sweep", "--config", str(base), "--param", "R",
                   "--values", "0.9,1.1", "--out", str(out),
                   "--fit-window", "0.5", "6.0", "--threads", "2"])
        assert rc == 0
        rows = (out / "sweep.csv").read_text().strip().split("\n")[1:]
        rates = {}
        for row in rows:
            cells = row.split(",")
            rates[float(cells[0])] = (float(cells[2]), cells[3])
        assert rates[0.9][0] < 0 and rates[0.9][1] == "1"  # growth below R*
        assert rates[1.1][0] > 0 and rates[1.1][1] == "0"  # decay above R*

    def test_single_value_matches_simulate(self, tmp_path):
        base = write_config(tmp_path, t_end=1.0)
        out = tmp_path / "single"
        rc = main(["sweep", "--config", str(base), "--param", "R", "--values", "1.0",
                   "--out", str(out), "--fit-window", "0.25", "1.0"])
        assert rc == 0
        rows = (out / "sweep.csv").read_text().strip().split("\n")
        assert len(rows) == 2
        row_dir = out / "row_000"
        assert (row_dir / "diagnostics.csv").exists()

    def test_bad_values_exit_2(self, tmp_path):
        base = write_config(tmp_path)
        assert main(["sweep", "--config", str(base), "--param", "R",
                     "--values", "1.0,abc", "--out", str(tmp_path / "x")]) == 2


class TestStationary:
    def test_branch_at_critical_radius(self, tmp_path):
        out = tmp_path / "branch"
        rc = main(["stationary", "--n", "2", "--R", "1.0", "--d", str(np.pi),
                   "--a-max", "0.05", "--steps", "10", "--out", str(out)])
        assert rc == 0
        rows = (out / "branch.csv").read_text().strip().split("\n")
        assert len(rows) == 12  # header + cylinder + 10 members
        residuals = [float(r.split(",")[-1]) for r in rows[1:]]
        assert max(residuals) <= 1e-10
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["empty_branch"] is False
        assert manifest["complete"] is True

    def test_empty_branch_away_from_threshold(self, tmp_path):
        out = tmp_path / "empty"
        rc = main(["stationary", "--n", "2", "--R", "1.5", "--d", str(np.pi),
                   "--a-max", "0.05", "--steps", "10", "--out", str(out)])
        assert rc == 0
        rows = (out / "branch.csv").read_text().strip().split("\n")
        assert len(rows) == 1  # header only
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["empty_branch"] is True


class TestDecayFit:
    def test_synthetic_series(self, tmp_path, capsys):
        t = np.linspace(0.0, 3.0, 120)
        path = tmp_path / "diag.csv"
        lines = ["t,volume,area,h,sup_rho,stable_norm,y0,y1,y2,min_radius"]
        for ti in t:
            lines.append(f"{ti},1,1,1,0,{np.exp(-2.0 * ti)},0,0,0,1")
        path.write_text("\n".join(lines) + "\n")
        rc = main(["decay-fit", "--csv", str(path), "--t-a", "0.0", "--t-b", "3.0"])
        assert rc == 0
        out = capsys.readouterr().out
        rate = float(out.split("rate = ")[1].split()[0])
        assert rate == pytest.approx(2.0, abs=1e-6)

    def test_missing_column_exits_2(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,foo\n0,1\n")
        assert main(["decay-fit", "--csv", str(path), "--t-a", "0", "--t-b", "1"]) == 2
