"""Batch experiment driver.

Subcommands: spectrum | simulate | sweep | stationary | decay-fit.
Configs are JSON with a versioned schema validated up front (unknown
keys are rejected); runs are deterministic for a fixed config and seed,
and every simulate/sweep/stationary invocation writes a manifest listing
its outputs. Exit codes: 0 success (a physically terminated run is a
successful experiment), 2 usage or config error, 3 internal error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import datetime
import json
import math
import pathlib
import sys
import traceback

import numpy as np
import jsonschema

from . import __version__
from .errors import InsufficientData, NewtonDiverged, NonPositiveGap
from .flow import (
    FlowConfig,
    InitialCondition,
    distance_to_cylinders,
    fit_decay_rate,
    fit_decay_series,
    run,
    save_field,
    write_diagnostics_csv,
)
from .grid import CylinderSpec
from .spectral import critical_radius, spectral_gap, spectrum_table
from .stationary import trace_branch, write_branch_csv

__all__ = ["main", "load_config", "CONFIG_SCHEMA"]


class ConfigError(ValueError):
    """Usage or configuration problem; maps to exit code 2."""


CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "n", "R", "d", "N_z", "dt", "t_end"],
    "properties": {
        "schema_version": {"const": 1},
        "label": {"type": "string"},
        "n": {"type": "integer", "minimum": 2},
        "R": {"type": "number", "exclusiveMinimum": 0},
        "d": {"type": "number", "exclusiveMinimum": 0},
        "N_z": {"type": "integer", "minimum": 4},
        "N_theta": {"type": ["integer", "null"], "minimum": 4},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "t_end": {"type": "number", "exclusiveMinimum": 0},
        "scheme": {"enum": ["imex1", "imex2"]},
        "renormalize_volume": {"type": "boolean"},
        "output_stride": {"type": "integer", "minimum": 1},
        "snapshot_stride": {"type": ["integer", "null"], "minimum": 1},
        "blowup_fraction": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
        "initial": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "modes": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "minItems": 4,
                        "maxItems": 4,
                        "items": {"type": "number"},
                    },
                },
                "cylinder_params": {
                    "type": ["array", "null"],
                    "items": {"type": "number"},
                },
                "random_amplitude": {"type": "number", "minimum": 0},
                "random_max_l": {"type": "integer", "minimum": 0},
                "random_max_m": {"type": "integer", "minimum": 0},
            },
        },
    },
}


def load_config(path) -> dict:
    """Read and schema-validate a JSON run config; raises ConfigError."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config {path} violates the schema: {exc.message}") from exc
    return raw


def _flow_config(raw: dict, seed_override: int | None = None) -> FlowConfig:
    seed = seed_override if seed_override is not None else raw.get("seed", 0)
    init_raw = raw.get("initial", {})
    initial = InitialCondition(
        modes=tuple(tuple(entry) for entry in init_raw.get("modes", [])),
        cylinder_params=(
            tuple(init_raw["cylinder_params"])
            if init_raw.get("cylinder_params") is not None
            else None
        ),
        random_amplitude=init_raw.get("random_amplitude", 0.0),
        random_max_l=init_raw.get("random_max_l", 0),
        random_max_m=init_raw.get("random_max_m", 0),
        seed=seed,
    )
    try:
        return FlowConfig(
            spec=CylinderSpec(raw["n"], raw["R"], raw["d"]),
            N_z=raw["N_z"],
            N_theta=raw.get("N_theta"),
            dt=raw["dt"],
            t_end=raw["t_end"],
            scheme=raw.get("scheme", "imex1"),
            initial=initial,
            renormalize_volume=raw.get("renormalize_volume", False),
            output_stride=raw.get("output_stride", 1),
            blowup_fraction=raw.get("blowup_fraction", 0.9),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_manifest(out_dir: pathlib.Path, kind: str, config_echo, started: str, outputs, **extra):
    manifest = {
        "schema_version": 1,
        "kind": kind,
        "version": __version__,
        "config": config_echo,
        "started_at": started,
        "finished_at": _now(),
        "outputs": [str(p) for p in outputs],
    }
    manifest.update(extra)
    path = out_dir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(args) -> int:
    try:
        spec = CylinderSpec(args.n, args.R, args.d)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.l_max < 0 or args.m_max < 0:
        raise ConfigError("l-max and m-max must be >= 0")
    rstar = critical_radius(spec.n, spec.d)
    try:
        gap = _fmt(spectral_gap(spec))
    except NonPositiveGap:
        gap = "none (R <= critical radius)"
    lines = [f"# critical_radius = {_fmt(rstar)}", f"# spectral_gap = {gap}"]
    lines.append("l,m,lambda,multiplicity")
    for entry in spectrum_table(spec, args.l_max, args.m_max):
        lines.append(
            f"{entry.index.l},{entry.index.m},{_fmt(entry.lam)},{entry.multiplicity}"
        )
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        out_dir = pathlib.Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "spectrum.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def _simulate_into(raw_config: dict, out_dir: pathlib.Path, seed_override: int | None):
    """Run one simulation and write its artifacts; returns (trajectory, outputs)."""
    config = _flow_config(raw_config, seed_override)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = run(config)
    outputs = []
    diag = out_dir / "diagnostics.csv"
    write_diagnostics_csv(traj, diag)
    outputs.append(diag)
    t0, f0 = traj.snapshots[0]
    t1, f1 = traj.snapshots[-1]
    first = out_dir / "field_initial.txt"
    last = out_dir / "field_final.txt"
    save_field(f0, first, t=t0)
    save_field(f1, last, t=t1)
    outputs += [first, last]
    stride = raw_config.get("snapshot_stride")
    if stride is not None:
        for k, (ts, fs) in enumerate(traj.snapshots):
            if k % stride == 0:
                p = out_dir / f"field_{k:06d}.txt"
                save_field(fs, p, t=ts)
                outputs.append(p)
    return traj, outputs


def cmd_simulate(args) -> int:
    raw = load_config(args.config)
    started = _now()
    out_dir = pathlib.Path(args.out)
    traj, outputs = _simulate_into(raw, out_dir, args.seed)
    _write_manifest(out_dir, "simulate", raw, started, outputs, termination=traj.termination)
    print(
        f"simulate: termination={traj.termination} records={len(traj.records)} "
        f"final_stable_norm={traj.records[-1].stable_norm:.6e}"
    )
    return 0


def _sweep_value(raw: dict, param: str, value: float) -> dict:
    derived = json.loads(json.dumps(raw))
    if param == "R":
        derived["R"] = value
    else:
        modes = derived.get("initial", {}).get("modes", [])
        if not modes:
            raise ConfigError("amplitude sweep needs at least one initial mode")
        for entry in modes:
            entry[3] = value
    derived["label"] = f"{raw.get('label', 'sweep')}_{param}={value:g}"
    return derived


def _sweep_row(raw: dict, param: str, value: float, out_dir: pathlib.Path, window, seed):
    row = {"value": value, "status": "ok", "rate": math.nan, "nondecaying": "",
           "final_dist": math.nan, "termination": ""}
    try:
        derived = _sweep_value(raw, param, value)
        traj, outputs = _simulate_into(derived, out_dir, seed)
        row["termination"] = traj.termination
        try:
            fit = fit_decay_rate(traj, window)
            row["rate"] = fit.rate
            row["nondecaying"] = "1" if fit.nondecaying else "0"
        except InsufficientData as exc:
            row["status"] = f"fit_failed: {exc}"
        try:
            _, dist = distance_to_cylinders(traj.snapshots[-1][1])
            row["final_dist"] = dist
        except NewtonDiverged:
            pass
        _write_manifest(out_dir, "sweep-row", derived, _now(), outputs,
                        termination=traj.termination)
    except Exception as exc:  # per-row failures are recorded, the sweep continues
        row["status"] = f"error: {exc}"
    return row


def cmd_sweep(args) -> int:
    raw = load_config(args.config)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"cannot parse --values: {exc}") from exc
    if not values:
        raise ConfigError("--values is empty")
    if not all(math.isfinite(v) for v in values):
        raise ConfigError("sweep values must be finite")
    window = (
        tuple(args.fit_window)
        if args.fit_window is not None
        else (0.25 * raw["t_end"], raw["t_end"])
    )
    started = _now()
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = [None] * len(values)
    workers = max(1, args.threads)
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            pool.submit(
                _sweep_row, raw, args.param, v, out_dir / f"row_{k:03d}", window, args.seed
            ): k
            for k, v in enumerate(values)
        }
        for fut in concurrent.futures.as_completed(futures):
            rows[futures[fut]] = fut.result()
    agg = out_dir / "sweep.csv"
    with open(agg, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["value", "status", "rate", "nondecaying", "final_dist", "termination"])
        for row in rows:
            writer.writerow(
                [
                    _fmt(row["value"]),
                    row["status"],
                    _fmt(row["rate"]),
                    row["nondecaying"],
                    _fmt(row["final_dist"]),
                    row["termination"],
                ]
            )
    _write_manifest(out_dir, "sweep", raw, started, [agg], parameter=args.param,
                    values=values)
    print(f"sweep: {len(values)} rows -> {agg}")
    return 0


def cmd_stationary(args) -> int:
    try:
        spec = CylinderSpec(args.n, args.R, args.d)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    started = _now()
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    branch_path = out_dir / "branch.csv"
    rstar = critical_radius(spec.n, spec.d)
    if abs(spec.R - rstar) > 1e-6 * max(1.0, rstar):
        # no nearby non-cylindrical equilibria away from the critical radius
        with open(branch_path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(
                ["a", "h", "min_r", "max_r", "volume", "area", "residual_inf"]
            )
        _write_manifest(
            out_dir,
            "stationary",
            {"n": args.n, "R": args.R, "d": args.d, "a_max": args.a_max, "steps": args.steps},
            started,
            [branch_path],
            empty_branch=True,
            reason=f"R = {spec.R} is not at the critical radius {rstar:.9g}",
        )
        print(f"stationary: empty branch (R != R* = {rstar:.9g})")
        return 0
    branch = trace_branch(spec, args.a_max, args.steps, N_z=args.N_z)
    write_branch_csv(branch, branch_path)
    _write_manifest(
        out_dir,
        "stationary",
        {"n": args.n, "R": args.R, "d": args.d, "a_max": args.a_max, "steps": args.steps},
        started,
        [branch_path],
        empty_branch=False,
        complete=branch.complete,
        message=branch.message,
    )
    print(f"stationary: {len(branch)} profiles (complete={branch.complete}) -> {branch_path}")
    return 0


def cmd_decay_fit(args) -> int:
    try:
        with open(args.csv) as fh:
            reader = csv.DictReader(fh)
            t, norms = [], []
            for rec in reader:
                t.append(float(rec["t"]))
                norms.append(float(rec["stable_norm"]))
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"cannot read diagnostics CSV {args.csv}: {exc}") from exc
    try:
        fit = fit_decay_series(np.array(t), np.array(norms), (args.t_a, args.t_b))
    except InsufficientData as exc:
        raise ConfigError(str(exc)) from exc
    flag = " (nondecaying)" if fit.nondecaying else ""
    print(f"rate = {_fmt(fit.rate)}{flag}  [n={fit.npoints}, window=({args.t_a}, {args.t_b})]")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vpmcf",
        description="Volume-preserving mean curvature flow near cylinders: "
        "simulation and analysis driver.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="eigenvalue table of the linearized operator")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--l-max", type=int, default=4)
    p.add_argument("--m-max", type=int, default=4)
    p.add_argument("--out", default=None, help="also write spectrum.csv into this directory")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("simulate", help="run one flow experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="vpmcf_out")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a parameter sweep of independent simulations")
    p.add_argument("--config", required=True, help="base config; one run per value")
    p.add_argument("--param", choices=("R", "amplitude"), required=True)
    p.add_argument("--values", required=True, help="comma-separated parameter values")
    p.add_argument("--out", default="vpmcf_out")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument(
        "--fit-window",
        type=float,
        nargs=2,
        default=None,
        metavar=("T_A", "T_B"),
        help="decay-fit window (default: last three quarters of the run)",
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stationary", help="trace the non-cylindrical CMC branch at R*")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--a-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--N-z", type=int, default=64)
    p.add_argument("--out", default="vpmcf_out")
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("decay-fit", help="least-squares decay rate from a diagnostics CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--t-a", type=float, required=True)
    p.add_argument("--t-b", type=float, required=True)
    p.set_defaults(func=cmd_decay_fit)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


if __name__ == "__main__":
    sys.exit(main())
