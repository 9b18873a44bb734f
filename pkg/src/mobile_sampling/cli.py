"""Command-line front end.

Exit status: 2 for configuration errors, 1 when a verdict fails, 0 otherwise.
Human output uses 5 decimals; files use 12 significant digits.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import convex_geometry as cg
from . import reports
from .battery import RUNTIME_LIMITS, run_suite
from .config import CRITERIA, ConfigError, ExperimentConfig
from .sampling_model import (
    NotSamplingSetError,
    export_frame_matrix,
    frame_bounds,
    gap_bound_cube,
    max_gap,
    periodize,
    universal_set_1d,
)
from .trajectory import (
    PointSet,
    TrajectorySet,
    covering_check,
    lattice,
    parse_trajectory,
    path_density,
)


# -- formatting ---------------------------------------------------------------


def fmt_human(x) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    if x != 0 and not (1e-3 <= abs(x) < 1e7):
        return f"{x:.5e}"
    return f"{x:.5f}"


def jsonable(obj):
    """Plain JSON types; floats rounded to 12 significant digits."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = obj.to_dict() if hasattr(obj, "to_dict") else dataclasses.asdict(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.12g}")
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, allow_nan=False)


def _write(out_dir, name, text) -> Path:
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


# -- input resolution ---------------------------------------------------------


def _document(value):
    """Inline JSON text, a dict, or a path to a JSON file."""
    if isinstance(value, dict):
        return value
    text = str(value).strip()
    if text.startswith("{"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid inline JSON: {exc}") from exc
    path = Path(text)
    if path.is_file():
        try:
            return json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
    return None


def resolve_body(value, dim: int) -> cg.ConvexBody:
    doc = _document(value)
    try:
        return cg.ConvexBody.from_dict(doc) if doc is not None else cg.parse_body(str(value), dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad body {value!r}: {exc}") from exc


def resolve_trajectory(value, dim: int) -> TrajectorySet:
    doc = _document(value)
    try:
        return TrajectorySet.from_dict(doc) if doc is not None else parse_trajectory(str(value), dim)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad trajectory {value!r}: {exc}") from exc


def resolve_samples(value, dim: int) -> PointSet:
    """``lattice:STEP``, ``universal:ETA`` or a point-set document."""
    doc = _document(value)
    try:
        if doc is not None:
            return PointSet.from_dict(doc)
        kind, _, arg = str(value).partition(":")
        if kind == "lattice":
            return lattice(dim, float(arg))
        if kind == "universal":
            return universal_set_1d(float(arg))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad sample set {value!r}: {exc}") from exc
    raise ConfigError(f"bad sample set {value!r}; expected lattice:STEP, universal:ETA or JSON")


def _floats(text, name):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--{name} expects comma-separated numbers") from exc


def _period(text, dim):
    T = _floats(text, "T")
    if len(T) not in (1, dim):
        raise ConfigError("--T takes one value or one per axis")
    return T[0] if len(T) == 1 else T


# -- subcommands ----------------------------------------------------------------


def cmd_section(args, cfg):
    E = resolve_body(args.body or cfg.body or "cube:0.5", cfg.dim)
    q = _floats(args.q, "q") if args.q else np.eye(E.dim)[-1]
    res = cg.section_at_height(E, q, args.t)
    print(f"section measure {fmt_human(res.measure)} at height {fmt_human(res.height)}"
          f" along ({', '.join(fmt_human(v) for v in res.direction)})")
    if args.out:
        _write(args.out, "section.json", dumps({
            "body": E.to_dict(), "direction": res.direction, "height": res.height,
            "measure": res.measure, "section": res.embed(),
        }) + "\n")
    if args.emit_plot_data:
        reports.write_csv(Path(args.out) / "section_profile.csv", *reports.section_profile(E, q))
        if E.dim == 2:
            reports.write_csv(Path(args.out) / "angular_profile.csv", *reports.angular_profile(E))
    return 0


def cmd_delta(args, cfg):
    E = resolve_body(args.body or cfg.body or "cube:0.5", cfg.dim)
    q, value = cg.delta_E(E, args.resolution)
    print(f"delta {fmt_human(value)} attained along ({', '.join(fmt_human(v) for v in q)})")
    if args.out:
        _write(args.out, "delta.json", dumps({"body": E.to_dict(), "delta": value, "direction": q}) + "\n")
    if args.emit_plot_data and E.dim == 2:
        reports.write_csv(Path(args.out) / "angular_profile.csv", *reports.angular_profile(E))
    return 0


def _radii(args, cfg):
    if args.radii:
        return _floats(args.radii, "radii")
    if args.rmax:
        return [args.rmax / 8, args.rmax / 4, args.rmax / 2, args.rmax]
    return cfg.radii


def cmd_density(args, cfg):
    P = resolve_trajectory(args.traj or cfg.trajectory or "uniform:1", cfg.dim)
    radii = _radii(args, cfg)
    try:
        est = path_density(P, radii, cfg.centers_per_radius, args.window, cfg.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"path density lower {fmt_human(est.lower)} upper {fmt_human(est.upper)}"
          f" (radius {fmt_human(radii[-1])}, {args.window} windows)")
    if args.out:
        reports.write_csv(Path(args.out) / "density_windows.csv", *_split(list(est.csv_rows())))
        _write(args.out, "density.json", dumps({
            "trajectory": P.to_dict(), "lower": est.lower, "upper": est.upper,
            "radii": est.radii, "window": est.window, "schedule": est.schedule,
        }) + "\n")
    if args.emit_plot_data:
        rows = [(a, lo, hi) for a, lo, hi in est.schedule]
        reports.write_csv(Path(args.out) / "density_schedule.csv", ("radius", "min_density", "max_density"), rows)
    return 0


def _split(rows):
    return rows[0], rows[1:]


def cmd_frame(args, cfg):
    dim = cfg.dim
    Lam = resolve_samples(args.samples or cfg.samples or "lattice:0.5", dim)
    Omega = resolve_body(args.body or cfg.body or "cube:0.5", Lam.dim)
    T = _period(args.T, Lam.dim) if args.T else cfg.T
    try:
        spec = periodize(Omega, T)
        fb = frame_bounds(spec, Lam)
    except NotSamplingSetError as exc:
        print(f"not a sampling set: A {fmt_human(exc.A)} B {fmt_human(exc.B)}")
        if args.out:
            _write(args.out, "frame.json", dumps({"A": exc.A, "B": exc.B, "sampling": False}) + "\n")
        return 1
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"A {fmt_human(fb.A)} B {fmt_human(fb.B)} condition {fmt_human(fb.condition)}"
          f" ({spec.size} frequencies, {fb.precision})")
    if args.out:
        _write(args.out, "frame.json", dumps(dict(fb.to_dict(), sampling=True, frequencies=spec.size)) + "\n")
        if args.export_matrix:
            export_frame_matrix(spec, Lam, Path(args.out) / "frame_matrix.c16")
    return 0


def cmd_gap(args, cfg):
    if args.A is None or args.B is None:
        raise ConfigError("gap needs --A and --B")
    try:
        R = gap_bound_cube(args.d, args.A, args.B)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"gap bound R {fmt_human(R)}")
    doc = {"d": args.d, "A": args.A, "B": args.B, "R": R}
    status = 0
    if args.samples:
        Lam = resolve_samples(args.samples, args.d)
        rep = max_gap(Lam, args.window, args.step, bound=R)
        ok = rep.empirical_gap <= R
        status = 0 if ok else 1
        print(f"empirical gap {fmt_human(rep.empirical_gap)} ({'within' if ok else 'exceeds'} bound)")
        doc.update(empirical_gap=rep.empirical_gap, witness=rep.witness, within_bound=ok)
    if args.out:
        _write(args.out, "gap.json", dumps(doc) + "\n")
    return status


def cmd_cover(args, cfg):
    P = resolve_trajectory(args.traj or cfg.trajectory or "uniform:1", cfg.dim)
    E = resolve_body(args.body or cfg.body or "ball:0.5", P.dim)
    step = args.step if args.step else E.inradius / 4
    try:
        res = covering_check(P, E, args.window, step)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    word = "covered" if res.covered else "not covered"
    print(f"{word}: max gauge {fmt_human(res.max_gauge)} over {res.grid_points} grid points")
    if args.out:
        _write(args.out, "cover.json", dumps({
            "covered": res.covered, "max_gauge": res.max_gauge, "grid_points": res.grid_points,
            "witness": res.witness,
        }) + "\n")
    return 0 if res.covered else 1


def _run_verdicts(args, cfg, claims):
    cfg = dataclasses.replace(cfg, claims=list(claims))
    results = run_suite(cfg, max(1, args.jobs))
    failed = 0
    lines = []
    for v, seconds in results:
        limit = RUNTIME_LIMITS[v.claim_id]
        slow = seconds > limit
        failed += (not v.passed) or slow
        note = f" ({v.reason})" if v.reason else ""
        clock = f"{seconds:.1f}s" + (f" over {limit:.0f}s limit" if slow else "")
        print(f"{'PASS' if v.passed else 'FAIL'} {v.claim_id} margin {fmt_human(v.margin)} {clock}{note}")
        lines.append(dumps(v))
    if args.out:
        _write(args.out, "verdicts.jsonl", "\n".join(lines) + "\n")
        _write(args.out, "config.json", dumps(cfg.to_dict()) + "\n")
        if args.emit_plot_data:
            reports.emit_plot_data(cfg, args.out)
    print(f"{len(results) - failed}/{len(results)} criteria passed")
    return 1 if failed else 0


def cmd_verify(args, cfg):
    claims = args.claim or cfg.claims
    unknown = sorted(set(claims) - set(CRITERIA))
    if unknown:
        raise ConfigError(f"unknown claim ids: {', '.join(unknown)}")
    return _run_verdicts(args, cfg, claims)


def cmd_suite(args, cfg):
    return _run_verdicts(args, cfg, CRITERIA if not args.config else cfg.claims)


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON file)")
    common.add_argument("--out", help="directory for JSON/CSV output")
    common.add_argument("--seed", type=int, help="seed for window centers and Monte Carlo")
    common.add_argument("--dim", type=int, help="ambient dimension")
    common.add_argument("--emit-plot-data", action="store_true", help="also write figure tables as CSV")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for suite/verify")

    p = argparse.ArgumentParser(prog="mobile-sampling", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("section", parents=[common], help="hyperplane section measure")
    s.add_argument("--body")
    s.add_argument("--q", help="direction, comma separated (default last axis)")
    s.add_argument("--t", type=float, default=0.0, help="height along q")
    s.set_defaults(func=cmd_section)

    s = sub.add_parser("delta", parents=[common], help="largest shadow measure of a body")
    s.add_argument("--body")
    s.add_argument("--resolution", type=float, default=0.01, help="angular grid resolution (radians)")
    s.set_defaults(func=cmd_delta)

    s = sub.add_parser("density", parents=[common], help="path density of a trajectory set")
    s.add_argument("--traj")
    s.add_argument("--rmax", type=float, help="largest radius; schedule is rmax/8, rmax/4, rmax/2, rmax")
    s.add_argument("--radii", help="explicit radius schedule, comma separated")
    s.add_argument("--window", choices=("ball", "cube"), default="ball")
    s.set_defaults(func=cmd_density)

    s = sub.add_parser("frame", parents=[common], help="frame bounds on the periodized model")
    s.add_argument("--samples", help="lattice:STEP, universal:ETA or a point-set JSON")
    s.add_argument("--body", help="spectrum (default cube:0.5)")
    s.add_argument("--T", help="period, one value or one per axis")
    s.add_argument("--export-matrix", action="store_true", help="write the frame matrix as complex128")
    s.set_defaults(func=cmd_frame)

    s = sub.add_parser("gap", parents=[common], help="gap bound for the cube spectrum")
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--A", type=float)
    s.add_argument("--B", type=float)
    s.add_argument("--samples", help="also measure the empirical gap of this set")
    s.add_argument("--window", type=float, default=10.0)
    s.add_argument("--step", type=float, default=0.05)
    s.set_defaults(func=cmd_gap)

    s = sub.add_parser("cover", parents=[common], help="test P + E covers a cube window")
    s.add_argument("--traj")
    s.add_argument("--body", help="covering body E (default ball:0.5)")
    s.add_argument("--window", type=float, default=10.0, help="window half-width")
    s.add_argument("--step", type=float, help="grid pitch (default inradius/4)")
    s.set_defaults(func=cmd_cover)

    s = sub.add_parser("verify", parents=[common], help="run selected criteria")
    s.add_argument("--claim", action="append", help="criterion id (repeatable)")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("suite", parents=[common], help="run the full acceptance battery")
    s.set_defaults(func=cmd_suite)
    return p


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.dim is not None:
        over["dim"] = args.dim
    if args.out is None and cfg.out_dir:
        args.out = cfg.out_dir
    if over:
        try:
            cfg = dataclasses.replace(cfg, **over)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    if args.emit_plot_data and not args.out:
        raise ConfigError("--emit-plot-data needs --out")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
