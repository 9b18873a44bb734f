"""Tables behind the figures: each function returns ``(header, rows)``.

Rows hold plain floats and strings; ``write_csv`` formats numbers with 12
significant digits so identical inputs give identical files.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from . import convex_geometry as cg
from . import theorem_lab as lab
from .config import ExperimentConfig
from .trajectory import c2_certificate, hairs, path_density, uniform_set


def fmt_machine(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt_machine(v) for v in r])
    return path


def counterexample_table(cfg: ExperimentConfig):
    header = ("n", "upper_density", "lower_density", "expected", "A", "B", "condition", "precision")
    rows = lab.counterexample_sweep(cfg.hairs_n, cfg.t_factor, cfg.radii, cfg.centers_per_radius, cfg.seed)
    return header, [tuple(r[k] for k in header) for r in rows]


def density_sweep(cfg: ExperimentConfig, trajectories=None):
    """Min/max path density per radius for each named trajectory set."""
    if trajectories is None:
        trajectories = {"uniform:1": uniform_set(2, [0.0, 1.0], 1.0)}
        trajectories.update({f"hairs:{n}": hairs(int(n)) for n in cfg.hairs_n})
    header = ("trajectory", "radius", "min_density", "max_density")
    rows = []
    for name, P in trajectories.items():
        est = path_density(P, cfg.radii, cfg.centers_per_radius, "ball", cfg.seed)
        rows.extend((name, a, lo, hi) for a, lo, hi in est.schedule)
    return header, rows


def section_profile(body: cg.ConvexBody, q, count: int = 41):
    """Section measure against height along one direction."""
    q = cg.as_direction(q, body.dim)
    h = body.support(q)
    header = ("height", "measure")
    rows = [(float(t), cg.section_at_height(body, q, float(t)).measure) for t in np.linspace(-h, h, count)]
    return header, rows


def angular_profile(body: cg.ConvexBody, count: int = 181):
    """Planar bodies: central section and shadow measure against angle."""
    if body.dim != 2:
        raise ValueError("angular profile is defined for planar bodies")
    header = ("angle", "central_section", "shadow")
    rows = []
    for th in np.linspace(0.0, math.pi, count):
        q = np.array([math.cos(th), math.sin(th)])
        rows.append((float(th), cg.section_at_height(body, q, 0.0).measure, cg.projection_measure(body, q)))
    return header, rows


def section_plots():
    """Section profiles of the reference bodies, stacked with a label column."""
    bodies = {
        "cube:0.5": cg.cube(2, 0.5),
        "ball:0.5": cg.ball(2, 0.5),
        "cross:0.5": cg.cross_polytope(2, 0.5),
    }
    header = ("body", "angle", "central_section", "shadow")
    rows = []
    for name, E in bodies.items():
        rows.extend((name,) + r for r in angular_profile(E)[1])
    return header, rows


def connector_table(cfg: ExperimentConfig):
    header = ("trajectory", "radius", "overhead", "ratio", "curve_length", "window_length", "verified")
    sets = {"uniform:1": uniform_set(2, [0.0, 1.0], 1.0)}
    sets.update({f"hairs:{n}": hairs(int(n)) for n in cfg.hairs_n})
    rows = []
    for name, P in sets.items():
        for a in cfg.radii:
            cert = c2_certificate(P, np.zeros(2), a)
            rows.append((name, a, cert.overhead, cert.overhead / a**2, cert.length, cert.window_length, cert.verified))
    return header, rows


PLOT_TABLES = {
    "counterexample_table.csv": counterexample_table,
    "density_sweep.csv": density_sweep,
    "section_profiles.csv": lambda cfg: section_plots(),
    "connector_overhead.csv": connector_table,
}


def emit_plot_data(cfg: ExperimentConfig, out_dir) -> list:
    out = []
    for name, fn in PLOT_TABLES.items():
        header, rows = fn(cfg)
        out.append(write_csv(Path(out_dir) / name, header, rows))
    return out
