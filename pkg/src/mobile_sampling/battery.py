"""The acceptance battery: one verdict per criterion, plus sweep tables.

Runtimes are measured by the caller and never written into verdicts, so
machine output is identical across runs.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import convex_geometry as cg
from . import theorem_lab as lab
from .config import CRITERIA, ExperimentConfig
from .sampling_model import (
    frame_bounds,
    gap_bound_cube,
    periodize,
    universal_set_1d,
)
from .trajectory import (
    c2_certificate,
    hair_sampling_factor,
    hairs,
    lattice,
    parallel_lines,
    periodized,
    uniform_set,
)

RUNTIME_LIMITS = {
    "delta-exact-square": 1.0,
    "parallel-optimal-density": 30.0,
    "parallel-lower-bound": 60.0,
    "hairs-ill-posed": 120.0,
    "gap-law-square": 120.0,
    "covering-density": 60.0,
    "density-vs-stability": 60.0,
    "slide-lemmas": 120.0,
    "frame-normalization": 10.0,
    "connector-overhead": 60.0,
}


def _direction(theta):
    return np.array([math.cos(theta), math.sin(theta)])


def random_symmetric_polygon(rng, k=None, scale=0.5):
    k = int(rng.integers(2, 5)) if k is None else k
    ang = np.sort(rng.uniform(0, math.pi, k))
    rad = rng.uniform(0.6, 1.0, k) * scale
    V = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    return cg.symmetric_polytope(np.vstack([V, -V]))


# 1 ----------------------------------------------------------------------------


def delta_exact_square(cfg: ExperimentConfig) -> lab.Verdict:
    q, value = cg.delta_E(cg.cube(2, 0.5))
    err = abs(value - math.sqrt(2))
    return lab.Verdict.judge(
        "delta-exact-square", -err, cfg.tolerances.delta_abs,
        metadata={"delta_E": value, "direction": np.asarray(q).tolist(), "exact": math.sqrt(2)},
    )


# 2 ----------------------------------------------------------------------------


def parallel_optimal_density(cfg: ExperimentConfig) -> lab.Verdict:
    tol = cfg.tolerances
    Omega = cg.cube(2, 0.5)
    _, smin = cg.min_central_section(Omega)
    v = lab.check_theorem_parallel(Omega, 0.1, cfg.T, tol)
    parts = [
        lab.Verdict.judge("min-section", -abs(smin - 1.0), tol.section_abs),
        lab.Verdict.judge("density", -abs(v.metadata["density"] - 1.1), tol.density_abs),
        v,
    ]
    meta = dict(v.metadata, min_section=float(smin))
    return lab.combine("parallel-optimal-density", parts, metadata=meta)


# 3 ----------------------------------------------------------------------------


def lower_bound_configs(seed=0):
    """Twenty (Omega, q, Lambda, T) cases; lattices are the sparsest passing ones."""
    rng = np.random.default_rng([seed, 3])
    planar = [
        (cg.cube(2, 0.5), [0.0, 1.0]), (cg.cube(2, 0.5), [1.0, 1.0]), (cg.cube(2, 0.5), _direction(0.3)),
        (cg.ball(2, 0.5), [0.0, 1.0]), (cg.ball(2, 0.5), _direction(1.1)),
        (cg.cross_polytope(2, 1.0), [0.0, 1.0]), (cg.cross_polytope(2, 1.0), [1.0, 1.0]),
        (cg.cross_polytope(2, 1.0), _direction(0.7)),
        (random_symmetric_polygon(rng), _direction(rng.uniform(0, math.pi))),
        (random_symmetric_polygon(rng), _direction(rng.uniform(0, math.pi))),
        (random_symmetric_polygon(rng), _direction(rng.uniform(0, math.pi))),
        (random_symmetric_polygon(rng), _direction(rng.uniform(0, math.pi))),
    ]
    cases = [("lattice", Om, q, 16.0) for Om, q in planar]
    for Om, q in planar[:4]:
        cases.append(("universal", Om, q, 32.0))
    spatial = [
        (cg.cube(3, 0.5), [0.0, 0.0, 1.0]), (cg.cube(3, 0.5), [1.0, 1.0, 1.0]),
        (cg.cross_polytope(3, 1.0), [0.0, 0.0, 1.0]), (cg.ball(3, 0.5), [0.0, 0.0, 1.0]),
    ]
    cases += [("lattice", Om, q, 6.0) for Om, q in spatial]
    return cases


def parallel_lower_bound(cfg: ExperimentConfig) -> lab.Verdict:
    tol = cfg.tolerances
    parts, rows = [], []
    for kind, Om, q, T in lower_bound_configs(cfg.seed):
        q = cg.as_direction(q, Om.dim)
        if kind == "lattice":
            M, v = lab.tightest_lattice(Om, q, T, tol=tol)
            label = f"lattice M={M}"
        else:
            section = cg.section_at_height(Om, q, 0.0).measure
            v = lab.check_parallel_lower_bound(Om, q, universal_set_1d(1.08 * section), T, tol)
            label = "universal eta=1.08*section"
        parts.append(v)
        rows.append({"shape": Om.shape, "dim": Om.dim, "direction": q.tolist(), "T": T, "sampling": label,
                     "status": v.status, "density": v.metadata.get("density"),
                     "section": v.metadata.get("section"), "margin": v.margin})
    judged = sum(p.status in ("pass", "fail") for p in parts)
    v = lab.combine("parallel-lower-bound", parts, data=rows, metadata={"configurations": len(parts), "judged": judged})
    if judged < len(parts) and v.status != "fail":
        v.status = "fail"
        v.reason = f"only {judged} of {len(parts)} configurations met the sampling premise"
    return v


# 4 ----------------------------------------------------------------------------


def hairs_ill_posed(cfg: ExperimentConfig) -> lab.Verdict:
    tol = cfg.tolerances
    rows = lab.counterexample_sweep(cfg.hairs_n, cfg.t_factor, cfg.radii, cfg.centers_per_radius, cfg.seed)
    parts = [
        lab.Verdict.judge(f"density n={r['n']}", tol.density_rel - lab._rel(r["upper_density"], r["expected"]), 0.0)
        for r in rows
    ]
    cond = [r["condition"] for r in rows]
    growth = min((math.log(b) - math.log(a) for a, b in zip(cond, cond[1:])), default=0.0)
    parts.append(lab.Verdict("condition-increasing", "pass" if growth > 0 else "fail", growth, 0.0))
    return lab.combine("hairs-ill-posed", parts, data=rows, metadata={"t_factor": cfg.t_factor})


# 5 ----------------------------------------------------------------------------


def gap_law_sets(seed=0):
    """Thirty sampling sets of the unit-cube spectrum: (label, Lambda, T, window, grid_step)."""
    rng = np.random.default_rng([seed, 5])
    out = []
    T1 = 16.0
    for M in (17, 20, 24, 32, 40, 48):
        out.append((f"lattice d=1 step={T1 / M:.6g}", lattice(1, T1 / M), T1, 20.0, 0.01))
    for M, amp in ((20, 0.1), (24, 0.2), (32, 0.3), (40, 0.2), (48, 0.4), (32, 0.1)):
        base = (np.arange(M) + amp * rng.uniform(-0.5, 0.5, M)) * (T1 / M) % T1
        out.append((f"jittered d=1 M={M} amp={amp}", periodized(np.sort(base)[:, None], [T1]), T1, 20.0, 0.01))
    for eta in (1.1, 1.25, 1.5, 2.0, 3.0, 1.8):
        out.append((f"universal eta={eta}", universal_set_1d(eta), 32.0, 20.0, 0.01))
    T2 = 8.0
    for M in (9, 10, 12, 16, 24, 11):
        out.append((f"lattice d=2 step={T2 / M:.6g}", lattice(2, T2 / M), T2, 4.0, 0.02))
    for M, amp in ((10, 0.1), (12, 0.2), (16, 0.3)):
        g = np.stack(np.meshgrid(np.arange(M), np.arange(M), indexing="ij"), -1).reshape(-1, 2)
        base = (g + amp * rng.uniform(-0.5, 0.5, g.shape)) * (T2 / M) % T2
        out.append((f"jittered d=2 M={M} amp={amp}", periodized(base, [T2, T2]), T2, 4.0, 0.02))
    for eta, step in ((1.2, 0.5), (1.5, 0.5), (2.0, 0.25)):
        out.append((f"universal x lattice eta={eta} step={step}", (universal_set_1d(eta), lattice(1, step)),
                    (32.0, 8.0), 4.0, 0.02))
    return out


def gap_law_square(cfg: ExperimentConfig) -> lab.Verdict:
    tol = cfg.tolerances
    parts, rows = [], []
    for label, L, T, w, step in gap_law_sets(cfg.seed):
        v = lab.check_gap_law(L, T, w, step, tol, label, np.random.default_rng([cfg.seed, len(rows)]))
        parts.append(v)
        m = v.metadata
        rows.append({"label": label, "status": v.status, "A": m.get("A"), "B": m.get("B"),
                     "gap": m.get("gap"), "bound": m.get("bound")})
    spot1 = gap_bound_cube(1, 1.0, 1.0)
    spot2 = gap_bound_cube(2, 1.0, 1.0)
    parts.append(lab.Verdict.judge("spot d=1", -abs(spot1 - 1.0), tol.gap_formula_abs))
    parts.append(lab.Verdict.judge("spot d=2", -abs(spot2 - (0.5 + math.pi**2 / 4)), tol.gap_formula_abs))
    v = lab.combine("gap-law-square", parts, data=rows, metadata={"spot_d1": spot1, "spot_d2": spot2, "sets": len(rows)})
    if any(p.status not in ("pass", "fail") for p in parts) and v.status != "fail":
        v.status = "fail"
        v.reason = "a constructed set was not a sampling set"
    return v


# 6 ----------------------------------------------------------------------------


def covering_families(seed=0, trials=20):
    rng = np.random.default_rng([seed, 6])
    out = []
    for i in range(trials):
        kind = i % 4
        if kind == 0:
            E = cg.ball(2, rng.uniform(0.3, 1.0))
        elif kind == 1:
            E = cg.cube(2, rng.uniform(0.3, 1.0))
        elif kind == 2:
            E = cg.cross_polytope(2, rng.uniform(0.4, 1.2))
        else:
            E = random_symmetric_polygon(rng, scale=rng.uniform(0.5, 1.2))
        q = _direction(rng.uniform(0, math.pi))
        width = cg.projection_measure(E, q)
        spacing = rng.uniform(0.5, 1.0) * width
        out.append((E, uniform_set(2, q, spacing), spacing))
    return out


def covering_density(cfg: ExperimentConfig) -> lab.Verdict:
    tol = cfg.tolerances
    parts, rows = [], []
    for r in (0.5, 1.0):
        E = cg.ball(2, r)
        P = uniform_set(2, [0.0, 1.0], 2 * r)
        v = lab.check_covering_density(P, E, 6.0, tol, cfg.radii, cfg.seed)
        ratio = v.metadata.get("ell_lower", math.nan) * v.metadata.get("delta_E", math.nan)
        parts.append(lab.Verdict.judge(f"ball tightness r={r}", tol.ball_tightness_rel - abs(ratio - 1.0), 0.0))
        rows.append({"family": f"ball r={r} spacing={2 * r}", "status": v.status, "ratio": ratio})
    for i, (E, P, spacing) in enumerate(covering_families(cfg.seed, cfg.covering_trials)):
        v = lab.check_covering_density(P, E, 6.0, tol, cfg.radii, cfg.seed + i)
        parts.append(v)
        rows.append({"family": f"{E.shape} spacing={spacing:.6g}", "status": v.status,
                     "ell_lower": v.metadata.get("ell_lower"), "inverse_delta_E": v.metadata.get("inverse_delta_E")})
    v = lab.combine("covering-density", parts, data=rows)
    if any(p.status not in ("pass", "fail") for p in parts) and v.status != "fail":
        v.status = "fail"
        v.reason = "a constructed family did not cover"
    return v


# 7 ----------------------------------------------------------------------------


def stability_cases(cfg: ExperimentConfig):
    """(label, P, Lambda, T, T2) with Lambda on P."""
    out = []
    up = [0.0, 1.0]
    out.append(("uniform 1/2, lattice", uniform_set(2, up, 0.5), (lattice(1, 0.5), lattice(1, 0.5)), (8.0, 8.0), (16.0, 16.0)))
    out.append(("uniform 1/3, lattice", uniform_set(2, up, 1 / 3), (lattice(1, 1 / 3), lattice(1, 0.5)), (8.0, 8.0), (16.0, 16.0)))
    # sparsest uniform set with a positive lower bound on an 8-cell: 9 lines per cell
    out.append(("uniform 8/9 (sparsest)", uniform_set(2, up, 8 / 9), (lattice(1, 8 / 9), lattice(1, 0.5)), (8.0, 8.0), (16.0, 16.0)))
    for n in cfg.hairs_n:
        Tx, Tx2 = n * cfg.t_factor, 2 * n * cfg.t_factor
        out.append((f"hairs({n})", hairs(n), (hair_sampling_factor(n), lattice(1, 1.0)),
                    (Tx, lab.hairs_y_period(Tx)), (Tx2, lab.hairs_y_period(Tx2))))
    P = parallel_lines(up, universal_set_1d(1.1))
    out.append(("universal lines eta=1.1", P, (universal_set_1d(1.1), lattice(1, 0.5)), (32.0, 8.0), (64.0, 16.0)))
    return out


def density_vs_stability(cfg: ExperimentConfig) -> lab.Verdict:
    tol = cfg.tolerances
    parts, rows = [], []
    for label, P, L, T, T2 in stability_cases(cfg):
        v = lab.check_infab(P, L, T, T2, tol, cfg.radii, cfg.seed)
        parts.append(v)
        m = v.metadata
        rows.append({"set": label, "status": v.status, "A": m.get("A"), "B": m.get("B"),
                     "bound": m.get("bound"), "ell_lower": m.get("ell_lower"), "margin": v.margin})
    judged = [(p.margin, r["set"]) for p, r in zip(parts, rows) if p.status in ("pass", "fail")]
    meta = {"smallest_margin_set": min(judged)[1] if judged else None}
    v = lab.combine("density-vs-stability", parts, data=rows, metadata=meta)
    if len(judged) < len(parts) and v.status != "fail":
        v.status = "fail"
        v.reason = "a suite trajectory set had no stable frame bounds"
    return v


# 8 ----------------------------------------------------------------------------


def _random_body(rng, dim=2):
    k = int(rng.integers(0, 4))
    if k == 0:
        return cg.ball(dim, rng.uniform(0.3, 1.0))
    if k == 1:
        return cg.cube(dim, rng.uniform(0.3, 1.0))
    if k == 2:
        return cg.cross_polytope(dim, rng.uniform(0.4, 1.2))
    return random_symmetric_polygon(rng)


def slide_lemmas(cfg: ExperimentConfig) -> lab.Verdict:
    tol = cfg.tolerances
    N = cfg.mc_samples
    parts, rows = [], []
    for s in range(cfg.mc_seeds):
        rng = np.random.default_rng([cfg.seed, 8, s])
        E = _random_body(rng)
        q = rng.uniform(-0.6, 0.6, 2)
        v = lab.mc_slide(E, q, N, cfg.seed * 1000 + s, tol)
        parts.append(v)
        rows.append({"lemma": "slide", "seed": s, "shape": E.shape, "estimate": v.metadata["estimate"],
                     "bound": v.metadata["bound"], "exact": v.metadata["exact"], "status": v.status})
    for s in range(cfg.mc_seeds):
        rng = np.random.default_rng([cfg.seed, 88, s])
        E = _random_body(rng)
        alpha = np.cumsum(np.vstack([np.zeros(2), rng.uniform(-1.5, 1.5, (6, 2))]), axis=0)
        _, L = lab.polyline_points(alpha, [0.0])
        F = np.sort(rng.uniform(0, L, 50))
        v = lab.mc_slide_union(E, alpha, F, N, cfg.seed * 1000 + s, tol)
        parts.append(v)
        rows.append({"lemma": "slide-union", "seed": s, "shape": E.shape, "estimate": v.metadata["estimate"],
                     "bound": v.metadata["bound"], "exact": None, "status": v.status})
    # exact axis-aligned cases
    sq = cg.cube(2, 0.5)
    v = lab.mc_slide(sq, [0.3, 0.0], N, cfg.seed, tol)
    parts.append(v)
    for name, val in (("axis slide exact", v.metadata["exact"]), ("axis slide estimate", v.metadata["estimate"])):
        parts.append(lab.Verdict.judge(name, -abs(val - 0.3), tol.slide_exact_abs))
    L = 3.0
    u = lab.mc_slide_union(sq, [[0.0, 0.0], [L, 0.0]], np.linspace(0, L, 61), N, cfg.seed, tol)
    parts.append(u)
    parts.append(lab.Verdict.judge("straight union estimate", -abs(u.metadata["estimate"] - (1 + L)), tol.slide_exact_abs))
    rows.append({"lemma": "slide", "seed": -1, "shape": "cube axis", "estimate": v.metadata["estimate"],
                 "bound": v.metadata["bound"], "exact": 0.3, "status": v.status})
    rows.append({"lemma": "slide-union", "seed": -1, "shape": "cube straight", "estimate": u.metadata["estimate"],
                 "bound": u.metadata["bound"], "exact": 1 + L, "status": u.status})
    return lab.combine("slide-lemmas", parts, data=rows, metadata={"samples": N})


# 9 ----------------------------------------------------------------------------


def frame_normalization(cfg: ExperimentConfig) -> lab.Verdict:
    tol = cfg.tolerances
    parts, rows = [], []
    T = 6.0
    for d in (1, 2):
        for step in (1 / 2, 1 / 3):
            fb = frame_bounds(periodize(cg.cube(d, 0.5), T), lattice(d, step))
            target = step ** (-d)
            err = max(lab._rel(fb.A, target), lab._rel(fb.B, target))
            parts.append(lab.Verdict.judge(f"d={d} step={step:.6g}", -err, tol.frame_rel))
            rows.append({"dim": d, "step": step, "A": fb.A, "B": fb.B, "target": target, "rel_error": err})
    return lab.combine("frame-normalization", parts, data=rows)


# 10 ---------------------------------------------------------------------------


def connector_cases(cfg: ExperimentConfig):
    out = [("uniform spacing 1", uniform_set(2, [0.0, 1.0], 1.0))]
    out += [(f"hairs({n})", hairs(n)) for n in cfg.hairs_n]
    return out


def connector_overhead(cfg: ExperimentConfig) -> lab.Verdict:
    tol = cfg.tolerances
    parts, rows = [], []
    for label, P in connector_cases(cfg):
        ratios = []
        for a in cfg.radii:
            cert = c2_certificate(P, np.zeros(2), a)
            ratios.append(cert.overhead / a**2)
            rows.append({"set": label, "radius": a, "overhead": cert.overhead, "ratio": ratios[-1],
                         "curve_length": cert.length, "window_length": cert.window_length})
        drop = min((x - y for x, y in zip(ratios, ratios[1:])), default=0.0)
        parts.append(lab.Verdict(f"{label} decreasing", "pass" if drop > 0 else "fail", drop, 0.0))
        parts.append(lab.Verdict.judge(f"{label} final", tol.c2_final_ratio - ratios[-1], 0.0))
    v = lab.combine("connector-overhead", parts, data=rows)
    failing = [p.claim_id for p in parts if not p.passed]
    if failing:
        v.reason = "failed: " + ", ".join(failing)
    return v


BATTERY = {
    "delta-exact-square": delta_exact_square,
    "parallel-optimal-density": parallel_optimal_density,
    "parallel-lower-bound": parallel_lower_bound,
    "hairs-ill-posed": hairs_ill_posed,
    "gap-law-square": gap_law_square,
    "covering-density": covering_density,
    "density-vs-stability": density_vs_stability,
    "slide-lemmas": slide_lemmas,
    "frame-normalization": frame_normalization,
    "connector-overhead": connector_overhead,
}
assert tuple(BATTERY) == CRITERIA


def run_criterion(claim_id: str, cfg: ExperimentConfig):
    """Run one criterion; returns (verdict, seconds)."""
    t0 = time.perf_counter()
    v = BATTERY[claim_id](cfg)
    return v, time.perf_counter() - t0


def _job(args):
    return run_criterion(*args)


def run_suite(cfg: ExperimentConfig, jobs: int = 1):
    """All configured criteria, ordered by claim id; returns [(verdict, seconds)]."""
    ids = sorted(cfg.claims)
    if jobs > 1 and len(ids) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_job, [(c, cfg) for c in ids]))
    else:
        results = [run_criterion(c, cfg) for c in ids]
    return results
