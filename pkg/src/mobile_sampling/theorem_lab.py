"""Numerical verdicts for the sampling-trajectory inequalities.

Each check returns a ``Verdict``.  ``margin`` is the signed slack of the
inequality and the verdict passes iff ``margin >= -tolerance``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.spatial import ConvexHull

from . import convex_geometry as cg
from .config import Tolerances
from .sampling_model import (
    FrameBounds,
    NotSamplingSetError,
    cell_points,
    frame_bounds,
    gap_bound_cube,
    max_gap,
    periodize,
    per_section_bounds,
    product_bounds,
    spectrum_from_intervals,
    universal_set_1d,
)
from .trajectory import (
    PointSet,
    TrajectorySet,
    c2_certificate,
    covering_check,
    finite,
    hair_sampling_factor,
    hairs,
    lattice,
    on_trajectories,
    parallel_cross_section_density,
    parallel_lines,
    path_density,
)

DEFAULT_TOL = Tolerances()


@dataclass
class Verdict:
    claim_id: str
    status: str  # pass | fail | skipped | inconclusive
    margin: float
    tolerance: float
    data: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    @classmethod
    def judge(cls, claim_id, margin, tolerance, **kw) -> "Verdict":
        status = "pass" if margin >= -tolerance else "fail"
        return cls(claim_id, status, float(margin), float(tolerance), **kw)

    @classmethod
    def vacuous(cls, claim_id, status, reason, **kw) -> "Verdict":
        return cls(claim_id, status, math.nan, 0.0, reason=reason, **kw)

    def to_dict(self) -> dict:
        return {
            "claim_id": self.claim_id, "status": self.status, "pass": self.passed,
            "margin": self.margin, "tolerance": self.tolerance, "reason": self.reason,
            "metadata": self.metadata, "data": self.data,
        }


def combine(claim_id, parts, **kw) -> Verdict:
    """All-of verdict: margin is the smallest excess ``margin + tolerance``."""
    judged = [p for p in parts if p.status in ("pass", "fail")]
    if not judged:
        return Verdict.vacuous(claim_id, "inconclusive", "no sub-check reached a verdict", **kw)
    excess = min(p.margin + p.tolerance for p in judged)
    bad = [p for p in parts if p.status not in ("pass", "fail")]
    v = Verdict.judge(claim_id, excess, 0.0, **kw)
    if bad and v.passed:
        v.status = "inconclusive"
        v.reason = "; ".join(sorted({f"{p.claim_id}: {p.reason}" for p in bad}))
    return v


def measured_lower_density(P: TrajectorySet, radii, centers_per_radius=8, seed=0) -> float:
    return path_density(P, radii, centers_per_radius, "ball", seed).lower


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# -- sampling sets for the square spectrum ----------------------------------


def square_bounds(Lambda, T) -> FrameBounds:
    """Frame bounds for the centered unit cube spectrum.

    ``Lambda`` is a PointSet (full computation) or a tuple of 1-D factors
    (product set; the bounds factor because the spectrum does).
    """
    if isinstance(Lambda, tuple):
        Ts = np.broadcast_to(np.asarray(T, dtype=float), (len(Lambda),))
        out = None
        for L, t in zip(Lambda, Ts):
            f = frame_bounds(periodize(cg.cube(1, 0.5), t), L)
            out = f if out is None else product_bounds(out, f)
        return out
    return frame_bounds(periodize(cg.cube(Lambda.dim, 0.5), T), Lambda)


def _materialize(Lambda, lo, hi) -> np.ndarray:
    if isinstance(Lambda, tuple):
        axes = [L.materialize([l], [h])[:, 0] for L, l, h in zip(Lambda, lo, hi)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(Lambda))
    return Lambda.materialize(lo, hi)


def _separation(Lambda) -> float:
    if isinstance(Lambda, tuple):
        return min(L.separation() for L in Lambda)
    return Lambda.separation()


def _on_trajectories(P, Lambda, window=12.0) -> bool:
    X = _materialize(Lambda, -window * np.ones(P.dim), window * np.ones(P.dim))
    return len(X) > 0 and bool(on_trajectories(P, X).all())


def _stable_bounds(bounds_fn, T, T2, tol):
    """Bounds at two truncations and whether A, B drift less than allowed."""
    f1, f2 = bounds_fn(T), bounds_fn(T2)
    drift = max(_rel(f2.A, f1.A), _rel(f2.B, f1.B))
    return f1, f2, drift, drift <= tol.truncation_drift


# -- parallel lines -----------------------------------------------------------


def section_heights(Omega: cg.ConvexBody, q, count=9, fraction=0.9):
    h = Omega.support(cg.as_direction(q, Omega.dim))
    return np.linspace(-fraction * h, fraction * h, count)


def check_parallel_lower_bound(Omega, q, Lambda: PointSet, T, tol: Tolerances = DEFAULT_TOL, heights=None) -> Verdict:
    """Cross-section density of lines parallel to q vs the central section of Omega.

    The premise (Lambda samples every section with a positive lower bound)
    is tested at T and 2T.
    """
    cid = "parallel-lower-bound"
    q = cg.as_direction(q, Omega.dim)
    hs = section_heights(Omega, q) if heights is None else heights
    sweeps = [per_section_bounds(Omega, Lambda, hs, t, q) for t in (T, 2 * T)]
    meta = {"dim": Omega.dim, "shape": Omega.shape, "direction": q.tolist(), "T": T}
    if Omega.dim == 3:
        meta["scope"] = "lower-bound direction only; no planar universal set is available for the matching construction"
    if any(s.envelope is None for s in sweeps):
        return Verdict.vacuous(cid, "skipped", "premise fails: Lambda is not a sampling set for every section", metadata=meta)
    P = parallel_lines(q, Lambda)
    density = parallel_cross_section_density(P)
    section = cg.section_at_height(Omega, q, 0.0).measure
    meta.update(density=density, section=section, A=sweeps[0].envelope.A, A2=sweeps[1].envelope.A)
    return Verdict.judge(cid, density - section, tol.lower_bound_rel * section, metadata=meta)


def tightest_lattice(Omega, q, T, max_points=None, tol: Tolerances = DEFAULT_TOL):
    """Sparsest lattice ``(T/M) Z^(d-1)`` whose sections premise holds; returns (M, verdict)."""
    d = Omega.dim
    q = cg.as_direction(q, d)
    hs = section_heights(Omega, q)
    lower = max(1, int(math.floor(cg.section_at_height(Omega, q, 0.0).measure ** (1 / (d - 1)) * T)) - 2)
    last = None
    for M in range(lower, (max_points or 4 * int(T) + 8) + 1):
        v = check_parallel_lower_bound(Omega, q, lattice(d - 1, T / M), T, tol, hs)
        if v.status in ("pass", "fail"):
            return M, v
        last = v
    return None, last


def check_theorem_parallel(Omega, eta_margin: float, T, tol: Tolerances = DEFAULT_TOL, radii=None) -> Verdict:
    """Lines along the minimal-section direction over a universal cross-section."""
    cid = "parallel-optimal-density"
    if Omega.dim != 2:
        raise ValueError("the universal cross-section construction is one-dimensional (planar Omega)")
    if not eta_margin > 0:
        raise ValueError("eta_margin must be positive")
    q, smin = cg.min_central_section(Omega)
    eta = float(smin) + eta_margin
    Lambda = universal_set_1d(eta)
    P = parallel_lines(q, Lambda)
    hs = section_heights(Omega, q)
    meta = {"direction": np.asarray(q).tolist(), "min_section": float(smin), "eta": eta, "T": T}
    sweeps = [per_section_bounds(Omega, Lambda, hs, t, q) for t in (T, 2 * T)]
    if any(s.envelope is None for s in sweeps):
        return Verdict.judge(cid, -1.0, 0.0, metadata=meta, reason="frame failure at the chosen eta")
    A1, A2 = sweeps[0].envelope.A, sweeps[1].envelope.A
    drift = _rel(A2, A1)
    density = parallel_cross_section_density(P)
    meta.update(density=density, A=A1, A2=A2, B=sweeps[0].envelope.B, drift=drift)
    if radii is not None:
        est = path_density(P, radii)
        meta.update(window_lower=est.lower, window_upper=est.upper)
    parts = [
        Verdict.judge("density", -abs(density - eta), tol.density_abs),
        Verdict.judge("positive-A", min(A1, A2), 0.0),
        Verdict.judge("truncation-drift", tol.truncation_drift - drift, 0.0),
    ]
    v = combine(cid, parts, metadata=meta)
    v.margin = A1 if v.passed else v.margin
    return v


# -- hairs --------------------------------------------------------------------


def hairs_y_period(Tx: int) -> int:
    """Odd period for the integer rows: an even one puts boundary frequencies in excess."""
    return Tx if Tx % 2 else Tx + 1


def hairs_bounds(n: int, t_factor: int = 4) -> FrameBounds:
    """Frame bounds of ``Gamma_n x Z`` for the square on a cell of width n * t_factor."""
    Tx = n * t_factor
    return square_bounds((hair_sampling_factor(n), lattice(1, 1.0)), (Tx, hairs_y_period(Tx)))


def counterexample_sweep(n_values, T_factor: int = 4, radii=(25, 50, 100, 200), centers_per_radius=8, seed=0):
    """Rows (n, upper_density, expected, A, B, condition, precision) for hairs(n)."""
    rows = []
    for n in n_values:
        n = int(n)
        est = path_density(hairs(n), radii, centers_per_radius, "ball", seed)
        try:
            fb = hairs_bounds(n, int(T_factor))
            A, B, cond, prec = fb.A, fb.B, fb.condition, fb.precision
        except NotSamplingSetError as exc:
            A, B, cond, prec = 0.0, exc.B, math.inf, "failed"
        rows.append({
            "n": n, "upper_density": est.upper, "lower_density": est.lower, "expected": 1 / n + 1 / n**2,
            "A": A, "B": B, "condition": cond, "precision": prec,
        })
    return rows


# -- positivity, covering, stability -------------------------------------------


def check_positive_density(P, Lambda, Omega, T, tol: Tolerances = DEFAULT_TOL, radii=(25, 50, 100, 200), seed=0) -> Verdict:
    """Path density of P against separation(Lambda) * eta for eta just below |Omega|."""
    cid = "positive-density"
    if not _on_trajectories(P, Lambda):
        raise ValueError("Lambda does not lie on the trajectories")
    try:
        if isinstance(Lambda, tuple):
            if Omega.shape != "cube":
                raise ValueError("product sample sets are supported for cube spectra only")
            fb = square_bounds(Lambda, T)
        else:
            fb = frame_bounds(periodize(Omega, T), Lambda)
    except NotSamplingSetError as exc:
        return Verdict.vacuous(cid, "skipped", f"premise fails: {exc}")
    delta = _separation(Lambda)
    eta = tol.eta_fraction * Omega.volume
    ell = measured_lower_density(P, radii, seed=seed)
    bound = delta * eta
    meta = {"separation": delta, "eta": eta, "ell_lower": ell, "A": fb.A, "B": fb.B}
    return Verdict.judge(cid, ell - bound, tol.positive_density_slack * bound, metadata=meta)


def check_covering_density(P, E, window, tol: Tolerances = DEFAULT_TOL, radii=(25, 50, 100, 200), seed=0,
                           grid_step=None) -> Verdict:
    """Lower path density of a covering trajectory set against 1 / Delta_E."""
    cid = "covering-density"
    step = E.inradius / 4 if grid_step is None else grid_step
    cover = covering_check(P, E, window, step)
    if not cover.covered:
        return Verdict.vacuous(cid, "skipped", "premise fails: P + E does not cover the window",
                               metadata={"witness": cover.witness.tolist()})
    cert = c2_certificate(P, np.zeros(P.dim), min(50.0, max(radii)))
    _, dE = cg.delta_E(E)
    ell = measured_lower_density(P, radii, seed=seed)
    meta = {"ell_lower": ell, "delta_E": dE, "inverse_delta_E": 1 / dE, "c2_ratio": cert.overhead / 50.0**P.dim}
    return Verdict.judge(cid, ell - 1 / dE, tol.covering_slack / dE, metadata=meta)


def check_infab(P, Lambda, T, T2=None, tol: Tolerances = DEFAULT_TOL, radii=(25, 50, 100, 200), seed=0) -> Verdict:
    """Lower path density against ``A / (pi^2 sqrt 2 B)`` for the unit square spectrum."""
    cid = "density-vs-stability"
    if P.dim != 2:
        raise ValueError("the explicit bound is stated for the planar square")
    if not _on_trajectories(P, Lambda):
        raise ValueError("Lambda does not lie on the trajectories")
    T2 = 2 * np.asarray(T, dtype=float) if T2 is None else T2
    try:
        f1, f2, drift, stable = _stable_bounds(lambda t: square_bounds(Lambda, t), T, T2, tol)
    except NotSamplingSetError as exc:
        return Verdict.vacuous(cid, "skipped", f"premise fails: {exc}")
    meta = {"A": f2.A, "B": f2.B, "drift": drift}
    if not stable:
        return Verdict.vacuous(cid, "inconclusive", f"truncation drift {drift:.3g} exceeds tolerance", metadata=meta)
    bound = f2.A / (math.pi**2 * math.sqrt(2) * f2.B)
    ell = measured_lower_density(P, radii, seed=seed)
    meta.update(bound=bound, ell_lower=ell)
    return Verdict.judge(cid, ell - bound, tol.infab_slack * bound, metadata=meta)


# -- gap law ------------------------------------------------------------------


def sinc_tail_bound_check(d: int, r: float) -> tuple:
    """``int_{|x|_inf > r} sinc^2`` (exact via quadrature) and the bound 2d / (pi^2 r)."""
    inner, _ = integrate.quad(lambda t: np.sinc(t) ** 2, -r, r, limit=400)
    tail = 1.0 - inner**d
    return tail, 2 * d / (math.pi**2 * r)


def kernel_frame_sums(Lambda, T, A, B, probes) -> np.ndarray:
    """``sum_l |h_x(l)|^2`` for the normalized periodized kernel at each probe x."""
    d = len(Lambda) if isinstance(Lambda, tuple) else Lambda.dim
    Ts = np.broadcast_to(np.asarray(T, dtype=float), (d,))
    if isinstance(Lambda, tuple):
        pts = np.stack(np.meshgrid(*[cell_points(L, t)[:, 0] for L, t in zip(Lambda, Ts)], indexing="ij"),
                       axis=-1).reshape(-1, d)
    else:
        pts = cell_points(Lambda, Ts)
    spec = periodize(cg.cube(d, 0.5), Ts)
    W = spec.frequencies / spec.period
    out = []
    for x in np.atleast_2d(probes):
        k = np.exp(2j * np.pi * (pts - x) @ W.T).sum(axis=1) / spec.cell_volume
        kxx = spec.size / spec.cell_volume
        out.append(float(np.sum(np.abs(k) ** 2) / kxx))
    return np.array(out)


def check_gap_law(Lambda, T, window, grid_step, tol: Tolerances = DEFAULT_TOL, label="", rng=None) -> Verdict:
    """Empirical max gap vs the explicit side bound, with the three proof claims checked."""
    cid = "gap-law-square"
    try:
        fb = square_bounds(Lambda, T)
    except NotSamplingSetError as exc:
        return Verdict.vacuous(cid, "skipped", f"premise fails: {exc}", metadata={"label": label})
    d = len(Lambda) if isinstance(Lambda, tuple) else Lambda.dim
    if isinstance(Lambda, tuple):
        Ts = np.broadcast_to(np.asarray(T, float), (d,))
        pts = _materialize(Lambda, -2 * window * np.ones(d) - Ts, 2 * window * np.ones(d) + Ts)
        gap = max_gap(finite(pts), window, grid_step).empirical_gap
    else:
        gap = max_gap(Lambda, window, grid_step).empirical_gap
    R = gap_bound_cube(d, fb.A, fb.B)
    rng = np.random.default_rng(0) if rng is None else rng
    Ts = np.broadcast_to(np.asarray(T, float), (d,))
    probes = rng.uniform(0, 1, size=(8, d)) * Ts
    sums = kernel_frame_sums(Lambda, T, fb.A, fb.B, probes)
    claim1 = min(sums.min() - fb.A * (1 - tol.frame_rel), fb.B * (1 + tol.frame_rel) - sums.max())
    local = _materialize(Lambda, -2 * np.ones(d) - 0.5, Ts + 2.5)
    counts = [int(np.all(np.abs(local - x) <= 0.5, axis=1).sum()) for x in probes]
    claim2 = (math.pi**2 / 4) ** d * fb.B - max(counts)
    claim3 = min(b - t for t, b in (sinc_tail_bound_check(d, r) for r in (0.5, 1.0, 2.0, 5.0)))
    meta = {"label": label, "dim": d, "A": fb.A, "B": fb.B, "gap": gap, "bound": R,
            "claim_kernel_sums": claim1, "claim_counting": claim2, "claim_tail": claim3}
    parts = [
        Verdict.judge("gap", R - gap, 0.0),
        Verdict.judge("claim-kernel", claim1, 0.0),
        Verdict.judge("claim-counting", claim2, 0.0),
        Verdict.judge("claim-tail", claim3, 0.0),
    ]
    v = combine(cid, parts, metadata=meta)
    return v


# -- slide lemmas (Monte Carlo) ------------------------------------------------


def _stratified(lo, hi, samples, rng):
    """One uniform point per cell of an m^d grid, m^d >= samples; returns (points, m)."""
    d = len(lo)
    m = int(math.ceil(samples ** (1.0 / d) - 1e-9))
    idx = np.stack(np.meshgrid(*[np.arange(m)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    u = (idx + rng.random(idx.shape)) / m
    return lo + u * (hi - lo), m


def _mc_volume(mask, box_volume):
    N = mask.size
    p = mask.mean()
    return box_volume * p, box_volume * math.sqrt(max(p * (1 - p), 0.0) / N)


def _convex_intersection_area(E, v):
    """Area of ``E ∩ (E + v)`` for a planar polytope by halfplane clipping."""
    poly = E.vertex_array
    poly = poly[ConvexHull(poly).vertices]
    A, b = E.halfspaces
    for a_i, b_i in zip(A, b + A @ v):
        poly = cg._clip_convex(poly, a_i, b_i)
        if len(poly) == 0:
            return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def exact_slide_volume(E, q):
    """Exact ``|(E + q) \\ E|`` where a closed form exists (planar polytopes, balls)."""
    q = np.asarray(q, dtype=float)
    s = float(np.linalg.norm(q))
    if s == 0:
        return 0.0
    if E.shape == "ball":
        r = E.size
        if E.dim == 2:
            lens = 0.0 if s >= 2 * r else 2 * r * r * math.acos(s / (2 * r)) - 0.5 * s * math.sqrt(4 * r * r - s * s)
            return math.pi * r * r - lens
        if E.dim == 3:
            lens = 0.0 if s >= 2 * r else math.pi * (4 * r + s) * (2 * r - s) ** 2 / 12
            return 4 / 3 * math.pi * r**3 - lens
        return min(s, 2 * r)
    if E.dim == 2:
        return E.volume - _convex_intersection_area(E, q)
    return None


def mc_slide(E, q, samples: int, seed: int, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Monte-Carlo ``|(E+q) \\ E|`` against ``|P_{q-perp} E| * |q|``."""
    cid = "slide-lemma"
    if samples < 10**5:
        raise ValueError("samples must be >= 1e5")
    q = np.asarray(q, dtype=float).ravel()
    s = float(np.linalg.norm(q))
    exact = exact_slide_volume(E, q)
    if s == 0:
        return Verdict.judge(cid, 0.0, 0.0, metadata={"estimate": 0.0, "bound": 0.0, "exact": 0.0, "se": 0.0})
    R = np.array([E.support(e) for e in np.eye(E.dim)])
    lo, hi = -R + np.minimum(q, 0), R + np.maximum(q, 0)
    rng = np.random.default_rng(seed)
    X, _ = _stratified(lo, hi, samples, rng)
    mask = E.contains(X - q) & ~E.contains(X)
    est, se = _mc_volume(mask, float(np.prod(hi - lo)))
    bound = cg.projection_measure(E, q / s) * s
    meta = {"estimate": est, "se": se, "bound": bound, "exact": exact, "samples": int(mask.size), "seed": seed}
    return Verdict.judge(cid, bound - est, tol.mc_sigmas * se, metadata=meta)


def polyline_points(alpha, params) -> np.ndarray:
    """Points of a polyline parametrized by arc length."""
    V = np.asarray(alpha, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(V, axis=0), axis=1))])
    t = np.asarray(params, dtype=float)
    if np.any(t < -1e-12) or np.any(t > cum[-1] + 1e-12):
        raise ValueError("parameters outside the arc-length range of alpha")
    return np.column_stack([np.interp(t, cum, V[:, i]) for i in range(V.shape[1])]), float(cum[-1])


def mc_slide_union(E, alpha, F, samples: int, seed: int, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Monte-Carlo ``|union_{t in F} E + alpha(t)|`` against ``|E| + len(alpha) Delta_E``."""
    cid = "slide-union-lemma"
    shifts, length = polyline_points(alpha, F)
    d = E.dim
    R = np.array([E.support(e) for e in np.eye(d)])
    lo, hi = shifts.min(axis=0) - R, shifts.max(axis=0) + R
    rng = np.random.default_rng(seed)
    X, m = _stratified(lo, hi, samples, rng)
    grid = X.reshape((m,) * d + (d,))
    hit = np.zeros((m,) * d, dtype=bool)
    cell = (hi - lo) / m
    for v in shifts:
        a = np.clip(np.floor((v - R - lo) / cell).astype(int) - 1, 0, m)
        b = np.clip(np.ceil((v + R - lo) / cell).astype(int) + 1, 0, m)
        sl = tuple(slice(i, j) for i, j in zip(a, b))
        sub = grid[sl]
        hit[sl] |= E.contains(sub.reshape(-1, d) - v).reshape(sub.shape[:-1])
    est, se = _mc_volume(hit, float(np.prod(hi - lo)))
    _, dE = cg.delta_E(E)
    bound = E.volume + length * dE
    meta = {"estimate": est, "se": se, "bound": bound, "length": length, "delta_E": dE,
            "translates": len(shifts), "samples": int(hit.size), "seed": seed}
    return Verdict.judge(cid, bound - est, tol.mc_sigmas * se, metadata=meta)
