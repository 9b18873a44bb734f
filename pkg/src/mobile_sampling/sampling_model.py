"""Periodized bandlimited model, frame bounds, universal sets and gaps.

B_Omega is replaced by trigonometric polynomials on the torus
``prod [0, T_i)`` with frequencies ``k / T`` in Omega.  For samples ``Lambda``
in one cell, ``G[l, k] = exp(2 pi i <k/T, lambda_l>)`` and the frame bounds
are the extreme eigenvalues of ``G* G`` divided by the cell volume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from mpmath import mp
from scipy.spatial import ConvexHull, cKDTree

from .convex_geometry import ConvexBody, as_direction, perp_basis, section_at_height
from .trajectory import PointSet

# double-precision eigenvalues are trusted when lambda_min / lambda_max exceeds this
DOUBLE_RATIO = 1e-5
MAX_DPS = 480
MP_MAX_FREQS = 240
REL_ACCURACY = 1e-9
A_FLOOR = 1e-12


class NotSamplingSetError(ValueError):
    """The samples do not give a positive lower frame bound at this truncation."""

    def __init__(self, msg, A=0.0, B=float("nan")):
        super().__init__(msg)
        self.A = A
        self.B = B


@dataclass(eq=False)
class PeriodizedSpectrum:
    dim: int
    period: np.ndarray
    frequencies: np.ndarray  # (K, dim) integer vectors

    def __post_init__(self):
        self.period = np.broadcast_to(np.asarray(self.period, dtype=float), (self.dim,)).copy()
        self.frequencies = np.asarray(self.frequencies, dtype=np.int64).reshape(-1, self.dim)
        if len(self.frequencies) == 0:
            raise ValueError("empty frequency set; increase the period")

    @property
    def size(self) -> int:
        return len(self.frequencies)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.period))

    @property
    def is_symmetric(self) -> bool:
        s = {tuple(k) for k in self.frequencies.tolist()}
        return all(tuple(-v for v in k) in s for k in s)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "period": self.period.tolist(), "frequencies": self.frequencies.tolist()}


def spectrum_from_indicator(dim, period, contains, extent) -> PeriodizedSpectrum:
    """Integer k with ``contains(k / T)``; ``extent[i]`` bounds ``|xi_i|``."""
    T = np.broadcast_to(np.asarray(period, dtype=float), (dim,))
    if not np.all(T > 0):
        raise ValueError("period must be positive")
    ranges = [np.arange(-math.floor(extent[i] * T[i] + 1e-9), math.floor(extent[i] * T[i] + 1e-9) + 1) for i in range(dim)]
    K = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, dim)
    keep = contains(K / T)
    return PeriodizedSpectrum(dim, T, K[keep])


def periodize(Omega: ConvexBody, T) -> PeriodizedSpectrum:
    """Frequencies ``k`` with ``k / T`` in Omega, boundary included."""
    extent = [Omega.support(e) for e in np.eye(Omega.dim)]
    return spectrum_from_indicator(Omega.dim, T, lambda X: Omega.contains(X, tol=1e-12), extent)


def spectrum_from_intervals(intervals, T) -> PeriodizedSpectrum:
    """1-D spectrum given as a union of closed intervals."""
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    if np.any(iv[:, 1] < iv[:, 0]):
        raise ValueError("intervals must have lo <= hi")

    def contains(X):
        x = X[:, 0]
        return np.any((x[:, None] >= iv[:, 0] - 1e-12) & (x[:, None] <= iv[:, 1] + 1e-12), axis=1)

    return spectrum_from_indicator(1, T, contains, [np.abs(iv).max()])


# -- sample configurations on the torus --------------------------------------


def _integer_ratio(x, name):
    r = round(x)
    if r < 1 or abs(x - r) > 1e-9 * max(1.0, abs(x)):
        raise ValueError(f"{name} must be a positive integer multiple")
    return int(r)


def cell_points(samples: PointSet, period) -> np.ndarray:
    """Sample points in ``[0, T)`` for a set compatible with period T.

    Periodic sets must have periods dividing T; universal and finite sets
    are cut to one cell and periodized.
    """
    d = samples.dim
    T = np.broadcast_to(np.asarray(period, dtype=float), (d,))
    if samples.kind == "lattice":
        for i in range(d):
            _integer_ratio(T[i] / samples.step[i], "period / lattice step")
    elif samples.kind == "periodized":
        for i in range(d):
            _integer_ratio(T[i] / samples.period[i], "period / sample period")
    elif samples.kind == "finite":
        P = samples.points
        if np.any(P < -1e-12) or np.any(P >= T + 1e-12):
            raise ValueError("finite samples must lie in one cell [0, T)")
        return P
    if samples.kind == "universal":
        return samples.materialize(np.zeros(d), T)
    P = samples.materialize(-samples.offset, T - samples.offset)
    return np.mod(P, T)


@dataclass
class FrameBounds:
    A: float
    B: float
    condition: float
    certified: bool = True
    precision: str = "double"
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"A": self.A, "B": self.B, "condition": self.condition, "certified": self.certified,
                "precision": self.precision}


def _make_bounds(lmin, lmax, vol, certified, precision, **meta):
    A, B = lmin / vol, lmax / vol
    return FrameBounds(A, B, B / A, certified, precision, dict(meta))


def frame_matrix(spec: PeriodizedSpectrum, points) -> np.ndarray:
    X = np.asarray(points, dtype=float).reshape(-1, spec.dim)
    phase = X @ (spec.frequencies / spec.period).T
    return np.exp(2j * np.pi * phase)


def export_frame_matrix(spec: PeriodizedSpectrum, samples: PointSet, path) -> tuple:
    """Write G row-major as little-endian complex128; returns its shape."""
    G = frame_matrix(spec, cell_points(samples, spec.period))
    np.ascontiguousarray(G, dtype="<c16").tofile(path)
    return G.shape


def _mp_extremes(spec, X, dps):
    mp.dps = dps
    K = spec.frequencies
    diffs = (K[None, :, :] - K[:, None, :]).reshape(-1, spec.dim)
    uniq, inv = np.unique(diffs, axis=0, return_inverse=True)
    lam = [[mp.mpf(float(v)) for v in row] for row in X]
    T = [mp.mpf(float(t)) for t in spec.period]
    sums = []
    for m in uniq.tolist():
        w = [2 * mi / Ti for mi, Ti in zip(m, T)]
        sums.append(mp.fsum(mp.expjpi(mp.fsum(wi * li for wi, li in zip(w, row))) for row in lam))
    n = len(K)
    M = mp.matrix(n, n)
    inv = np.asarray(inv).reshape(n, n)
    for i in range(n):
        for j in range(n):
            M[i, j] = sums[inv[i, j]]
    E = mp.eighe(M, eigvals_only=True)
    return min(E), max(E)


def frame_bounds(spec: PeriodizedSpectrum, samples) -> FrameBounds:
    """Frame bounds of the samples on the periodized model.

    ``samples`` is a PointSet or an array of points in one cell.  Poorly
    conditioned problems are redone in extended precision with increasing
    digits until two runs agree to relative 1e-9.
    """
    if isinstance(samples, PointSet) and samples.kind == "lattice":
        return _lattice_bounds(spec, samples)
    X = cell_points(samples, spec.period) if isinstance(samples, PointSet) else np.asarray(samples, float)
    X = X.reshape(-1, spec.dim)
    N, K = len(X), spec.size
    if N < K:
        raise NotSamplingSetError(f"{N} samples cannot control {K} frequencies")
    G = frame_matrix(spec, X)
    ev = np.linalg.eigvalsh(G.conj().T @ G)
    lmin, lmax = float(ev[0]), float(ev[-1])
    vol = spec.cell_volume
    if lmin > DOUBLE_RATIO * lmax:
        return _make_bounds(lmin, lmax, vol, True, "double", samples=N, frequencies=K)
    if K > MP_MAX_FREQS:
        if lmin / vol < A_FLOOR:
            raise NotSamplingSetError("lower bound below 1e-12 and too large to certify", lmin / vol, lmax / vol)
        return _make_bounds(lmin, lmax, vol, False, "double", samples=N, frequencies=K)
    prev = None
    dps = 30
    while dps <= MAX_DPS:
        lo, hi = _mp_extremes(spec, X, dps)
        if prev is not None and lo > 0 and abs(lo - prev[0]) <= REL_ACCURACY * abs(lo) and abs(hi - prev[1]) <= REL_ACCURACY * abs(hi):
            return _make_bounds(float(lo), float(hi), vol, True, f"mp{dps}", samples=N, frequencies=K)
        # a zero eigenvalue shows up as noise shrinking with the working precision
        if prev is not None and lo < mp.mpf(10) ** (-dps // 2):
            raise NotSamplingSetError("lower frame bound is zero", 0.0, float(hi) / vol)
        prev = (lo, hi)
        dps *= 2
    raise NotSamplingSetError("lower frame bound not resolved in extended precision", 0.0, lmax / vol)


def _lattice_bounds(spec, samples) -> FrameBounds:
    """Closed form for lattices: ``G* G = N C`` with C joining frequencies equal mod M."""
    M = np.array([_integer_ratio(t / h, "period / lattice step") for t, h in zip(spec.period, samples.step)])
    N = int(np.prod(M))
    if N < spec.size:
        raise NotSamplingSetError(f"{N} samples cannot control {spec.size} frequencies")
    _, counts = np.unique(np.mod(spec.frequencies, M), axis=0, return_counts=True)
    vol = spec.cell_volume
    if counts.max() > 1:
        raise NotSamplingSetError("frequencies alias on the lattice", 0.0, N * counts.max() / vol)
    return FrameBounds(N / vol, N / vol, 1.0, True, "exact", {"samples": N, "frequencies": spec.size})


def product_bounds(fx: FrameBounds, fy: FrameBounds) -> FrameBounds:
    """Bounds of a product set for a product spectrum: eigenvalues multiply."""
    A, B = fx.A * fy.A, fx.B * fy.B
    return FrameBounds(A, B, B / A, fx.certified and fy.certified, f"{fx.precision}x{fy.precision}")


# -- universal sets and gaps --------------------------------------------------


def universal_set_1d(eta: float) -> PointSet:
    """``{(n + frac(sqrt(2) n)) / eta : n in Z}``, density eta."""
    return PointSet(1, "universal", eta=eta)


@dataclass
class GapReport:
    empirical_gap: float
    bound: float | None
    window: float
    witness: np.ndarray | None = None


def max_gap(samples: PointSet, window_halfwidth: float, grid_step: float, center=None, bound=None) -> GapReport:
    """Largest half-side of an empty cube centered on the search grid."""
    if not grid_step > 0:
        raise ValueError("grid_step must be positive")
    d = samples.dim
    c = np.zeros(d) if center is None else np.broadcast_to(np.asarray(center, float), (d,))
    w = float(window_halfwidth)
    m = int(math.floor(w / grid_step + 1e-9))
    ticks = np.arange(-m, m + 1) * grid_step
    G = np.stack(np.meshgrid(*[ticks] * d, indexing="ij"), axis=-1).reshape(-1, d) + c
    P = samples.materialize(c - 2 * w - 1, c + 2 * w + 1)
    if len(P) == 0:
        return GapReport(w, bound, w, c)
    dist, _ = cKDTree(P).query(G, k=1, p=np.inf, distance_upper_bound=w)
    dist = np.minimum(dist, w)
    i = int(np.argmax(dist))
    return GapReport(float(dist[i]), bound, w, G[i])


def gap_bound_cube(d: int, A: float, B: float) -> float:
    """Side parameter R every stable sampling set of the unit cube spectrum meets."""
    if not (A > 0 and B >= A):
        raise ValueError("frame bounds must satisfy 0 < A <= B")
    r = B / A
    R1 = 0.5 + (2 * d / math.pi**2) * r * (math.pi**2 / 4) ** d
    R2 = 0.5 + d * math.pi ** (2 * d - 2) / 2 ** (2 * d - 1) * r
    assert abs(R1 - R2) <= 1e-12 * R1, (R1, R2)
    return R1


def gap_bound_general(C: float, surface: float, volume: float, A: float, B: float) -> float:
    """``C * B * surface / (A * volume)`` with a caller-chosen constant."""
    if min(C, surface, volume, A, B) <= 0:
        raise ValueError("all arguments must be positive")
    return C * B * surface / (A * volume)


# -- sections -----------------------------------------------------------------


def section_spectrum(Omega: ConvexBody, q, t: float, T) -> PeriodizedSpectrum | None:
    """Periodized section ``{xi in q-perp : xi + t q in Omega}`` in perp-basis coordinates."""
    d = Omega.dim
    q = as_direction(q, d)
    sec = section_at_height(Omega, q, t)
    if sec.measure <= 0 or len(sec.polygon) == 0:
        return None
    if np.allclose(q, np.eye(d)[-1]):
        # keep the samples' own axes for sections along the last axis
        poly = sec.embed()[:, :-1]
    else:
        poly = np.asarray(sec.polygon, dtype=float).reshape(-1, d - 1)
    if d == 2:
        lo, hi = poly[:, 0].min(), poly[:, 0].max()
        try:
            return spectrum_from_intervals([[lo, hi]], T)
        except ValueError:
            return None
    hull = ConvexHull(poly)
    Aeq, beq = hull.equations[:, :-1], -hull.equations[:, -1]
    extent = np.abs(poly).max(axis=0)
    try:
        return spectrum_from_indicator(2, T, lambda X: np.all(X @ Aeq.T <= beq + 1e-12, axis=1), extent)
    except ValueError:
        return None


@dataclass
class SectionSweep:
    heights: list
    status: list  # "ok", "empty" or "not_sampling" per height
    bounds: list  # FrameBounds or None per height
    envelope: FrameBounds | None

    def rows(self):
        for t, s, b in zip(self.heights, self.status, self.bounds):
            yield {"height": t, "status": s, "A": None if b is None else b.A, "B": None if b is None else b.B}


def per_section_bounds(Omega: ConvexBody, Lambda: PointSet, heights, T, direction=None) -> SectionSweep:
    """Frame bounds of Lambda for every section of Omega along a direction (default last axis)."""
    d = Omega.dim
    if Lambda.dim != d - 1:
        raise ValueError("Lambda must have dimension dim(Omega) - 1")
    q = np.eye(d)[-1] if direction is None else as_direction(direction, d)
    status, bounds = [], []
    for t in heights:
        spec = section_spectrum(Omega, q, float(t), T)
        if spec is None:
            status.append("empty")
            bounds.append(None)
            continue
        try:
            bounds.append(frame_bounds(spec, Lambda))
            status.append("ok")
        except NotSamplingSetError:
            bounds.append(None)
            status.append("not_sampling")
    ok = [b for b in bounds if b is not None]
    envelope = None
    if ok and "not_sampling" not in status:
        A = min(b.A for b in ok)
        B = max(b.B for b in ok)
        envelope = FrameBounds(A, B, B / A, all(b.certified for b in ok), "envelope")
    return SectionSweep([float(t) for t in heights], status, bounds, envelope)


def product_frame_check(Omega: ConvexBody, Lambda: PointSet, Gamma_step: float, T) -> tuple:
    """Full bounds of ``Lambda x Gamma_step Z`` and the per-section envelope.

    Sections are taken along the second axis at every frequency height
    ``k_y / T`` of the periodized spectrum.
    """
    if Omega.dim != 2 or Lambda.dim != 1:
        raise ValueError("product check needs a planar spectrum and a 1-D Lambda")
    spec = periodize(Omega, T)
    lam = cell_points(Lambda, spec.period[0])[:, 0]
    gam = cell_points(PointSet(1, "lattice", step=Gamma_step), spec.period[1])[:, 0]
    X = np.stack(np.meshgrid(lam, gam, indexing="ij"), axis=-1).reshape(-1, 2)
    full = frame_bounds(spec, X)
    heights = np.unique(spec.frequencies[:, 1]) / spec.period[1]
    sweep = per_section_bounds(Omega, Lambda, heights, spec.period[0])
    return full, sweep.envelope
