"""Trajectory sets, arc length in windows, path density, and connectors.

Infinite sets are stored by their parameters; ``segments_in_box``
materializes only the part near a window.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .convex_geometry import ConvexBody, as_direction, perp_basis

WINDOWS = ("ball", "cube")
SQRT2 = math.sqrt(2.0)


# -- point sets ---------------------------------------------------------------


def _per_axis(value, dim):
    arr = np.broadcast_to(np.asarray(value, dtype=float), (dim,)).copy()
    return arr


@dataclass(eq=False)
class PointSet:
    """Finite or infinite point configuration.

    kinds: ``finite`` (explicit points), ``lattice`` (``step * Z^d``),
    ``periodized`` (``base + period * Z^d``), ``universal`` (the 1-D set
    ``(n + frac(sqrt(2) n)) / eta``).  Every kind accepts an ``offset``.
    """

    dim: int
    kind: str
    points: np.ndarray | None = None
    step: np.ndarray | None = None
    base: np.ndarray | None = None
    period: np.ndarray | None = None
    eta: float | None = None
    offset: np.ndarray | None = None

    def __post_init__(self):
        d = self.dim
        self.offset = np.zeros(d) if self.offset is None else _per_axis(self.offset, d)
        if self.kind == "finite":
            self.points = np.asarray(self.points, dtype=float).reshape(-1, d)
        elif self.kind == "lattice":
            self.step = _per_axis(self.step, d)
            if not np.all(self.step > 0):
                raise ValueError("lattice step must be positive")
        elif self.kind == "periodized":
            self.period = _per_axis(self.period, d)
            if not np.all(self.period > 0):
                raise ValueError("period must be positive")
            self.base = np.asarray(self.base, dtype=float).reshape(-1, d)
            if len(self.base) == 0:
                raise ValueError("periodized set needs at least one base point")
            if np.any(self.base < 0) or np.any(self.base >= self.period):
                raise ValueError("base points must lie in the fundamental cell [0, period)")
        elif self.kind == "universal":
            if d != 1:
                raise ValueError("the universal set is one-dimensional")
            if not (self.eta and self.eta > 0):
                raise ValueError("eta must be positive")
        else:
            raise ValueError(f"unknown point-set kind {self.kind!r}")

    @property
    def is_periodic(self) -> bool:
        return self.kind in ("lattice", "periodized")

    def materialize(self, lo, hi) -> np.ndarray:
        """Points in the half-open box ``[lo, hi)``."""
        d = self.dim
        lo = _per_axis(lo, d)
        hi = _per_axis(hi, d)
        if self.kind == "finite":
            P = self.points
            m = np.all((P >= lo) & (P < hi), axis=1)
            return P[m]
        lo_s, hi_s = lo - self.offset, hi - self.offset
        if self.kind == "universal":
            n = np.arange(math.floor(lo_s[0] * self.eta) - 2, math.ceil(hi_s[0] * self.eta) + 3)
            x = (n + np.mod(SQRT2 * n, 1.0)) / self.eta
            x = x[(x >= lo_s[0]) & (x < hi_s[0])]
            return (x + self.offset[0])[:, None]
        if self.kind == "lattice":
            axes = [
                np.arange(math.ceil(lo_s[i] / self.step[i] - 1e-12), math.ceil(hi_s[i] / self.step[i] - 1e-12))
                * self.step[i]
                for i in range(d)
            ]
            P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        else:
            ranges = [
                np.arange(math.floor(lo_s[i] / self.period[i]) - 1, math.ceil(hi_s[i] / self.period[i]) + 1)
                for i in range(d)
            ]
            cells = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, d) * self.period
            P = (cells[:, None, :] + self.base[None, :, :]).reshape(-1, d)
            P = P[np.all((P >= lo_s - 1e-12) & (P < hi_s - 1e-12), axis=1)]
        P = P + self.offset
        return P[np.all((P >= lo - 1e-12) & (P < hi - 1e-12), axis=1)]

    def density(self) -> float:
        """Exact Beurling density for periodic and universal sets."""
        if self.kind == "lattice":
            return float(1.0 / np.prod(self.step))
        if self.kind == "periodized":
            return float(len(self.base) / np.prod(self.period))
        if self.kind == "universal":
            return float(self.eta)
        raise ValueError("a finite point set has no Beurling density")

    def separation(self, window: float = 50.0) -> float:
        """Minimum distance between distinct points (exact for periodic sets)."""
        if self.kind == "lattice":
            return float(self.step.min())
        if self.kind == "universal":
            # consecutive gaps are (1 + {sqrt2(n+1)} - {sqrt2 n}) / eta, i.e. (sqrt2 - 1)/eta or sqrt2/eta
            return (SQRT2 - 1.0) / self.eta
        if self.kind == "periodized":
            P = self.materialize(self.offset - self.period, self.offset + 2 * self.period)
        else:
            P = self.points
        if len(P) < 2:
            return math.inf
        d, _ = cKDTree(P).query(P, k=2)
        return float(d[:, 1].min())

    def covering_bound(self, window: float = 20.0) -> int:
        """Upper bound on the covering constant: max_p #(points in Q_1(p))."""
        if self.kind == "periodized":
            lo = self.offset - self.period - 1
            hi = self.offset + 2 * self.period + 1
        else:
            lo, hi = -window * np.ones(self.dim), window * np.ones(self.dim)
        P = self.materialize(lo, hi)
        if len(P) == 0:
            return 0
        tree = cKDTree(P)
        return int(max(len(v) for v in tree.query_ball_point(P, r=1.0, p=np.inf)))

    def translated(self, v) -> "PointSet":
        v = _per_axis(v, self.dim)
        if self.kind == "finite":
            return PointSet(self.dim, "finite", points=self.points + v)
        return PointSet(
            self.dim, self.kind, step=self.step, base=self.base, period=self.period,
            eta=self.eta, offset=self.offset + v,
        )

    def scaled(self, s: float) -> "PointSet":
        if self.kind == "finite":
            return PointSet(self.dim, "finite", points=self.points * s)
        return PointSet(
            self.dim, self.kind,
            step=None if self.step is None else self.step * s,
            base=None if self.base is None else self.base * s,
            period=None if self.period is None else self.period * s,
            eta=None if self.eta is None else self.eta / s,
            offset=self.offset * s,
        )

    def to_dict(self) -> dict:
        doc = {"kind": self.kind, "dim": self.dim, "offset": self.offset.tolist()}
        if self.kind == "finite":
            doc["points"] = self.points.tolist()
        elif self.kind == "lattice":
            doc["step"] = self.step.tolist()
        elif self.kind == "periodized":
            doc["base"] = self.base.tolist()
            doc["period"] = self.period.tolist()
        else:
            doc["eta"] = self.eta
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "PointSet":
        kw = {k: doc[k] for k in ("points", "step", "base", "period", "eta", "offset") if k in doc}
        return cls(int(doc["dim"]), doc["kind"], **kw)


def lattice(dim: int, step, offset=None) -> PointSet:
    return PointSet(dim, "lattice", step=step, offset=offset)


def periodized(base, period, offset=None) -> PointSet:
    base = np.atleast_2d(np.asarray(base, dtype=float))
    return PointSet(base.shape[1], "periodized", base=base, period=period, offset=offset)


def finite(points) -> PointSet:
    P = np.atleast_2d(np.asarray(points, dtype=float))
    return PointSet(P.shape[1], "finite", points=P)


# -- trajectory sets ----------------------------------------------------------


@dataclass(eq=False)
class TrajectorySet:
    """Parallel lines over a cross-section, explicit polylines, or hairs(n).

    For ``parallel`` the cross-section is given in the coordinates of
    ``perp_basis(direction)``, so its points lie in the hyperplane q-perp.
    """

    dim: int
    kind: str
    direction: np.ndarray | None = None
    cross_section: PointSet | None = None
    curves: list = field(default_factory=list)
    n: int | None = None

    def __post_init__(self):
        if self.kind == "parallel":
            self.direction = as_direction(self.direction, self.dim)
            if self.cross_section is None or self.cross_section.dim != self.dim - 1:
                raise ValueError("parallel lines need a (dim-1)-dimensional cross-section")
        elif self.kind == "polylines":
            curves = []
            for c in self.curves:
                c = np.asarray(c, dtype=float)
                if c.ndim != 2 or c.shape[0] < 2 or c.shape[1] != self.dim:
                    raise ValueError("every polyline needs >= 2 vertices of the set dimension")
                if not np.all(np.isfinite(c)):
                    raise ValueError("polyline vertices must be finite")
                curves.append(c)
            self.curves = curves
        elif self.kind == "hairs":
            if self.dim != 2 or not (isinstance(self.n, (int, np.integer)) and self.n >= 1):
                raise ValueError("hairs(n) needs dim 2 and a positive integer n")
            self.n = int(self.n)
        else:
            raise ValueError(f"unknown trajectory kind {self.kind!r}")

    @property
    def basis(self) -> np.ndarray:
        return perp_basis(self.direction)

    def cross_section_points(self, lo, hi) -> np.ndarray:
        """Cross-section points (intrinsic coordinates) in a box."""
        return self.cross_section.materialize(lo, hi)

    def to_dict(self) -> dict:
        if self.kind == "parallel":
            return {
                "kind": "parallel", "dim": self.dim, "direction": self.direction.tolist(),
                "cross_section": self.cross_section.to_dict(),
            }
        if self.kind == "polylines":
            return {"kind": "polylines", "dim": self.dim, "curves": [c.tolist() for c in self.curves]}
        return {"kind": "hairs", "dim": 2, "n": self.n}

    @classmethod
    def from_dict(cls, doc: dict) -> "TrajectorySet":
        kind = doc["kind"]
        if kind == "parallel":
            return cls(int(doc["dim"]), kind, direction=doc["direction"],
                       cross_section=PointSet.from_dict(doc["cross_section"]))
        if kind == "polylines":
            return cls(int(doc["dim"]), kind, curves=doc["curves"])
        return cls(2, "hairs", n=int(doc["n"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TrajectorySet":
        return cls.from_dict(json.loads(text))


def parallel_lines(direction, cross_section: PointSet) -> TrajectorySet:
    q = as_direction(direction)
    return TrajectorySet(q.size, "parallel", direction=q, cross_section=cross_section)


def polylines(curves) -> TrajectorySet:
    curves = [np.asarray(c, dtype=float) for c in curves]
    return TrajectorySet(curves[0].shape[1], "polylines", curves=curves)


def uniform_set(dim: int, direction, spacing: float) -> TrajectorySet:
    if not spacing > 0:
        raise ValueError("spacing must be positive")
    return parallel_lines(direction, lattice(dim - 1, spacing))


def hairs(n: int) -> TrajectorySet:
    """Vertical lines ``nZ x R`` plus horizontal hairs ``(nZ + [0, 1/n]) x Z``."""
    return TrajectorySet(2, "hairs", n=n)


def hair_sampling_set(n: int) -> PointSet:
    """``Gamma_n x Z`` with ``Gamma_n = nZ + F_n``, ``F_n`` 2n equispaced points.

    ``F_n = {i / (2 n^2) : 0 <= i < 2n}`` lies in ``[0, 1/n)``; the half-open
    spacing keeps ``Gamma_1 = Z/2`` separated.
    """
    F = np.arange(2 * n) / (2.0 * n * n)
    base = np.column_stack([F, np.zeros_like(F)])
    return periodized(base, [float(n), 1.0])


def hair_sampling_factor(n: int) -> PointSet:
    F = np.arange(2 * n) / (2.0 * n * n)
    return periodized(F[:, None], [float(n)])


def parse_trajectory(text: str, dim: int = 2) -> TrajectorySet:
    """CLI shorthand: ``hairs:4``, ``uniform:0.5`` or ``uniform:0.5:theta``."""
    parts = text.split(":")
    if parts[0] == "hairs" and len(parts) == 2:
        return hairs(int(parts[1]))
    if parts[0] == "uniform" and len(parts) in (2, 3):
        spacing = float(parts[1])
        if dim == 2:
            th = float(parts[2]) if len(parts) == 3 else math.pi / 2
            q = [math.cos(th), math.sin(th)]
        else:
            q = np.eye(dim)[-1]
        return uniform_set(dim, q, spacing)
    raise ValueError(f"cannot parse trajectory {text!r}; expected hairs:N or uniform:SPACING[:ANGLE]")


# -- window clipping ----------------------------------------------------------


def segments_in_box(P: TrajectorySet, lo, hi) -> np.ndarray:
    """Segments (m, 2, d) covering ``P ∩ [lo, hi]`` (they may stick out)."""
    d = P.dim
    lo = _per_axis(lo, d)
    hi = _per_axis(hi, d)
    if P.kind == "parallel":
        q, B = P.direction, P.basis
        corners = np.array(np.meshgrid(*[(lo[i], hi[i]) for i in range(d)], indexing="ij")).reshape(d, -1).T
        proj = corners @ B.T
        lam = P.cross_section_points(proj.min(axis=0) - 1e-9, proj.max(axis=0) + 1e-9)
        s = corners @ q
        s_lo, s_hi = s.min() - 1.0, s.max() + 1.0
        base = lam @ B
        return np.stack([base + s_lo * q, base + s_hi * q], axis=1)
    if P.kind == "polylines":
        segs = np.concatenate([np.stack([c[:-1], c[1:]], axis=1) for c in P.curves])
        smin = segs.min(axis=1)
        smax = segs.max(axis=1)
        keep = np.all((smax >= lo) & (smin <= hi), axis=1)
        return segs[keep]
    n = P.n
    j = np.arange(math.floor((lo[0] - 1.0 / n) / n), math.floor(hi[0] / n) + 1)
    x = n * j
    vx = x[(x >= lo[0]) & (x <= hi[0])]
    vert = np.stack(
        [np.column_stack([vx, np.full_like(vx, lo[1] - 1.0)]), np.column_stack([vx, np.full_like(vx, hi[1] + 1.0)])],
        axis=1,
    )
    k = np.arange(math.ceil(lo[1]), math.floor(hi[1]) + 1, dtype=float)
    if n == 1:
        # the hairs join up into full horizontal lines
        horiz = np.stack(
            [np.column_stack([np.full_like(k, lo[0] - 1.0), k]), np.column_stack([np.full_like(k, hi[0] + 1.0), k])],
            axis=1,
        )
    else:
        X, K = np.meshgrid(x, k, indexing="ij")
        X, K = X.ravel(), K.ravel()
        horiz = np.stack([np.column_stack([X, K]), np.column_stack([X + 1.0 / n, K])], axis=1)
    return np.concatenate([vert.reshape(-1, 2, 2), horiz.reshape(-1, 2, 2)])


def clip_segments(segs: np.ndarray, center, radius: float, window: str = "ball") -> np.ndarray:
    """Clip segments to a ball or axis-aligned cube; returns (m, 2, d), dropping misses.

    Segments that only touch the window keep a zero-length piece.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {WINDOWS}")
    c = np.asarray(center, dtype=float)
    if len(segs) == 0:
        return segs
    if segs.shape[2] != c.size:
        raise ValueError("dimension mismatch between trajectory set and window center")
    p0 = segs[:, 0]
    dv = segs[:, 1] - segs[:, 0]
    if window == "ball":
        w = p0 - c
        a2 = np.einsum("ij,ij->i", dv, dv)
        b = np.einsum("ij,ij->i", w, dv)
        cc = np.einsum("ij,ij->i", w, w) - radius**2
        with np.errstate(invalid="ignore", divide="ignore"):
            disc = b * b - a2 * cc
            sq = np.sqrt(np.maximum(disc, 0.0))
            u0 = np.where(a2 > 0, (-b - sq) / a2, 0.0)
            u1 = np.where(a2 > 0, (-b + sq) / a2, 0.0)
        hit = np.where(a2 > 0, disc >= 0, cc <= 0)
    else:
        u0 = np.zeros(len(segs))
        u1 = np.ones(len(segs))
        hit = np.ones(len(segs), dtype=bool)
        for i in range(c.size):
            di = dv[:, i]
            lo_i = c[i] - radius - p0[:, i]
            hi_i = c[i] + radius - p0[:, i]
            flat = np.abs(di) < 1e-300
            with np.errstate(invalid="ignore", divide="ignore"):
                t1 = np.where(flat, -np.inf, lo_i / di)
                t2 = np.where(flat, np.inf, hi_i / di)
            u0 = np.maximum(u0, np.minimum(t1, t2))
            u1 = np.minimum(u1, np.maximum(t1, t2))
            hit &= ~flat | ((lo_i <= 0) & (hi_i >= 0))
    u0 = np.maximum(u0, 0.0)
    u1 = np.minimum(u1, 1.0)
    hit &= u1 >= u0
    out = np.stack([p0 + u0[:, None] * dv, p0 + u1[:, None] * dv], axis=1)
    return out[hit]


def _window_box(center, radius, dim):
    c = np.asarray(center, dtype=float).ravel()
    if c.size != dim:
        raise ValueError("dimension mismatch between trajectory set and window center")
    return c - radius, c + radius


def window_pieces(P: TrajectorySet, center, radius: float, window: str = "ball") -> np.ndarray:
    lo, hi = _window_box(center, radius, P.dim)
    return clip_segments(segments_in_box(P, lo, hi), center, radius, window)


def window_length(P: TrajectorySet, center, radius: float, window: str = "ball") -> float:
    """Exact total arc length of P inside the window."""
    pieces = window_pieces(P, center, radius, window)
    if len(pieces) == 0:
        return 0.0
    return float(np.linalg.norm(pieces[:, 1] - pieces[:, 0], axis=1).sum())


def window_volume(dim: int, radius: float, window: str) -> float:
    if window == "cube":
        return (2 * radius) ** dim
    return {1: 2 * radius, 2: math.pi * radius**2, 3: 4 / 3 * math.pi * radius**3}[dim]


@dataclass
class DensityEstimate:
    lower: float
    upper: float
    radii: list
    window: str
    schedule: list = field(default_factory=list)  # (radius, min, max) per radius
    rows: list = field(default_factory=list)  # per-window rows for CSV output

    def csv_rows(self):
        yield ("radius", "center", "window_kind", "length", "density")
        for r in self.rows:
            yield (
                f"{r['radius']:.12g}", " ".join(f"{v:.12g}" for v in r["center"]), r["window"],
                f"{r['length']:.12g}", f"{r['density']:.12g}",
            )


def density_centers(dim: int, radius: float, count: int, seed: int, index: int = 0) -> np.ndarray:
    """The origin, 8 deterministic offsets, and ``count`` seeded random centers."""
    if dim == 2:
        ang = 2 * math.pi * np.arange(8) / 8 + 0.1
        det = 0.5 * radius * np.column_stack([np.cos(ang), np.sin(ang)])
    elif dim == 3:
        signs = np.array(np.meshgrid(*[(-1, 1)] * 3, indexing="ij")).reshape(3, -1).T
        det = 0.5 * radius * (signs + np.array([0.1, 0.2, 0.3])) / math.sqrt(3)
    else:
        det = 0.5 * radius * (np.arange(8)[:, None] / 4.0 - 1.0 + 0.07)
    rng = np.random.default_rng([seed, index])
    rand = rng.uniform(-radius, radius, size=(count, dim))
    return np.vstack([np.zeros((1, dim)), det, rand])


def path_density(
    P: TrajectorySet,
    radii,
    centers_per_radius: int = 8,
    window: str = "ball",
    seed: int = 0,
    centers=None,
) -> DensityEstimate:
    """Lower/upper path density estimated over windows of growing radius.

    ``lower``/``upper`` are the min/max of length per volume over the centers
    at the largest radius; the whole schedule is recorded.  ``centers``
    overrides the default center set (same centers at every radius).
    """
    radii = [float(r) for r in radii]
    if not radii:
        raise ValueError("empty radius list")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing")
    if centers_per_radius < 1:
        raise ValueError("centers_per_radius must be >= 1")
    schedule, rows = [], []
    for i, a in enumerate(radii):
        C = density_centers(P.dim, a, centers_per_radius, seed, i) if centers is None else np.asarray(centers, float)
        vol = window_volume(P.dim, a, window)
        dens = []
        for c in C:
            L = window_length(P, c, a, window)
            dens.append(L / vol)
            rows.append({"radius": a, "center": c.tolist(), "window": window, "length": L, "density": L / vol})
        schedule.append((a, min(dens), max(dens)))
    return DensityEstimate(schedule[-1][1], schedule[-1][2], radii, window, schedule, rows)


def parallel_cross_section_density(P: TrajectorySet) -> float:
    """Beurling density of the cross-section, exact from periodicity."""
    if P.kind != "parallel":
        raise ValueError("cross-section density is defined for parallel lines only")
    return P.cross_section.density()


def on_trajectories(P: TrajectorySet, points, tol: float = 1e-12) -> np.ndarray:
    """Exact membership test of points on the trajectory set."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if P.kind == "hairs":
        n = P.n
        jx = np.round(X[:, 0] / n) * n
        on_vertical = np.abs(X[:, 0] - jx) <= tol
        on_row = np.abs(X[:, 1] - np.round(X[:, 1])) <= tol
        u = X[:, 0] - np.floor(X[:, 0] / n + tol) * n
        on_hair = on_row & (u <= 1.0 / n + tol)
        return on_vertical | on_hair
    if P.kind == "parallel":
        lam = X @ P.basis.T
        out = np.zeros(len(X), dtype=bool)
        for i, l in enumerate(lam):
            near = P.cross_section_points(l - 1e-6, l + 1e-6)
            out[i] = len(near) > 0 and np.abs(near - l).max(axis=1).min() <= tol
        return out
    segs = segments_in_box(P, X.min(axis=0) - 1, X.max(axis=0) + 1)
    return _dist_to_segments(X, segs) <= tol


def _dist_to_segments(X, segs):
    a, ab = segs[:, 0], segs[:, 1] - segs[:, 0]
    L2 = np.einsum("ij,ij->i", ab, ab)
    best = np.full(len(X), np.inf)
    for i, x in enumerate(X):
        w = x - a
        u = np.clip(np.einsum("ij,ij->i", w, ab) / np.where(L2 > 0, L2, 1.0), 0, 1)
        best[i] = np.linalg.norm(w - u[:, None] * ab, axis=1).min()
    return best


# -- short paths --------------------------------------------------------------


@dataclass
class ShortPath:
    vertices: np.ndarray
    order: np.ndarray
    length: float
    constant: float  # length / (radius * n^((d-1)/d))


def _snake(points, idx, lo, width, axis, reverse):
    """Boustrophedon order: bands along ``axis``, recursing on lower axes."""
    if axis == 0 or len(idx) <= 1:
        o = idx[np.argsort(points[idx, 0], kind="stable")]
        return o[::-1] if reverse else o
    n_total = points.shape[0]
    k = max(1, int(math.ceil(n_total ** (1.0 / points.shape[1]) - 1e-9)))
    band = np.clip(np.floor((points[idx, axis] - lo[axis]) / (width / k)).astype(int), 0, k - 1)
    out = []
    bands = range(k - 1, -1, -1) if reverse else range(k)
    for jj, b in enumerate(bands):
        sub = idx[band == b]
        if len(sub):
            out.append(_snake(points, sub, lo, width, axis - 1, (jj % 2 == 1)))
    return np.concatenate(out) if out else idx[:0]


def short_path(points, radius: float, center=None) -> ShortPath:
    """Polyline through all points of a ball, by strip decomposition.

    d=1 sorts; d=2 uses ceil(sqrt n) horizontal strips in boustrophedon
    order; d=3 uses ceil(n^(1/3)) slabs each split into as many columns.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = X.shape
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    if n == 0:
        raise ValueError("need at least one point")
    if np.any(np.linalg.norm(X - c, axis=1) > radius * (1 + 1e-12) + 1e-12):
        raise ValueError("point outside the ball")
    lo = c - radius
    order = _snake(X, np.arange(n), lo, 2 * radius, d - 1, False)
    V = X[order]
    length = float(np.linalg.norm(np.diff(V, axis=0), axis=1).sum()) if n > 1 else 0.0
    const = length / (radius * n ** ((d - 1) / d))
    return ShortPath(V, order, length, const)


# -- condition C2 -------------------------------------------------------------


@dataclass
class C2Certificate:
    alpha: np.ndarray  # polyline vertices
    length: float
    window_length: float
    overhead: float
    verified: bool
    samples_checked: int = 0


def _polyline_length(V):
    return float(np.linalg.norm(np.diff(V, axis=0), axis=1).sum()) if len(V) > 1 else 0.0


def _zigzag(chords, q, c, B, a, hair_detours=None):
    """Join parallel chords by the a1, a1-, a2-, a2, a3, ... pattern.

    ``chords`` is (N, 2, d) with column 0 the upper end.  Upper ends are
    ordered by a short path through their projections onto the equatorial
    hyperplane.
    """
    N = len(chords)
    if N == 0:
        return np.zeros((0, c.size))
    proj = (chords[:, 0] - c) @ B.T
    if proj.shape[1] == 0:
        order = np.arange(N)
    else:
        rad = max(float(np.linalg.norm(proj, axis=1).max()), 1e-12)
        order = short_path(proj, rad).order
    out = []
    for i, j in enumerate(order):
        up, down = chords[j, 0], chords[j, 1]
        stops = [] if hair_detours is None else hair_detours.get(j, [])
        if i % 2 == 0:
            seq = [up] + [p for s in stops for p in s] + [down]
        else:
            seq = [down] + [p for s in reversed(stops) for p in s] + [up]
        out.extend(seq)
    return np.array(out)


def _parallel_chords(pieces, q):
    up = np.where(((pieces[:, 0] - pieces[:, 1]) @ q >= 0)[:, None], pieces[:, 0], pieces[:, 1])
    dn = np.where(((pieces[:, 0] - pieces[:, 1]) @ q >= 0)[:, None], pieces[:, 1], pieces[:, 0])
    return np.stack([up, dn], axis=1)


def _join(parts):
    parts = [p for p in parts if len(p)]
    return np.vstack(parts)


def c2_certificate(
    P: TrajectorySet,
    center,
    radius: float,
    sample_step: float = 1e-3,
    max_samples: int = 17,
) -> C2Certificate:
    """Build a single polyline containing ``P ∩ B_radius(center)``.

    Parallel chords (tangent points included as zero-length chords) are
    joined in the zig-zag pattern.  Hairs are traversed out and back from
    their attachment point, or from the nearest chord end when the base lies
    outside the window; anything left is joined by a short path.
    Containment is verified by sampling every piece and measuring its
    distance to the polyline.
    """
    if P.kind not in ("parallel", "hairs"):
        raise ValueError("certificates are built for parallel lines or hairs")
    if not radius > 1:
        raise ValueError("radius must exceed 1")
    c = np.asarray(center, dtype=float)
    a = float(radius)
    all_pieces = window_pieces(P, c, a, "ball")
    if P.kind == "parallel":
        alpha = _zigzag(_parallel_chords(all_pieces, P.direction), P.direction, c, P.basis, a)
    else:
        alpha = _hairs_alpha(P, c, a, all_pieces)
    L = _polyline_length(alpha)
    M = window_length(P, c, a, "ball")
    verified, checked = _verify_containment(all_pieces, alpha, sample_step, max_samples)
    cert = C2Certificate(alpha, L, M, L - M, verified, checked)
    if not verified:
        raise RuntimeError("containment verification failed for the C2 curve")
    return cert


def _hairs_alpha(P, c, a, pieces):
    """Curve for hairs(n): vertical zig-zag with out-and-back hair detours."""
    n = P.n
    q = np.array([0.0, 1.0])
    B = perp_basis(q)
    lens = np.linalg.norm(pieces[:, 1] - pieces[:, 0], axis=1)
    vertical = np.abs(pieces[:, 1, 0] - pieces[:, 0, 0]) < 1e-15
    vertical &= np.abs(pieces[:, 0, 0] / n - np.round(pieces[:, 0, 0] / n)) < 1e-12
    horiz = ~vertical & (lens > 1e-12)
    # tangent points enter as zero-length vertical chords unless already on a piece
    tangent = lens <= 1e-12
    long = pieces[~tangent]
    if tangent.any() and len(long):
        tangent[tangent] = _dist_to_segments(pieces[tangent, 0], long) > 1e-12
    vchords = _parallel_chords(pieces[(vertical & ~(lens <= 1e-12)) | tangent], q)
    if n == 1:
        # hairs form whole horizontal lines: two zig-zags joined by a segment
        hchords = _parallel_chords(pieces[horiz], np.array([1.0, 0.0]))
        e1 = np.array([1.0, 0.0])
        return _join([_zigzag(vchords, q, c, B, a), _zigzag(hchords, e1, c, perp_basis(e1), a)])
    hp = pieces[horiz]
    left = np.where((hp[:, 0, 0] <= hp[:, 1, 0])[:, None], hp[:, 0], hp[:, 1])
    right = np.where((hp[:, 0, 0] <= hp[:, 1, 0])[:, None], hp[:, 1], hp[:, 0])
    xs = vchords[:, 0, 0] if len(vchords) else np.zeros(0)
    span = np.abs(vchords[:, 0, 1] - vchords[:, 1, 1]) if len(vchords) else np.zeros(0)
    detours = {}
    stray = []
    for lp, rp in zip(left, right):
        j = np.nonzero((np.abs(xs - lp[0]) < 1e-12) & (span > 0))[0]
        if len(j) and vchords[j[0], 1, 1] - 1e-12 <= lp[1] <= vchords[j[0], 0, 1] + 1e-12:
            detours.setdefault(int(j[0]), []).append((lp[1], [lp, rp, lp]))
            continue
        # hair whose base lies outside the window: detour from the nearest end
        # of the chord on its base line, if that line meets the window
        base = n * np.floor(lp[0] / n + 1e-12)
        j = np.nonzero(np.abs(xs - base) < 1e-9)[0]
        if len(j):
            top, bottom = vchords[j[0], 0], vchords[j[0], 1]
            end = top if lp[1] >= 0.5 * (top[1] + bottom[1]) else bottom
            detours.setdefault(int(j[0]), []).append((lp[1], [end, lp, rp, lp, end]))
        else:
            stray.append((lp, rp))
    # detours along each chord ordered from the upper end downward
    hair_detours = {j: [s for _, s in sorted(v, key=lambda t: -t[0])] for j, v in detours.items()}
    main = _zigzag(vchords, q, c, B, a, hair_detours)
    if stray:
        S = np.array([s[0] for s in stray])
        order = short_path(S, a * (1 + 1e-9), c).order if len(S) > 1 else np.array([0])
        tour = np.array([p for i in order for p in stray[i]])
    else:
        tour = np.zeros((0, 2))
    return _join([main, tour])


def _verify_containment(pieces, alpha, step, max_samples, h=0.25, chunk=50_000):
    if len(pieces) == 0:
        return True, 0
    if len(alpha) == 1:
        alpha = np.vstack([alpha, alpha])
    A0, A1 = alpha[:-1], alpha[1:]
    seg_len = np.linalg.norm(A1 - A0, axis=1)
    k = np.maximum(1, np.ceil(seg_len / h).astype(int))
    rep = np.repeat(np.arange(len(A0)), k)
    pos = np.arange(len(rep)) - np.repeat(np.cumsum(k) - k, k)
    kk = k[rep]
    s0 = A0[rep] + (A1[rep] - A0[rep]) * (pos / kk)[:, None]
    s1 = A0[rep] + (A1[rep] - A0[rep]) * ((pos + 1) / kk)[:, None]
    tree = cKDTree((s0 + s1) / 2)
    plen = np.linalg.norm(pieces[:, 1] - pieces[:, 0], axis=1)
    ns = np.clip(np.ceil(plen / step).astype(int) + 1, 2, max_samples)
    ridx = np.repeat(np.arange(len(pieces)), ns)
    first = np.repeat(np.cumsum(ns) - ns, ns)
    u = (np.arange(len(ridx)) - first) / (ns[ridx] - 1)
    X = pieces[ridx, 0] + (pieces[ridx, 1] - pieces[ridx, 0]) * u[:, None]
    for lo in range(0, len(X), chunk):
        Xc = X[lo : lo + chunk]
        _, nb = tree.query(Xc, k=16, distance_upper_bound=h / 2 + 1e-9)
        valid = nb < len(s0)
        nbc = np.where(valid, nb, 0)
        a0 = s0[nbc]
        ab = s1[nbc] - a0
        L2 = np.einsum("mkd,mkd->mk", ab, ab)
        w = Xc[:, None, :] - a0
        t = np.clip(np.einsum("mkd,mkd->mk", w, ab) / np.where(L2 > 0, L2, 1.0), 0, 1)
        dist = np.where(valid, np.linalg.norm(w - t[..., None] * ab, axis=-1), np.inf).min(axis=1)
        # crowded neighbourhoods may hide the nearest piece beyond k: recheck exactly
        for r in np.nonzero(valid[:, -1] & (dist >= 1e-9))[0]:
            idx = np.asarray(tree.query_ball_point(Xc[r], h / 2 + 1e-9), dtype=int)
            dist[r] = _dist_to_segments(Xc[r : r + 1], np.stack([s0[idx], s1[idx]], axis=1))[0]
        if not np.all(dist < 1e-9):
            return False, int(len(X))
    return True, int(len(X))


# -- covering -----------------------------------------------------------------


@dataclass
class CoverResult:
    covered: bool
    witness: np.ndarray | None
    max_gauge: float
    grid_points: int


def _min_gauge_on_segments(E: ConvexBody, X, a, b, iters=64):
    lo = np.zeros(len(X))
    hi = np.ones(len(X))
    g = lambda u: E.gauge(X - (a + u[:, None] * (b - a)))
    c = hi - 0.6180339887498949 * (hi - lo)
    d = lo + 0.6180339887498949 * (hi - lo)
    fc, fd = g(c), g(d)
    for _ in range(iters):
        left = fc <= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        nc = hi - 0.6180339887498949 * (hi - lo)
        nd = lo + 0.6180339887498949 * (hi - lo)
        new_c = np.where(left, nc, d)
        new_d = np.where(left, c, nd)
        fc_new = np.where(left, g(new_c), fd)
        fd_new = np.where(left, fc, g(new_d))
        c, d, fc, fd = new_c, new_d, fc_new, fd_new
    return np.minimum.reduce([g(lo), g(hi), g((lo + hi) / 2), g(np.zeros(len(X))), g(np.ones(len(X)))])


def covering_check(
    P: TrajectorySet,
    E: ConvexBody,
    window_halfwidth: float,
    grid_step: float,
    center=None,
    chunk: int = 400_000,
) -> CoverResult:
    """Test ``P + E ⊇ window`` on a grid.

    The witness is the least covered grid point: largest gauge distance to
    P, ties (points out of reach of every segment) broken by Euclidean
    distance.
    """
    if grid_step > E.inradius / 4 + 1e-15:
        raise ValueError("grid pitch must be <= inradius(E)/4")
    d = P.dim
    c = np.zeros(d) if center is None else np.asarray(center, float)
    m = int(math.floor(window_halfwidth / grid_step + 1e-9))
    ticks = np.arange(-m, m + 1) * grid_step
    X = np.stack(np.meshgrid(*[ticks] * d, indexing="ij"), axis=-1).reshape(-1, d) + c
    R = E.circumradius
    segs = segments_in_box(P, c - window_halfwidth - R, c + window_halfwidth + R)
    best = np.full(len(X), np.inf)
    near = np.full(len(X), np.inf)
    if len(segs):
        a0, a1 = segs[:, 0], segs[:, 1]
        ab = a1 - a0
        L2 = np.einsum("ij,ij->i", ab, ab)
        per = max(1, chunk // max(1, len(segs)))
        for s in range(0, len(X), per):
            Xc = X[s : s + per]
            w = Xc[:, None, :] - a0[None]
            t = np.clip(np.einsum("mkd,kd->mk", w, ab) / np.where(L2 > 0, L2, 1.0), 0, 1)
            dist = np.linalg.norm(w - t[..., None] * ab[None], axis=-1)
            near[s : s + per] = dist.min(axis=1)
            ii, kk = np.nonzero(dist <= R + 1e-12)
            if len(ii):
                gv = _min_gauge_on_segments(E, Xc[ii], a0[kk], a1[kk])
                np.minimum.at(best[s : s + per], ii, gv)
    bad = np.nonzero(best > 1.0 + 1e-9)[0]
    finite_max = float(best.max()) if len(best) else 0.0
    if len(bad):
        worst = bad[np.lexsort((-near[bad], -best[bad]))[0]]
        return CoverResult(False, X[worst], finite_max, len(X))
    return CoverResult(True, None, finite_max, len(X))
