"""Centered symmetric convex bodies in dimensions 1-3.

Sections, projections (shadows), the maximal-shadow functional ``delta_E``,
dilations and outer approximations of Minkowski enlargements.  Polytopes
are handled exactly through their halfspace representation; balls through
closed forms.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull

SHAPES = ("ball", "cube", "cross", "polytope")
DEGENERATE = 1e-12
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """A centered, symmetric convex body.

    ``size`` is the radius (ball), half-width (cube) or scale (cross
    polytope ``{|x|_1 <= size}``).  Polytopes carry an explicit vertex list
    closed under negation.
    """

    dim: int
    shape: str
    size: float = 1.0
    vertices: np.ndarray | None = field(default=None, repr=False)
    approximate: bool = False

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dim}")
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.shape == "polytope":
            V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
            if V.shape[1] != self.dim:
                raise ValueError("vertex dimension does not match body dimension")
            if not np.all(np.isfinite(V)):
                raise ValueError("vertices must be finite")
            scale = max(np.abs(V).max(), 1.0)
            for v in V:
                if np.min(np.abs(V + v).max(axis=1)) > 1e-9 * scale:
                    raise ValueError("vertex list is not closed under negation")
            if np.linalg.matrix_rank(V, tol=1e-10 * scale) < self.dim:
                raise ValueError("vertices do not span the full dimension")
            object.__setattr__(self, "vertices", V)
        elif not self.size > 0:
            raise ValueError("size must be positive")

    # -- derived data -------------------------------------------------------

    @cached_property
    def vertex_array(self) -> np.ndarray:
        d, s = self.dim, self.size
        if self.shape == "cube":
            return np.array(list(itertools.product((-s, s), repeat=d)), dtype=float)
        if self.shape == "cross":
            E = np.eye(d) * s
            return np.vstack([E, -E])
        if self.shape == "polytope":
            if d == 1:
                m = np.abs(self.vertices).max()
                return np.array([[-m], [m]])
            hull = ConvexHull(self.vertices)
            return self.vertices[hull.vertices]
        raise ValueError("a ball has no vertices")

    @cached_property
    def halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        """Rows ``(a, b)`` with unit normals: body = {x : a.x <= b}."""
        d, s = self.dim, self.size
        if self.shape == "ball":
            raise ValueError("a ball has no finite halfspace representation")
        if self.shape == "cube":
            A = np.vstack([np.eye(d), -np.eye(d)])
            return A, np.full(2 * d, s)
        if self.shape == "cross":
            A = np.array(list(itertools.product((-1.0, 1.0), repeat=d))) / math.sqrt(d)
            return A, np.full(len(A), s / math.sqrt(d))
        if d == 1:
            m = np.abs(self.vertices).max()
            return np.array([[1.0], [-1.0]]), np.array([m, m])
        hull = ConvexHull(self.vertices)
        eq = hull.equations
        A, b = eq[:, :-1], -eq[:, -1]
        # triangulated facets repeat the same plane
        keys = np.round(np.hstack([A, b[:, None]]), 9)
        _, idx = np.unique(keys, axis=0, return_index=True)
        idx = np.sort(idx)
        return A[idx], b[idx]

    @cached_property
    def circumradius(self) -> float:
        if self.shape == "ball":
            return self.size
        return float(np.linalg.norm(self.vertex_array, axis=1).max())

    @cached_property
    def inradius(self) -> float:
        if self.shape == "ball":
            return self.size
        return float(self.halfspaces[1].min())

    @cached_property
    def volume(self) -> float:
        d, s = self.dim, self.size
        if self.shape == "ball":
            return {1: 2 * s, 2: math.pi * s**2, 3: 4 / 3 * math.pi * s**3}[d]
        if self.shape == "cube":
            return (2 * s) ** d
        if self.shape == "cross":
            return (2 * s) ** d / math.factorial(d)
        V = self.vertex_array
        if d == 1:
            return 2 * float(np.abs(V).max())
        if d == 2:
            return _polygon_area(_sort_ccw(V))
        hull = ConvexHull(V)
        # divergence theorem: signed tetrahedra against the origin
        tri = hull.points[hull.simplices]
        vol = np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])) / 6.0
        return float(np.abs(vol).sum())

    # -- pointwise queries --------------------------------------------------

    def gauge(self, x) -> np.ndarray:
        """Minkowski functional: the smallest s >= 0 with x in s*body."""
        x = np.asarray(x, dtype=float)
        if self.shape == "ball":
            return np.linalg.norm(x, axis=-1) / self.size
        if self.shape == "cube":
            return np.abs(x).max(axis=-1) / self.size
        if self.shape == "cross":
            return np.abs(x).sum(axis=-1) / self.size
        A, b = self.halfspaces
        return np.maximum((x @ A.T / b).max(axis=-1), 0.0)

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        return self.gauge(x) <= 1.0 + tol

    def support(self, u) -> float:
        u = np.asarray(u, dtype=float)
        if self.shape == "ball":
            return self.size * float(np.linalg.norm(u))
        return float((self.vertex_array @ u).max())

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        params = [] if self.shape == "polytope" else [self.size]
        verts = self.vertex_array.tolist() if self.shape != "ball" else []
        return {"dim": self.dim, "shape": self.shape, "params": params, "vertices": verts}

    @classmethod
    def from_dict(cls, doc: dict) -> "ConvexBody":
        shape = doc["shape"]
        if shape == "polytope":
            return cls(int(doc["dim"]), shape, vertices=np.asarray(doc["vertices"], dtype=float))
        return cls(int(doc["dim"]), shape, float(doc["params"][0]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ConvexBody":
        return cls.from_dict(json.loads(text))


def ball(dim: int, radius: float) -> ConvexBody:
    return ConvexBody(dim, "ball", radius)


def cube(dim: int, halfwidth: float) -> ConvexBody:
    return ConvexBody(dim, "cube", halfwidth)


def cross_polytope(dim: int, scale: float) -> ConvexBody:
    return ConvexBody(dim, "cross", scale)


def symmetric_polytope(vertices, approximate: bool = False) -> ConvexBody:
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    return ConvexBody(V.shape[1], "polytope", vertices=V, approximate=approximate)


def parse_body(text: str, dim: int) -> ConvexBody:
    """Parse ``"cube:0.5"``, ``"ball:1"``, ``"cross:1"`` (CLI shorthand)."""
    name, _, arg = text.partition(":")
    aliases = {"cube": "cube", "ball": "ball", "cross": "cross", "crosspolytope": "cross"}
    if name.lower() not in aliases or not arg:
        raise ValueError(f"cannot parse body {text!r}; expected e.g. cube:0.5")
    return ConvexBody(dim, aliases[name.lower()], float(arg))


# -- directions ---------------------------------------------------------------


def as_direction(q, dim: int | None = None) -> np.ndarray:
    q = np.asarray(q, dtype=float).ravel()
    if dim is not None and q.size != dim:
        raise ValueError(f"direction has dimension {q.size}, body has {dim}")
    n = np.linalg.norm(q)
    if not n > 0:
        raise ValueError("direction must be nonzero")
    return q / n


def perp_basis(q) -> np.ndarray:
    """Orthonormal rows spanning the hyperplane orthogonal to ``q``.

    Deterministic in ``q``, so sections at different heights share
    coordinates.
    """
    q = as_direction(q)
    d = q.size
    if d == 1:
        return np.zeros((0, 1))
    if d == 2:
        return np.array([[q[1], -q[0]]])
    e = np.zeros(3)
    e[np.argmin(np.abs(q))] = 1.0
    u = e - (e @ q) * q
    u /= np.linalg.norm(u)
    v = np.cross(q, u)
    return np.vstack([u, v])


def direction_grid(dim: int, resolution: float) -> np.ndarray:
    """Uniform grid on the half circle (d=2) or upper hemisphere (d=3)."""
    if not resolution > 0:
        raise ValueError("angular resolution must be positive")
    if dim == 2:
        theta = np.arange(int(math.ceil(math.pi / resolution))) * resolution
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if dim == 3:
        dirs = [np.array([0.0, 0.0, 1.0])]
        n_theta = int(math.ceil((math.pi / 2) / resolution))
        for i in range(1, n_theta + 1):
            th = min(i * resolution, math.pi / 2)
            n_phi = max(1, int(math.ceil(2 * math.pi * math.sin(th) / resolution)))
            phi = 2 * math.pi * np.arange(n_phi) / n_phi
            ring = np.column_stack(
                [math.sin(th) * np.cos(phi), math.sin(th) * np.sin(phi), np.full(n_phi, math.cos(th))]
            )
            dirs.append(ring)
        return np.vstack(dirs)
    raise ValueError("direction search needs dim 2 or 3")


def _angles_to_dir(dim, angles):
    if dim == 2:
        return np.array([math.cos(angles[0]), math.sin(angles[0])])
    th, ph = angles
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


def _dir_to_angles(q):
    if q.size == 2:
        return [math.atan2(q[1], q[0])]
    return [math.acos(max(-1.0, min(1.0, q[2]))), math.atan2(q[1], q[0])]


def _golden_max(f, lo, hi, iters=60):
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def _direction_search(fun, dim, resolution, maximize):
    sign = 1.0 if maximize else -1.0
    grid = direction_grid(dim, resolution)
    vals = np.array([sign * fun(q) for q in grid])
    i = int(np.argmax(vals))  # first index on ties
    best_q, best = grid[i], vals[i]
    angles = _dir_to_angles(best_q)
    for _ in range(1 if dim == 2 else 3):
        for j in range(len(angles)):
            def g(x, j=j):
                a = list(angles)
                a[j] = x
                return sign * fun(_angles_to_dir(dim, a))

            x, v = _golden_max(g, angles[j] - resolution, angles[j] + resolution)
            if v > best + 1e-13 * max(1.0, abs(best)):
                angles[j] = x
                best = v
                best_q = _angles_to_dir(dim, angles)
    return best_q, sign * best


# -- sections and projections -------------------------------------------------


@dataclass(eq=False)
class SectionResult:
    """Section ``body ∩ {<x, q> = t}``.

    ``polygon`` holds the section in the coordinates of ``basis`` (rows
    spanning q-perp): two endpoints for d=2, polygon vertices for d=3.
    """

    direction: np.ndarray
    height: float
    measure: float
    polygon: np.ndarray
    basis: np.ndarray

    def embed(self) -> np.ndarray:
        return self.height * self.direction + self.polygon @ self.basis


def _clip_convex(poly, c, r, tol=1e-10):
    """Clip a convex polygon (ccw vertex array) by the halfplane c.x <= r."""
    if len(poly) == 0:
        return poly
    s = poly @ c - r
    inside = s <= tol
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    out = []
    m = len(poly)
    for i in range(m):
        p, q = poly[i], poly[(i + 1) % m]
        sp, sq = s[i], s[(i + 1) % m]
        if sp <= tol:
            out.append(p)
        if (sp <= tol) != (sq <= tol):
            u = sp / (sp - sq)
            out.append(p + u * (q - p))
    return np.array(out) if out else poly[:0]


def _dedupe(poly, tol=1e-13):
    if len(poly) < 2:
        return poly
    keep = [poly[0]]
    for p in poly[1:]:
        if np.abs(p - keep[-1]).max() > tol:
            keep.append(p)
    if len(keep) > 1 and np.abs(keep[0] - keep[-1]).max() <= tol:
        keep.pop()
    return np.array(keep)


def _polygon_area(poly) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def _sort_ccw(P):
    c = P.mean(axis=0)
    ang = np.arctan2(P[:, 1] - c[1], P[:, 0] - c[0])
    return P[np.argsort(ang)]


def section_at_height(body: ConvexBody, q, t: float, ball_samples: int = 256) -> SectionResult:
    """(d-1)-measure of ``body ∩ {x : <x, q> = t}``."""
    if body.dim < 2:
        raise ValueError("sections need dim >= 2")
    q = as_direction(q, body.dim)
    B = perp_basis(q)
    t = float(t)
    if body.shape == "ball":
        rho2 = body.size**2 - t**2
        if rho2 < 0:
            return SectionResult(q, t, 0.0, np.zeros((0, body.dim - 1)), B)
        rho = math.sqrt(rho2)
        if body.dim == 2:
            return SectionResult(q, t, 2 * rho, np.array([[-rho], [rho]]), B)
        phi = 2 * math.pi * np.arange(ball_samples) / ball_samples
        poly = rho * np.column_stack([np.cos(phi), np.sin(phi)])
        meas = math.pi * rho2
        return SectionResult(q, t, meas if meas >= DEGENERATE else 0.0, poly, B)

    A, b = body.halfspaces
    c = A @ B.T  # in-plane normals
    r = b - t * (A @ q)
    if body.dim == 2:
        c = c[:, 0]
        lo, hi = -np.inf, np.inf
        for ci, ri in zip(c, r):
            if ci > 1e-15:
                hi = min(hi, ri / ci)
            elif ci < -1e-15:
                lo = max(lo, ri / ci)
            elif ri < -1e-12:
                lo, hi = 1.0, 0.0
        if hi < lo - 1e-12:
            return SectionResult(q, t, 0.0, np.zeros((0, 1)), B)
        hi = max(hi, lo)
        meas = hi - lo
        return SectionResult(q, t, meas if meas >= DEGENERATE else 0.0, np.array([[lo], [hi]]), B)

    R = body.circumradius + 1.0
    poly = np.array([[-R, -R], [R, -R], [R, R], [-R, R]])
    for ci, ri in zip(c, r):
        poly = _clip_convex(poly, ci, ri)
        if len(poly) == 0:
            break
    poly = _dedupe(poly)
    meas = _polygon_area(poly)
    return SectionResult(q, t, meas if meas >= DEGENERATE else 0.0, poly, B)


def projection_measure(body: ConvexBody, q) -> float:
    """(d-1)-measure of the orthogonal shadow of ``body`` on q-perp."""
    if body.dim < 2:
        raise ValueError("projections need dim >= 2")
    q = as_direction(q, body.dim)
    if body.shape == "ball":
        return 2 * body.size if body.dim == 2 else math.pi * body.size**2
    B = perp_basis(q)
    P = body.vertex_array @ B.T
    if body.dim == 2:
        return float(P.max() - P.min())
    return float(ConvexHull(P).volume)


def delta_E(body: ConvexBody, angular_resolution: float = 0.01) -> tuple[np.ndarray, float]:
    """Largest shadow over all directions: grid search plus golden refinement.

    The returned value is attained at the returned direction, hence a lower
    bound on the supremum.
    """
    return _direction_search(lambda q: projection_measure(body, q), body.dim, angular_resolution, True)


def min_central_section(body: ConvexBody, angular_resolution: float = 0.01) -> tuple[np.ndarray, float]:
    return _direction_search(
        lambda q: section_at_height(body, q, 0.0).measure, body.dim, angular_resolution, False
    )


# -- constructions ------------------------------------------------------------


def dilate(body: ConvexBody, factor: float) -> ConvexBody:
    if not factor > 0:
        raise ValueError("dilation factor must be positive")
    if body.shape == "polytope":
        return ConvexBody(body.dim, "polytope", vertices=body.vertices * factor, approximate=body.approximate)
    return ConvexBody(body.dim, body.shape, body.size * factor, approximate=body.approximate)


def _sphere_points(dim, resolution):
    if dim == 2:
        phi = 2 * math.pi * np.arange(resolution) / resolution
        return np.column_stack([np.cos(phi), np.sin(phi)])
    m = max(resolution, 8)
    i = np.arange(m) + 0.5
    z = 1 - 2 * i / m
    phi = math.pi * (1 + math.sqrt(5)) * i
    r = np.sqrt(1 - z**2)
    P = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return np.vstack([P, -P])


def minkowski_enlarge(body: ConvexBody, epsilon: float, resolution: int = 64) -> ConvexBody:
    """Outer polytope approximation of ``body + Ball(epsilon)``.

    Balls and intervals are enlarged exactly; otherwise the vertices are
    replicated over a polytope circumscribing the epsilon-ball and hulled,
    and the result is flagged ``approximate``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if body.shape == "ball":
        return ConvexBody(body.dim, "ball", body.size + epsilon)
    if body.dim == 1:
        return ConvexBody(1, "cube", body.circumradius + epsilon)
    D = _sphere_points(body.dim, resolution)
    inr = -ConvexHull(D).equations[:, -1].max() if body.dim == 3 else math.cos(math.pi / resolution)
    D = D * (epsilon / inr)
    S = (body.vertex_array[:, None, :] + D[None, :, :]).reshape(-1, body.dim)
    V = S[ConvexHull(S).vertices]
    V = np.unique(np.round(np.vstack([V, -V]), 13), axis=0)
    return ConvexBody(body.dim, "polytope", vertices=V, approximate=True)


def _dist_to_section(points, sec: SectionResult):
    """Euclidean distance (within q-perp) from points to a section."""
    poly = sec.polygon
    if len(poly) == 0:
        return np.full(len(points), np.inf)
    if poly.shape[1] == 1:
        lo, hi = poly[:, 0].min(), poly[:, 0].max()
        x = points[:, 0]
        return np.maximum(0.0, np.maximum(lo - x, x - hi))
    return _dist_to_convex_polygon(points, poly)


def _dist_to_convex_polygon(X, poly):
    m = len(poly)
    if m == 1:
        return np.linalg.norm(X - poly[0], axis=1)
    best = np.full(len(X), np.inf)
    for i in range(m if m > 2 else 1):
        a, b = poly[i], poly[(i + 1) % m]
        ab = b - a
        L2 = ab @ ab
        u = np.clip(((X - a) @ ab) / L2, 0, 1) if L2 > 0 else np.zeros(len(X))
        best = np.minimum(best, np.linalg.norm(X - (a + u[:, None] * ab), axis=1))
    if m >= 3 and _polygon_area(poly) > DEGENERATE:
        P = _sort_ccw(poly)
        inside = np.ones(len(X), dtype=bool)
        for i in range(len(P)):
            a, b = P[i], P[(i + 1) % len(P)]
            e = b - a
            inside &= (e[0] * (X[:, 1] - a[1]) - e[1] * (X[:, 0] - a[0])) >= -1e-12
        best[inside] = 0.0
    return best


def section_continuity_delta(
    body: ConvexBody,
    q,
    t: float,
    epsilon: float,
    height_grid: float,
    candidates=None,
) -> float:
    """Largest candidate delta with Omega_s ⊆ Omega_t + B_eps for grid heights |s - t| < delta.

    Inclusion is tested on the vertices (boundary samples for balls) of
    each nearby section; for convex sections this is exact.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not height_grid > 0:
        raise ValueError("height grid must be positive")
    q = as_direction(q, body.dim)
    if candidates is None:
        candidates = body.circumradius * 2.0 ** -np.arange(25)
    candidates = sorted((float(c) for c in candidates), reverse=True)
    ref = section_at_height(body, q, t)
    jmax = int(math.ceil(candidates[0] / height_grid))
    js = np.arange(-jmax, jmax + 1)
    ok_by_offset = {}
    for j in js:
        sec = section_at_height(body, q, t + j * height_grid)
        if len(sec.polygon) == 0:
            ok_by_offset[j] = True
            continue
        dist = _dist_to_section(sec.polygon, ref)
        ok_by_offset[j] = bool(np.all(dist <= epsilon + 1e-12))
    for delta in candidates:
        inside = [j for j in js if abs(j * height_grid) < delta]
        if all(ok_by_offset[j] for j in inside):
            return delta
    raise ValueError("no candidate delta verifies the section inclusion; body invalid?")
