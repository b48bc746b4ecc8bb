"""Domains, boundary distance, curvature and boundary-graded meshes.

Every domain is reduced to one coordinate: ``x`` on an interval, the radius
``r`` on balls and annuli. The Laplacian acts as ``u'' + (N-1)/r u'``.

Meshes store the distance to the boundary and the cell widths directly
(computed from distances, not from node differences), so faces may sit far
closer to the boundary than the floating-point spacing of the node
coordinates allows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainViolation, MeshError

KINDS = ("interval", "ball", "annulus")


@dataclass(frozen=True)
class DomainSpec:
    """Geometry of the domain in its reduced coordinate.

    Use the constructors :func:`Interval`, :func:`Ball` and :func:`Annulus`.
    ``lo``/``hi`` are the interval ends, ``0``/``R`` for a ball, or the two
    radii of an annulus.
    """

    kind: str
    dim: int
    lo: float
    hi: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainViolation(f"unknown domain kind {self.kind!r}")
        if self.kind == "interval":
            if self.dim != 1 or not self.lo < self.hi:
                raise DomainViolation("Interval requires a < b")
        elif self.kind == "ball":
            if self.dim < 1 or self.lo != 0.0 or not self.hi > 0:
                raise DomainViolation("Ball requires N >= 1 and R > 0")
        else:
            if self.dim < 2 or not 0 < self.lo < self.hi:
                raise DomainViolation("Annulus requires N >= 2 and 0 < R_in < R_out")

    # -- basic metrics -------------------------------------------------
    @property
    def radial(self) -> bool:
        return self.kind != "interval"

    @property
    def inradius(self) -> float:
        """Largest value of the distance function."""
        if self.kind == "ball":
            return self.hi
        return 0.5 * (self.hi - self.lo)

    @property
    def ridge(self) -> float:
        """Reduced coordinate of the set where the distance is not smooth."""
        if self.kind == "ball":
            return 0.0
        return 0.5 * (self.lo + self.hi)

    @property
    def faces(self) -> tuple[str, ...]:
        return {"interval": ("left", "right"), "ball": ("sphere",),
                "annulus": ("inner", "outer")}[self.kind]

    def face_point(self, face: str) -> float:
        """Boundary coordinate of a face; distances on that face grow inward."""
        i = self._face_index(face)
        if self.kind == "ball":
            return self.hi
        return self.lo if i == 0 else self.hi

    def _face_index(self, face: str) -> int:
        try:
            return self.faces.index(face)
        except ValueError:
            raise DomainViolation(f"{self.kind} has no boundary component {face!r}") from None

    def from_face(self, face: str, delta):
        """Reduced coordinate at distance ``delta`` from ``face``."""
        i = self._face_index(face)
        delta = np.asarray(delta, dtype=float)
        if self.kind == "ball" or i == 1:
            return self.face_point(face) - delta
        return self.lo + delta

    def nearest_face(self, x) -> tuple[str, float]:
        """Nearest-point projection: the closest face and the distance to it."""
        d = distance(self, x)
        if self.kind == "ball":
            return "sphere", d
        if x - self.lo <= self.hi - x:
            return self.faces[0], d
        return self.faces[1], d

    def to_dict(self) -> dict:
        if self.kind == "interval":
            return {"kind": "interval", "a": self.lo, "b": self.hi}
        if self.kind == "ball":
            return {"kind": "ball", "dimension": self.dim, "radius": self.hi}
        return {"kind": "annulus", "dimension": self.dim,
                "inner_radius": self.lo, "outer_radius": self.hi}

    @classmethod
    def from_dict(cls, data: dict) -> "DomainSpec":
        kind = data.get("kind")
        try:
            if kind == "interval":
                return Interval(float(data["a"]), float(data["b"]))
            if kind == "ball":
                return Ball(int(data["dimension"]), float(data["radius"]))
            if kind == "annulus":
                return Annulus(int(data["dimension"]), float(data["inner_radius"]),
                               float(data["outer_radius"]))
        except KeyError as exc:
            raise DomainViolation(f"domain.{exc.args[0]} missing") from None
        raise DomainViolation(f"domain.kind: unknown kind {kind!r}")


def Interval(a: float, b: float) -> DomainSpec:
    return DomainSpec("interval", 1, float(a), float(b))


def Ball(dimension: int, radius: float) -> DomainSpec:
    return DomainSpec("ball", int(dimension), 0.0, float(radius))


def Annulus(dimension: int, inner: float, outer: float) -> DomainSpec:
    return DomainSpec("annulus", int(dimension), float(inner), float(outer))


def distance(domain: DomainSpec, point):
    """Exact distance to the boundary at a reduced coordinate (scalar or array)."""
    x = np.asarray(point, dtype=float)
    tol = 1e-14 * max(1.0, abs(domain.hi))
    lo = 0.0 if domain.kind == "ball" else domain.lo
    if np.any(x < lo - tol) or np.any(x > domain.hi + tol):
        raise DomainViolation(f"point outside {domain.kind} [{lo}, {domain.hi}]")
    x = np.clip(x, lo, domain.hi)
    if domain.kind == "ball":
        d = domain.hi - x
    else:
        d = np.minimum(x - domain.lo, domain.hi - x)
    return float(d) if d.ndim == 0 else d


def mean_curvature(domain: DomainSpec, boundary_component: str) -> float:
    """Mean curvature of a boundary component, seen from inside the domain."""
    i = domain._face_index(boundary_component)
    if domain.kind == "interval":
        return 0.0
    if domain.kind == "ball":
        return 1.0 / domain.hi
    return -1.0 / domain.lo if i == 0 else 1.0 / domain.hi


def laplacian_of_distance(domain: DomainSpec, point):
    """Δδ away from the ridge: 0, -(N-1)/r, or ±(N-1)/r on an annulus."""
    x = np.asarray(point, dtype=float)
    if domain.kind == "interval":
        out = np.zeros_like(x)
    elif domain.kind == "ball":
        with np.errstate(divide="ignore"):
            out = -(domain.dim - 1) / x
    else:
        sign = np.where(x - domain.lo <= domain.hi - x, 1.0, -1.0)
        out = sign * (domain.dim - 1) / x
    return float(out) if out.ndim == 0 else out


def smooth_distance(domain: DomainSpec, point):
    """Smooth stand-in for the distance with ``d <= δ <= c d``.

    Returns ``(d, |∇d|-signed derivative d'(x), Δd)``. Used where a bound must
    be a super-solution across the ridge (see :func:`whitney_constant`).
    """
    x = np.asarray(point, dtype=float)
    if domain.kind == "interval":
        w = domain.hi - domain.lo
        k = math.pi / w
        d = np.sin(k * (x - domain.lo)) / k
        dp = np.cos(k * (x - domain.lo))
        lap = -k * k * d
    elif domain.kind == "ball":
        R = domain.hi
        d = (R * R - x * x) / (2 * R)
        dp = -x / R
        lap = -domain.dim / R * np.ones_like(x)
    else:
        a, b = domain.lo, domain.hi
        d = (x - a) * (b - x) / (b - a)
        dp = (a + b - 2 * x) / (b - a)
        lap = -2.0 / (b - a) + (domain.dim - 1) * dp / x
    return d, dp, lap


def whitney_constant(domain: DomainSpec) -> float:
    """The constant ``c`` with ``d <= δ <= c d`` for :func:`smooth_distance`."""
    return math.pi / 2 if domain.kind == "interval" else 2.0


# -- meshes --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mesh:
    """Truncated, boundary-graded mesh in the reduced coordinate.

    ``spacing[i]`` is the width of the cell between nodes ``i`` and ``i+1``;
    ``face_of[i]`` names the face a node is measured from. ``dirichlet`` marks
    truncation-face nodes; a ball's center is a symmetry node instead.
    """

    domain: DomainSpec
    nodes: np.ndarray
    delta: np.ndarray
    spacing: np.ndarray
    face_of: np.ndarray
    dirichlet: np.ndarray
    ridge_mask: np.ndarray
    epsilon: float
    grading: str
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def radius(self) -> np.ndarray:
        return self.nodes

    def face_nodes(self) -> dict:
        return {f: int(i) for f, i in zip(self.meta["face_names"], self.meta["face_nodes"])}

    def interpolate(self, values, face: str, delta):
        """Cubic-spline interpolation in ``log δ`` along one face's side."""
        sel = self.face_of == face
        ridge = np.flatnonzero(self.ridge_mask & (self.delta == self.delta.max()))
        idx = np.union1d(np.flatnonzero(sel), ridge)
        d = self.delta[idx]
        order = np.argsort(d)
        d, v = d[order], np.asarray(values)[idx][order]
        d, keep = np.unique(d, return_index=True)
        v = v[keep]
        t = np.log(np.asarray(delta, float))
        t = np.clip(t, math.log(d[0]), math.log(d[-1]))
        if d.size < 4:
            return np.interp(t, np.log(d), v)
        return CubicSpline(np.log(d), v)(t)

    def at(self, values, x):
        """Value at reduced coordinates ``x`` (interior points)."""
        xs = np.atleast_1d(np.asarray(x, float))
        out = np.empty(xs.size)
        for k, xi in enumerate(xs):
            face, d = self.domain.nearest_face(xi)
            out[k] = self.interpolate(values, face, max(d, self.epsilon))
        return out if np.ndim(x) else float(out[0])


def _blend_nodes(m: int, eps: float, width: float, grading: float) -> np.ndarray:
    """Distances ``eps = d_0 < ... < d_m = width`` uniform in a blended coordinate.

    The coordinate mixes ``δ`` (weight ``1/g``) with ``log δ`` (weight
    ``1 - 1/g``). ``g = 1`` is uniform; larger ``g`` clusters geometrically
    toward the face so that the relative spacing ``h/δ`` stays bounded there.
    """
    theta = 1.0 - 1.0 / grading
    if theta == 0.0:
        d = eps + (width - eps) * np.arange(m + 1) / m
        d[-1] = width
        return d
    lw = math.log(width / eps)
    eta = np.arange(m + 1) / m

    def blend(y):
        return (1 - theta) * (np.exp(y) - eps) / (width - eps) + theta * (y - math.log(eps)) / lw

    lo = np.full(m + 1, math.log(eps))
    hi = np.full(m + 1, math.log(width))
    for _ in range(120):
        mid = 0.5 * (lo + hi)
        below = blend(mid) < eta
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    d = np.exp(0.5 * (lo + hi))
    d[0], d[-1] = eps, width
    return d


def graded_mesh(domain: DomainSpec, n: int, epsilon: float,
                grading_strength: float = 2.0) -> Mesh:
    """Mesh of ``{δ > epsilon}`` with ``n`` nodes, graded toward each face."""
    if n < 16:
        raise MeshError("graded_mesh needs n >= 16")
    if grading_strength < 1:
        raise MeshError("grading_strength must be >= 1")
    W = domain.inradius
    if not 0 < epsilon < W:
        raise MeshError(f"epsilon={epsilon} leaves an empty truncated domain (inradius {W})")
    law = f"blend(uniform, log; g={grading_strength:g})"
    if domain.kind == "ball":
        d = _blend_nodes(n - 1, epsilon, W, grading_strength)[::-1]
        delta = d.copy()
        spacing = d[:-1] - d[1:]
        nodes = domain.hi - delta
        nodes[0] = 0.0
        face_of = np.full(n, "sphere", dtype=object)
        dirichlet = np.zeros(n, bool)
        dirichlet[-1] = True
        ridge = np.zeros(n, bool)
        ridge[:2] = True
        meta = {"face_names": ["sphere"], "face_nodes": [n - 1], "center": 0}
    else:
        m1 = (n - 1) // 2
        m2 = n - 1 - m1
        left = _blend_nodes(m1, epsilon, W, grading_strength)
        right = _blend_nodes(m2, epsilon, W, grading_strength)
        delta = np.concatenate([left, right[::-1][1:]])
        spacing = np.concatenate([np.diff(left), -np.diff(right[::-1])])
        nodes = np.concatenate([domain.lo + left, domain.hi - right[::-1][1:]])
        nodes[m1] = domain.ridge
        f0, f1 = domain.faces
        face_of = np.array([f0] * (m1 + 1) + [f1] * m2, dtype=object)
        dirichlet = np.zeros(n, bool)
        dirichlet[[0, -1]] = True
        ridge = np.zeros(n, bool)
        ridge[m1 - 1:m1 + 2] = True
        meta = {"face_names": [f0, f1], "face_nodes": [0, n - 1], "ridge_node": m1}
    if np.any(spacing <= 0):
        raise MeshError("mesh spacing underflow; reduce n or increase epsilon")
    return Mesh(domain, nodes, delta, spacing, face_of, dirichlet, ridge,
                float(epsilon), law, meta)


def strip_mesh(domain: DomainSpec, face: str, rho: float, n: int, epsilon: float,
               grading_strength: float = 2.0) -> Mesh:
    """Mesh of the boundary strip ``{epsilon < δ < rho}`` next to one face.

    Both ends are Dirichlet: the truncation face and the inner edge ``δ = rho``.
    Distances are always to the boundary of the full domain.
    """
    if not 0 < epsilon < rho <= domain.inradius:
        raise MeshError("strip needs 0 < epsilon < rho <= inradius")
    d = _blend_nodes(n - 1, epsilon, rho, grading_strength)
    x = domain.from_face(face, d)
    if x[0] > x[-1]:
        d = d[::-1]
        x = x[::-1]
    spacing = np.abs(np.diff(d))
    dirichlet = np.zeros(n, bool)
    dirichlet[[0, -1]] = True
    return Mesh(domain, x, d, spacing, np.full(n, face, dtype=object), dirichlet,
                np.zeros(n, bool), float(epsilon),
                f"strip blend(g={grading_strength:g})",
                {"face_names": [face], "face_nodes": [int(np.argmin(d))], "rho": rho})


def smooth_distance_at(domain: DomainSpec, face: str, delta):
    """:func:`smooth_distance` evaluated from the exact distance to ``face``.

    Avoids forming the reduced coordinate, so ``delta`` may be far below the
    floating-point spacing of coordinates near that face.
    """
    delta = np.asarray(delta, dtype=float)
    x = domain.from_face(face, delta)
    _, dp, lap = smooth_distance(domain, x)
    if domain.kind == "interval":
        k = math.pi / (domain.hi - domain.lo)
        d = np.sin(k * delta) / k
    elif domain.kind == "ball":
        d = delta * (2 * domain.hi - delta) / (2 * domain.hi)
    else:
        w = domain.hi - domain.lo
        d = delta * (w - delta) / w
    return d, dp, lap
