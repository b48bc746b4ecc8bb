"""Discrete global and local Hardy constants.

The Rayleigh quotient ``∫|φ'|² w / ∫ φ² w/δ²`` (``w = r^{N-1}`` on radial
domains) is minimized over continuous piecewise-linear functions vanishing
on the truncation faces. The smallest eigenvalue of the tridiagonal pencil is
bracketed by Sturm counts and polished by shifted inverse iteration.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import IterationFailure
from .geometry import DomainSpec, Mesh, graded_mesh, strip_mesh

_GX, _GW = np.polynomial.legendre.leggauss(8)
_GX = 0.5 * (_GX + 1.0)
_GW = 0.5 * _GW

DEFAULT_EPS_FRACTION = 1e-8


@dataclass
class HardyResult:
    value: float
    mesh_size: int
    minimizer: np.ndarray
    window: tuple
    residual: float
    iterations: int
    error_estimate: float = float("nan")
    mesh: Mesh | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"value": self.value, "n": self.mesh_size, "window": list(self.window),
                "eigen_residual": self.residual, "error_estimate": self.error_estimate}


def _cell_quadrature(d0, d1, r0, r1):
    """Quadrature nodes (as cell fractions) and weights for each cell.

    Cells whose distance ratio exceeds 1.5 are split geometrically so that the
    ``1/δ²`` weight stays well resolved.
    """
    ratio = np.maximum(d0, d1) / np.minimum(d0, d1)
    pieces = np.maximum(1, np.ceil(np.log(ratio) / math.log(1.5))).astype(int)
    s_all, w_all, cell_all = [], [], []
    simple = pieces == 1
    idx = np.flatnonzero(simple)
    s_all.append(np.tile(_GX, idx.size))
    w_all.append(np.tile(_GW, idx.size))
    cell_all.append(np.repeat(idx, _GX.size))
    for k in np.flatnonzero(~simple):
        dmin, dmax = min(d0[k], d1[k]), max(d0[k], d1[k])
        edges = np.geomspace(dmin, dmax, pieces[k] + 1)
        fr = (edges - dmin) / (dmax - dmin)
        if d0[k] > d1[k]:
            fr = 1.0 - fr[::-1]
        for a, b in zip(fr[:-1], fr[1:]):
            s_all.append(a + (b - a) * _GX)
            w_all.append((b - a) * _GW)
            cell_all.append(np.full(_GX.size, k))
    return np.concatenate(s_all), np.concatenate(w_all), np.concatenate(cell_all)


def assemble_pencil(mesh: Mesh):
    """Tridiagonal stiffness and weighted mass over all mesh nodes.

    Returns ``(k_diag, k_off, m_diag, m_off)``.
    """
    d = mesh.delta
    h = mesh.spacing
    N = mesh.domain.dim
    d0, d1 = d[:-1], d[1:]
    x0 = mesh.nodes[:-1]
    s, w, cell = _cell_quadrature(d0, d1, x0, mesh.nodes[1:])
    dq = d0[cell] + (d1[cell] - d0[cell]) * s
    if mesh.domain.radial:
        rq = x0[cell] + h[cell] * s
        wr = rq ** (N - 1)
    else:
        wr = np.ones_like(s)
    hw = h[cell] * w
    nc = h.size
    kint = np.bincount(cell, wr * hw, nc) / h**2
    phi_a, phi_b = 1.0 - s, s
    mw = wr * hw / dq**2
    maa = np.bincount(cell, mw * phi_a * phi_a, nc)
    mbb = np.bincount(cell, mw * phi_b * phi_b, nc)
    mab = np.bincount(cell, mw * phi_a * phi_b, nc)
    n = d.size
    k_diag = np.zeros(n)
    m_diag = np.zeros(n)
    k_diag[:-1] += kint
    k_diag[1:] += kint
    m_diag[:-1] += maa
    m_diag[1:] += mbb
    return k_diag, -kint, m_diag, mab


def _tri_matvec(diag, off, v):
    out = diag * v
    out[:-1] += off * v[1:]
    out[1:] += off * v[:-1]
    return out


def _restrict(mesh: Mesh, k_diag, k_off, m_diag, m_off):
    free = ~mesh.dirichlet
    idx = np.flatnonzero(free)
    # free nodes form one contiguous block on every mesh we build
    assert np.all(np.diff(idx) == 1)
    sl = slice(idx[0], idx[-1] + 1)
    osl = slice(idx[0], idx[-1])
    return k_diag[sl], k_off[osl], m_diag[sl], m_off[osl], idx


def smallest_pair(kd, ko, md, mo, tol=1e-10, max_iter=50):
    """Smallest eigenpair of the SPD tridiagonal pencil ``(K, M)``."""
    n = kd.size
    # upper bound from a smooth positive trial vector
    t = np.sin(np.pi * (np.arange(n) + 1) / (n + 1))
    hi = float(t @ _tri_matvec(kd, ko, t) / (t @ _tri_matvec(md, mo, t)))
    lo = 0.0
    if kernels.sturm_count(ko, kd) != 0:
        raise IterationFailure("stiffness matrix is not positive definite", bound=hi)
    while hi - lo > 1e-9 * hi:
        mid = 0.5 * (lo + hi)
        if kernels.sturm_count(ko - mid * mo, kd - mid * md) >= 1:
            hi = mid
        else:
            lo = mid
    sigma = lo
    ad, ao = kd - sigma * md, ko - sigma * mo
    sub = np.concatenate([[0.0], ao])
    sup = np.concatenate([ao, [0.0]])
    v = np.abs(t)
    lam = hi
    res = np.inf
    for it in range(1, max_iter + 1):
        v = kernels.thomas(sub, ad, sup, _tri_matvec(md, mo, v))
        v /= math.sqrt(v @ _tri_matvec(md, mo, v))
        Kv = _tri_matvec(kd, ko, v)
        Mv = _tri_matvec(md, mo, v)
        lam = float(v @ Kv)
        res = float(np.linalg.norm(Kv - lam * Mv) / np.linalg.norm(Mv))
        if res <= tol:
            break
    else:
        raise IterationFailure(f"inverse iteration stalled at residual {res:.2e}", bound=lam)
    if np.sum(v) < 0:
        v = -v
    return lam, v, res, it


def rayleigh_quotient(mesh: Mesh, profile) -> float:
    """Discrete quotient of a nodal profile (must vanish on Dirichlet nodes)."""
    kd, ko, md, mo = assemble_pencil(mesh)
    p = np.asarray(profile, float).copy()
    p[mesh.dirichlet] = 0.0
    return float(p @ _tri_matvec(kd, ko, p) / (p @ _tri_matvec(md, mo, p)))


def _solve(mesh: Mesh, window, tol):
    kd, ko, md, mo = assemble_pencil(mesh)
    kd, ko, md, mo, idx = _restrict(mesh, kd, ko, md, mo)
    lam, v, res, it = smallest_pair(kd, ko, md, mo, tol=tol)
    phi = np.zeros(mesh.n)
    phi[idx] = v
    return HardyResult(lam, mesh.n, phi, window, res, it, mesh=mesh)


def default_epsilon(domain: DomainSpec) -> float:
    return DEFAULT_EPS_FRACTION * 2 * domain.inradius


def hardy_constant(domain: DomainSpec, mesh: Mesh | None = None, *, n: int = 1024,
                   tol: float = 1e-10, estimate_error: bool = False) -> HardyResult:
    """Discrete global Hardy constant on a truncated, graded mesh."""
    if mesh is None:
        mesh = graded_mesh(domain, n, default_epsilon(domain), 2.0)
    out = _solve(mesh, ("global",), tol)
    if estimate_error:
        coarse = graded_mesh(domain, max(16, mesh.n // 2), mesh.epsilon, 2.0)
        out.error_estimate = abs(_solve(coarse, ("global",), tol).value - out.value)
    return out


@functools.lru_cache(maxsize=64)
def cached_hardy(domain: DomainSpec, n: int = 1024) -> HardyResult:
    return hardy_constant(domain, n=n, estimate_error=True)


def local_hardy_constant(domain: DomainSpec, rho: float, n: int = 1024, *,
                         epsilon: float | None = None, tol: float = 1e-10) -> HardyResult:
    """Discrete local Hardy constant of the strip ``{δ < rho}``.

    Disconnected strips are treated jointly: the minimum over components,
    with the minimizer supported on the minimizing component.
    """
    eps = default_epsilon(domain) if epsilon is None else epsilon
    best = None
    for face in domain.faces:
        r = _solve(strip_mesh(domain, face, rho, n, eps), ("strip", rho, face), tol)
        if best is None or r.value < best.value:
            best = r
    return best


def gate_mu(mu: float, hardy: HardyResult, margin: float | None = None) -> str:
    """``'admissible'``, ``'borderline'`` or ``'inadmissible'`` for ``mu``."""
    if margin is None:
        margin = hardy.error_estimate if math.isfinite(hardy.error_estimate) else 0.0
    if mu < hardy.value - margin:
        return "admissible"
    if abs(mu - hardy.value) <= margin:
        return "borderline"
    return "inadmissible"
