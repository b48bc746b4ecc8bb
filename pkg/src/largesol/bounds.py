"""Closed-form local sub/super-harmonics and sub/super-solutions.

Every family is a function ``v = g(t)`` of one distance-like argument ``t``:
the exact distance ``δ`` (possibly shifted), or the smooth stand-in ``d``
from :func:`largesol.geometry.smooth_distance`. Derivatives of ``g`` are
analytic; the chain rule uses ``Δv = g''(t) |t'|² + g'(t) Δt``.

Sign convention: the residual is the super-solution functional

    R[v] = -Δv - q(δ) v / δ²  (+ e^v when tested as a solution),

with ``q = μ - γ(δ)``. ``R >= 0`` means super, ``R <= 0`` means sub.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lambert
from .errors import ParameterError, SearchFailure, StripViolation
from .geometry import (DomainSpec, distance, laplacian_of_distance, mean_curvature,
                       smooth_distance, smooth_distance_at, whitney_constant)

HARMONIC_KINDS = ("PowerHarmonic", "CorrectedPower", "LogPower")
SOLUTION_KINDS = ("KellerOssermanSuper", "LogSuper", "LocalSubL", "GlobalSub",
                  "BorderlineSub", "BorderlineHSub", "BorderlineHSuper")
HARMONIC_STRIP = (1e-8, 1e-3)
SIGN_TOL = 1e-9


@dataclass(frozen=True)
class PotentialSpec:
    """Coefficients of ``-Δ - μ/δ² + γ(δ)/δ²`` with ``γ = β min{1/|log δ⁻²|, 1}``."""

    mu: float = 0.0
    beta: float | None = None

    def __post_init__(self):
        if self.beta is not None and not self.beta > 0:
            raise ParameterError("borderline coefficient beta must be positive")

    @property
    def beta_minus(self) -> float:
        return 0.5 - math.sqrt(self._disc())

    @property
    def beta_plus(self) -> float:
        return 0.5 + math.sqrt(self._disc())

    def _disc(self):
        if self.mu > 0.25:
            raise ParameterError("β± are real only for mu <= 1/4")
        return 0.25 - self.mu

    def gamma(self, delta):
        delta = np.asarray(delta, float)
        if self.beta is None:
            return np.zeros_like(delta)
        ell = np.abs(-2.0 * np.log(delta))
        with np.errstate(divide="ignore"):
            return self.beta * np.minimum(1.0 / ell, 1.0)

    def coefficient(self, delta):
        """``q(δ) = μ - γ(δ)``: the operator is ``-Δ - q/δ²``."""
        return self.mu - self.gamma(delta)

    def to_dict(self) -> dict:
        return {"mu": self.mu, "beta": self.beta}


@dataclass(frozen=True)
class BoundFamily:
    """One member of the catalog.

    ``params`` is a sorted tuple of ``(name, value)`` pairs; use the
    constructor functions below rather than building this directly.
    ``distance`` is ``"exact"`` or ``"smooth"``.
    """

    kind: str
    params: tuple
    strip: tuple
    distance: str = "exact"
    profile: object = field(default=None, compare=False, repr=False)

    def p(self, name, default=None):
        return dict(self.params).get(name, default)

    @property
    def as_solution(self) -> bool:
        return self.kind in SOLUTION_KINDS

    def to_dict(self) -> dict:
        return {"kind": self.kind, **dict(self.params), "strip": list(self.strip),
                "distance": self.distance}


def _family(kind, strip, distance="exact", profile=None, **params):
    return BoundFamily(kind, tuple(sorted(params.items())), tuple(strip), distance, profile)


# -- constructors -------------------------------------------------------------
def PowerHarmonic(beta, strip=HARMONIC_STRIP):
    return _family("PowerHarmonic", strip, beta=float(beta))


def CorrectedPower(base, eps=0.05, sign=-1, strip=HARMONIC_STRIP):
    """``δ^base (1 + sign δ^eps)``."""
    if sign not in (-1, 1):
        raise ParameterError("sign must be +1 or -1")
    return _family("CorrectedPower", strip, base=float(base), eps=float(eps), sign=int(sign))


def LogPower(m, strip=(1e-60, 1e-10)):
    """``(log δ⁻²)^m``.

    The sign is decided by ``(β - 2m) ℓ^{m-1}`` against a ``4m(m-1) ℓ^{m-2}``
    correction, so the default strip sits where ``ℓ = log δ⁻²`` exceeds 46.
    """
    return _family("LogPower", strip, m=float(m))


def KellerOssermanSuper(A, shift=0.0, strip=None, distance="smooth"):
    """``L_A(t - shift)``.

    The default strip ``δ > 1e-8 + 2 shift`` keeps ``d > shift`` on every
    supported domain (``δ <= 2d``).
    """
    if strip is None:
        strip = (1e-8 + 2 * shift, math.inf)
    return _family("KellerOssermanSuper", strip, distance, A=float(A), shift=float(shift))


def LogSuper(A, shift=0.0, strip=None, distance="smooth"):
    """``log(A / (t - shift)²)``.

    The default strip ``δ > 1e-8 + 2 shift`` keeps ``d > shift`` on every
    supported domain (``δ <= 2d``).
    """
    if strip is None:
        strip = (1e-8 + 2 * shift, math.inf)
    return _family("LogSuper", strip, distance, A=float(A), shift=float(shift))


def LocalSubL(B, shift=0.0, strip=None, potential: PotentialSpec | None = None,
              domain: DomainSpec | None = None):
    """``L_B(δ + shift)``; the default strip is ``δ < ε₀`` from :func:`local_sub_eps0`."""
    if strip is None:
        if potential is None or domain is None:
            raise ParameterError("LocalSubL needs a strip, or a potential and domain")
        strip = (1e-8, local_sub_eps0(B, domain))
    return _family("LocalSubL", strip, B=float(B), shift=float(shift))


def BorderlineSub(B, strip=(1e-8, 1e-3)):
    """``log(B / δ²)``."""
    return _family("BorderlineSub", strip, B=float(B))


def BorderlineHSub(M, k, beta, strip=(1e-8, 1e-3)):
    """``M (log δ⁻²)^{β/2} - k``."""
    return _family("BorderlineHSub", strip, M=float(M), k=float(k), beta=float(beta))


def BorderlineHSuper(M, K, beta, strip=(1e-8, 1e-3)):
    """``M (log δ⁻²)^{β/2} + K``."""
    return _family("BorderlineHSuper", strip, M=float(M), K=float(K), beta=float(beta))


# -- evaluation ---------------------------------------------------------------
def _g(family: BoundFamily, t):
    """``(g, g', g'')`` of the family in its argument ``t`` (before any shift)."""
    k = family.kind
    P = family.p
    if k == "PowerHarmonic":
        b = P("beta")
        return t**b, b * t ** (b - 1), b * (b - 1) * t ** (b - 2)
    if k == "CorrectedPower":
        b, e, s = P("base"), P("eps"), P("sign")
        c = b + e
        return (t**b + s * t**c,
                b * t ** (b - 1) + s * c * t ** (c - 1),
                b * (b - 1) * t ** (b - 2) + s * c * (c - 1) * t ** (c - 2))
    if k in ("LogPower", "BorderlineHSub", "BorderlineHSuper"):
        m = P("m") if k == "LogPower" else 0.5 * P("beta")
        amp = 1.0 if k == "LogPower" else P("M")
        off = {"LogPower": 0.0, "BorderlineHSub": -P("k", 0.0),
               "BorderlineHSuper": P("K", 0.0)}[k]
        ell = -2.0 * np.log(t)
        # dℓ/dt = -2/t
        v = amp * ell**m + off
        d1 = amp * m * ell ** (m - 1) * (-2.0 / t)
        d2 = amp * (m * (m - 1) * ell ** (m - 2) * 4.0 + m * ell ** (m - 1) * 2.0) / t**2
        return v, d1, d2
    if k == "KellerOssermanSuper":
        s = t - P("shift")
        return lambert.dL(P("A"), s)
    if k == "LocalSubL":
        s = t + P("shift")
        return lambert.dL(P("B"), s)
    if k == "LogSuper":
        s = t - P("shift")
        return np.log(P("A") / s**2), -2.0 / s, 2.0 / s**2
    if k == "BorderlineSub":
        return np.log(P("B") / t**2), -2.0 / t, 2.0 / t**2
    if k == "GlobalSub":
        return _global_branch(family, t)
    raise ParameterError(f"unknown family kind {k!r}")


def _argument(family: BoundFamily, domain: DomainSpec, x):
    """``(t, t', Δt, δ)`` at reduced coordinates ``x``."""
    x = np.asarray(x, float)
    delta = np.asarray(distance(domain, x))
    if family.distance == "smooth":
        t, tp, lap = smooth_distance(domain, x)
        return np.asarray(t), np.asarray(tp), np.asarray(lap), delta
    return delta, np.ones_like(delta), np.asarray(laplacian_of_distance(domain, x)), delta


def _check_strip(family: BoundFamily, domain: DomainSpec, delta):
    lo, hi = family.strip
    # distances near a face at radius R carry an absolute rounding error ~ R·ulp
    slack = 1e-14 * max(1.0, domain.hi)
    if np.any(delta < lo * (1 - 1e-12) - slack) or np.any(delta > hi * (1 + 1e-12) + slack):
        raise StripViolation(f"{family.kind}: point outside validity strip {family.strip}")


def _argument_at(family: BoundFamily, domain: DomainSpec, face: str, delta):
    """``(t, t', Δt, δ)`` from the exact distance to one face."""
    delta = np.asarray(delta, float)
    if family.distance == "smooth":
        t, tp, lap = smooth_distance_at(domain, face, delta)
        return np.asarray(t), np.asarray(tp), np.asarray(lap), delta
    x = domain.from_face(face, delta)
    lap = np.asarray(laplacian_of_distance(domain, x))
    if domain.kind == "annulus":
        lap = np.abs(lap) * (1.0 if face == "inner" else -1.0)
    return delta, np.ones_like(delta), lap, delta


def eval_family(family: BoundFamily, domain: DomainSpec, x):
    """Value and first two derivatives in the family's distance argument."""
    t, _, _, delta = _argument(family, domain, x)
    _check_strip(family, domain, delta)
    return _g(family, t)


def value_at(family: BoundFamily, domain: DomainSpec, face: str, delta):
    """Family value at exact distance ``delta`` from ``face`` (no strip check)."""
    t = _argument_at(family, domain, face, delta)[0]
    return _g(family, t)[0]


def _residual(family, potential, t, tp, lap, delta, as_solution):
    g, g1, g2 = _g(family, t)
    q = potential.coefficient(delta)
    terms = [-(g2 * tp**2), -(g1 * lap), -q * g / delta**2]
    if as_solution:
        with np.errstate(over="ignore"):
            terms.append(np.exp(g))
    return sum(terms), sum(np.abs(z) for z in terms)


def residual(family: BoundFamily, potential: PotentialSpec, domain: DomainSpec, x,
             as_solution: bool | None = None, *, with_scale=False):
    """Signed super-solution functional at reduced coordinates ``x``.

    With ``with_scale`` also return the sum of absolute values of the terms,
    used to decide signs robustly against rounding.
    """
    if as_solution is None:
        as_solution = family.as_solution
    t, tp, lap, delta = _argument(family, domain, x)
    _check_strip(family, domain, delta)
    res, scale = _residual(family, potential, t, tp, lap, delta, as_solution)
    return (res, scale) if with_scale else res


def residual_at(family: BoundFamily, potential: PotentialSpec, domain: DomainSpec,
                face: str, delta, as_solution: bool | None = None, *, with_scale=False,
                check_strip=True):
    """As :func:`residual`, at exact distance ``delta`` from ``face``."""
    if as_solution is None:
        as_solution = family.as_solution
    t, tp, lap, delta = _argument_at(family, domain, face, delta)
    if check_strip:
        _check_strip(family, domain, delta)
    res, scale = _residual(family, potential, t, tp, lap, delta, as_solution)
    return (res, scale) if with_scale else res


# -- expected signs -------------------------------------------------------------
def leading_coefficient(family: BoundFamily, potential: PotentialSpec) -> float:
    """Coefficient of the dominant term of the harmonic residual as ``δ -> 0``."""
    mu = potential.mu
    if family.kind == "PowerHarmonic":
        b = family.p("beta")
        return -(b * (b - 1) + mu)
    if family.kind == "CorrectedPower":
        b, e, s = family.p("base"), family.p("eps"), family.p("sign")
        base = -(b * (b - 1) + mu)
        if abs(base) > 1e-12:
            return base
        c = b + e
        return -s * (c * (c - 1) + mu)
    if family.kind == "LogPower":
        # ℓ^m with μ = 0: (β - 2m) ℓ^{m-1}/δ²; with μ ≠ 0 the μ ℓ^m/δ² term dominates
        if abs(mu) > 1e-12:
            return -mu
        return (potential.beta or 0.0) - 2 * family.p("m")
    raise ParameterError(f"{family.kind} has no harmonic leading term")


def expected_sign(family: BoundFamily, potential: PotentialSpec) -> str:
    """``'super'``, ``'sub'`` or ``'borderline'`` as asserted by the construction."""
    k = family.kind
    if k in HARMONIC_KINDS:
        c = leading_coefficient(family, potential)
        if abs(c) <= 1e-12:
            return "borderline"
        return "super" if c > 0 else "sub"
    return {"KellerOssermanSuper": "super", "LogSuper": "super", "LocalSubL": "sub",
            "GlobalSub": "sub", "BorderlineSub": "sub", "BorderlineHSub": "sub",
            "BorderlineHSuper": "super"}[k]


@dataclass
class ClassificationReport:
    family: dict
    expected: str
    observed: str
    samples: int
    fraction: float
    worst_x: float
    worst_delta: float
    worst_margin: float
    passed: bool
    borderline: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def classify_on_strip(family: BoundFamily, potential: PotentialSpec, domain: DomainSpec,
                      strip=None, samples: int = 1000, expected: str | None = None):
    """Check the sign of the residual at log-spaced points of ``{lo < δ < hi}``.

    ``samples`` points are taken next to every boundary face. A point counts
    as agreeing with the expected sign when the residual has that sign or
    vanishes to within rounding (relative ``1e-9`` of the term magnitudes).
    Families on the exact distance stop short of the ridge. An explicit
    ``strip`` is the claim under test and may extend past the family's
    documented strip.
    """
    if samples < 100:
        raise ParameterError("classify_on_strip needs at least 100 samples")
    lo, hi = family.strip if strip is None else strip
    hi = min(hi, domain.inradius)
    if family.distance != "smooth":
        hi = min(hi, domain.inradius * (1 - 1e-9))
    dl = np.geomspace(lo, hi, samples)
    res, scale, xs, ds = [], [], [], []
    for f in domain.faces:
        r, sc = residual_at(family, potential, domain, f, dl, with_scale=True,
                            check_strip=strip is None)
        res.append(r)
        scale.append(sc)
        xs.append(domain.from_face(f, dl))
        ds.append(dl)
    res, scale = np.concatenate(res), np.concatenate(scale)
    x, dl = np.concatenate(xs), np.concatenate(ds)
    margin = res / scale
    is_super = margin >= -SIGN_TOL
    is_sub = margin <= SIGN_TOL
    if expected is None:
        expected = expected_sign(family, potential)
    borderline = expected == "borderline"
    if np.all(is_super) and not np.all(is_sub):
        observed = "super"
    elif np.all(is_sub) and not np.all(is_super):
        observed = "sub"
    elif np.all(is_sub & is_super):
        observed = "zero"
    else:
        observed = "mixed"
    if expected == "super":
        ok, signed = is_super, margin
    elif expected == "sub":
        ok, signed = is_sub, -margin
    else:
        ok, signed = np.ones_like(is_sub), -np.abs(margin)
    i = int(np.argmin(signed))
    frac = float(np.mean(ok))
    return ClassificationReport(family.to_dict(), expected, observed, int(x.size), frac,
                                float(x[i]), float(dl[i]), float(signed[i]),
                                bool(frac == 1.0 and expected != "borderline"), borderline)


# -- Keller-Osserman amplitude search ----------------------------------------
@dataclass
class KOSearch:
    A: float
    kind: str
    whitney: float
    reports: list
    threshold: float = float("nan")

    @property
    def delta_amplitude(self) -> float:
        """Amplitude ``c² A`` of the bound written in the exact distance."""
        return self.whitney**2 * self.A

    def bound(self, delta):
        """Universal upper bound at exact distance ``delta``."""
        delta = np.asarray(delta, float)
        if self.kind == "LogSuper":
            return np.log(self.delta_amplitude / delta**2)
        return lambert.eval_L(self.delta_amplitude, delta)


def _ko_passes(make, A, domain, potential, lo, hi, shifts, samples, c):
    reports = []
    for s in shifts:
        fam = make(A, s)
        sl = max(lo, c * s * (1 + 1e-6) + lo)
        reports.append(classify_on_strip(fam, potential, domain, (sl, hi), samples))
        if not reports[-1].passed:
            return False, reports
    return True, reports


def search_A_keller_osserman(domain: DomainSpec, potential: PotentialSpec,
                             strip=(1e-8, math.inf), shifts=(0.0, 1e-6, 1e-3),
                             kind: str | None = None, samples: int = 400,
                             cap_exponent: int = 60, refine: bool = False) -> KOSearch:
    """Smallest ``A`` on the grid ``A₀ 2^k`` making the family a super-solution.

    The family is built on the smooth distance ``d``, so it is a classical
    super-solution on the whole domain including the ridge. ``kind`` is
    ``"KellerOssermanSuper"`` (default) or ``"LogSuper"`` (only for
    non-positive coefficients). With ``refine`` the pass/fail threshold below
    the grid value is also located by bisection (relative width 1e-6).
    """
    kind = kind or "KellerOssermanSuper"
    if kind == "LogSuper" and potential.mu > 0:
        raise ParameterError("LogSuper bound needs mu <= 0")
    make = KellerOssermanSuper if kind == "KellerOssermanSuper" else LogSuper
    c = whitney_constant(domain)
    lo = strip[0]
    hi = min(strip[1], domain.inradius)
    d_max = float(np.max(smooth_distance(domain, np.array([domain.ridge]))[0]))
    A0 = 4.0 * math.e * max(d_max, hi) ** 2
    args = (domain, potential, lo, hi, shifts, samples, c)
    for k in range(cap_exponent + 1):
        A = A0 * 2.0**k
        ok, reports = _ko_passes(make, A, *args)
        if ok:
            out = KOSearch(A, kind, c, reports)
            if refine:
                out.threshold = _bisect_threshold(make, A, math.e * d_max**2, args)
            return out
    raise SearchFailure(f"no A <= {A0:.3g}·2^{cap_exponent} gives a super-solution")


def _bisect_threshold(make, good, floor, args):
    bad = floor * (1 + 1e-9) if make is KellerOssermanSuper else 1e-300
    if _ko_passes(make, bad, *args)[0]:
        return bad
    while good - bad > 1e-6 * good:
        mid = math.sqrt(good * bad) if bad < 1e-3 * good else 0.5 * (good + bad)
        if _ko_passes(make, mid, *args)[0]:
            good = mid
        else:
            bad = mid
    return good


def local_sub_eps0(B: float, domain: DomainSpec, factor: float = 0.9) -> float:
    """Strip width for ``L_B(δ + ε)`` as a local sub-solution.

    Takes ``factor`` times the minimum of ``½√(B/e)``, ``1/(4K)`` (``K`` bounds
    ``Δδ``) and ``½√(3B/e³)``, the last enforcing ``1 - 2/(L-1)² >= 1/2``.
    """
    if not B > 0:
        raise ParameterError("B must be positive")
    K = max([0.0] + [-(domain.dim - 1) * mean_curvature(domain, f) for f in domain.faces])
    cands = [0.5 * math.sqrt(B / math.e), 0.5 * math.sqrt(3 * B / math.e**3),
             0.25 * domain.inradius]
    if K > 0:
        cands.append(1.0 / (4 * K))
    return factor * min(cands)


# -- global sub-solution ----------------------------------------------------------
def _profile_at(profile, face, delta):
    return float(profile.mesh.interpolate(profile.values, face, delta))


def build_global_sub(potential: PotentialSpec, phi_profile, shift: float = 0.0,
                     eps0: float | None = None, nu: float = 0.05) -> BoundFamily:
    """Paste ``L_μ(δ+ε) - C δ^{β₋}(1 + δ^ν)`` with the torsion profile ``φ``.

    ``C`` is the smallest value (times 1.01) with
    ``L_μ(ε₀ + ε) - C ε₀^{β₋}(1 + ε₀^ν) < min φ`` on ``{δ = ε₀}`` for every
    ``ε`` in ``[0, ε₀]``; the worst case is ``ε = 0``.
    """
    mu = potential.mu
    if not mu > 0:
        raise ParameterError("global sub-solution needs mu > 0")
    domain = phi_profile.mesh.domain
    if eps0 is None:
        eps0 = local_sub_eps0(mu, domain)
    if not 0 <= shift <= eps0:
        raise ParameterError("shift must lie in [0, eps0]")
    bm = potential.beta_minus
    phi_min = min(_profile_at(phi_profile, f, eps0) for f in domain.faces)
    H = eps0**bm * (1 + eps0**nu)
    C = 1.01 * (lambert.eval_L(mu, eps0) - phi_min) / H
    # largest δ where the first branch is active on every face
    grid = np.geomspace(1e-12, eps0, 2000)
    switch = eps0
    for f in domain.faces:
        first = lambert.eval_L(mu, grid + shift) - C * grid**bm * (1 + grid**nu)
        phi = phi_profile.mesh.interpolate(phi_profile.values, f, grid)
        lose = np.flatnonzero(first <= phi)
        if lose.size:
            switch = min(switch, float(grid[max(lose[0] - 1, 0)]))
    fam = _family("GlobalSub", (1e-8, switch), "exact", phi_profile, C=C, eps0=eps0, nu=nu,
                  shift=shift, mu=mu, beta_minus=bm)
    return fam


def _global_branch(family, t):
    P = family.p
    C, nu, bm = P("C"), P("nu"), P("beta_minus")
    L, L1, L2 = lambert.dL(P("mu"), t + P("shift"))
    e = bm + nu
    H = t**bm + t**e
    H1 = bm * t ** (bm - 1) + e * t ** (e - 1)
    H2 = bm * (bm - 1) * t ** (bm - 2) + e * (e - 1) * t ** (e - 2)
    return L - C * H, L1 - C * H1, L2 - C * H2


def global_sub_value(family: BoundFamily, domain: DomainSpec, x):
    """Value of the pasted global sub-solution anywhere in the domain."""
    x = np.atleast_1d(np.asarray(x, float))
    delta = np.asarray(distance(domain, x))
    prof = family.profile
    phi = prof.mesh.at(prof.values, x)
    out = np.array(phi, float)
    near = delta < family.p("eps0")
    if np.any(near):
        first = _global_branch(family, delta[near])[0]
        out[near] = np.maximum(first, phi[near])
    return out
