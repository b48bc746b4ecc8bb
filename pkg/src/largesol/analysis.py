"""Boundary asymptotics of computed profiles and large/vanishing verdicts.

Ratios are read on a ladder of distances ``δ_j`` next to every face.
``ℓ = log δ⁻²`` throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import lambert
from .bounds import PotentialSpec
from .errors import InapplicableError, LambertDomainError, ResolutionError
from .geometry import DomainSpec, Mesh, graded_mesh

VERDICTS = ("large-with-ratio-1", "large-with-amplitude-M", "vanishing", "inconclusive")
DEFAULT_LADDER = tuple(np.geomspace(1e-2, 1e-4, 21))
SLOPE_BAND = 0.05
RATIO_BAND = 0.1
MIN_CELLS = 3
MISMATCH_FACTOR = 50.0


def ell(delta):
    return -2.0 * np.log(np.asarray(delta, float))


@dataclass
class SampledProfile:
    """A nodal profile on a mesh that did not come from the solver."""

    mesh: Mesh
    values: np.ndarray


def sampled_profile(domain: DomainSpec, func, n: int = 4001, epsilon: float = 1e-9,
                    grading: float = 2.0) -> SampledProfile:
    """Sample ``func(δ)`` on a graded mesh, e.g. to test the classifiers."""
    mesh = graded_mesh(domain, n, epsilon, grading)
    return SampledProfile(mesh, np.asarray(func(mesh.delta), float))


def _check_ladder(ladder):
    lad = np.asarray(ladder, float)
    if lad.size < 3 or np.any(np.diff(lad) >= 0) or np.any(lad <= 0):
        raise ResolutionError("ladder needs at least 3 strictly decreasing positive distances")
    return lad


def ladder_values(profile, ladder, faces=None) -> np.ndarray:
    """Values on the ladder, one row per face.

    Raises
    ------
    ResolutionError
        If a ladder distance has fewer than three mesh cells between it and
        the face.
    """
    lad = _check_ladder(ladder)
    mesh = profile.mesh
    faces = mesh.domain.faces if faces is None else faces
    rows = []
    for f in faces:
        d = np.sort(mesh.delta[mesh.face_of == f])
        if np.searchsorted(d, lad[-1]) < MIN_CELLS + 1:
            raise ResolutionError(f"ladder point {lad[-1]:.3g} is within {MIN_CELLS} cells "
                                  f"of face {f!r}")
        rows.append(mesh.interpolate(profile.values, f, lad))
    return np.array(rows)


# -- log-scale ratio ------------------------------------------------------------
@dataclass
class AsymptoticsReport:
    reference: str
    ladder: list
    ratios: list
    coefficients: dict
    limit: float
    uncertainty: float
    verdict: str
    fit_residual: float
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _lstsq(X, y):
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ coef
    dof = max(1, y.size - X.shape[1])
    s2 = float(r @ r) / dof
    cov = s2 * np.linalg.pinv(X.T @ X)
    return coef, np.sqrt(np.maximum(np.diag(cov), 0.0)), float(np.sqrt(np.mean(r * r)))


def fit_log_model(values, ladder):
    """Least-squares fit of ``u = a ℓ + b log ℓ + c``; returns coefs, errors, rms."""
    lad = np.asarray(ladder, float)
    l = np.tile(ell(lad), values.size // lad.size)
    X = np.column_stack([l, np.log(l), np.ones_like(l)])
    return _lstsq(X, np.ravel(values))


def _ratio_verdict(a, err):
    if abs(a - 1.0) <= RATIO_BAND:
        return "large-with-ratio-1"
    if abs(a) <= RATIO_BAND:
        return "vanishing"
    return "inconclusive"


def report_from_values(values, ladder, reference="log") -> AsymptoticsReport:
    values = np.atleast_2d(values)
    lad = np.asarray(ladder, float)
    ratios = values / ell(lad)
    coef, err, rms = fit_log_model(values, lad)
    a = float(coef[0])
    return AsymptoticsReport(reference, lad.tolist(), ratios.tolist(),
                             {"a": a, "b": float(coef[1]), "c": float(coef[2])},
                             a, float(err[0]), _ratio_verdict(a, err[0]), rms)


def boundary_ratio(profile, reference: str = "log", ladder=DEFAULT_LADDER) -> AsymptoticsReport:
    """Ratio ``u/ℓ`` on the ladder and the fitted leading coefficient ``a``.

    ``a`` is the limit of the ratio under the model ``a ℓ + b log ℓ + c``.
    Verdicts: ``large-with-ratio-1`` when ``|a - 1| <= 0.1``, ``vanishing``
    when ``|a| <= 0.1``, otherwise ``inconclusive``.
    """
    if reference != "log":
        raise InapplicableError("boundary_ratio measures against log δ⁻²; use amplitude_fit "
                                "or pl_classify for the other references")
    return report_from_values(ladder_values(profile, ladder), ladder, reference)


# -- extrapolation along a continuation -----------------------------------------
def extrapolate_sequence(values, eps, min_points=4, converged_tol=1e-6):
    """Limit of ``v_k`` as ``ε_k -> 0`` under ``v_k = v∞ + c ℓ(ε_k)^{-p}``.

    Returns ``(limit, spread)`` where ``spread`` is the change in the limit
    when the oldest point is dropped. Already-converged sequences return
    their last value.
    """
    v = np.asarray(values, float)
    e = np.asarray(eps, float)
    if v.size >= 2 and abs(v[-1] - v[-2]) <= converged_tol * max(1.0, abs(v[-1])):
        return float(v[-1]), float(abs(v[-1] - v[-2]))
    if v.size < min_points:
        return float(v[-1]), math.inf

    def fit(vv, ee):
        x = ell(ee)

        def model(p):
            X = np.column_stack([np.ones_like(x), x**-p])
            coef, *_ = np.linalg.lstsq(X, vv, rcond=None)
            return float(np.sum((vv - X @ coef) ** 2)), float(coef[0])

        grid = np.geomspace(0.05, 20.0, 400)
        k = int(np.argmin([model(p)[0] for p in grid]))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        opt = minimize_scalar(lambda p: model(p)[0], bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        return model(opt.x if opt.fun <= model(grid[k])[0] else grid[k])[1]

    lim = fit(v, e)
    lim2 = fit(v[1:], e[1:]) if v.size > min_points else lim
    return lim, abs(lim - lim2)


@dataclass
class LimitReport:
    ladder: list
    limits: list
    spreads: list
    steps_used: int
    report: AsymptoticsReport


def continuation_limit(result, ladder=DEFAULT_LADDER, last: int = 6) -> LimitReport:
    """Extrapolate ladder values over the last continuation steps, then fit."""
    lad = _check_ladder(ladder)
    rows, eps = [], []
    for prof in result.profiles[-last:]:
        try:
            rows.append(ladder_values(prof, lad))
        except ResolutionError:
            continue
        eps.append(prof.mesh.epsilon)
    if not rows:
        raise ResolutionError("no continuation step resolves the ladder")
    seq = np.array(rows)  # steps × faces × ladder
    lim = np.empty(seq.shape[1:])
    spread = np.empty(seq.shape[1:])
    for i in range(seq.shape[1]):
        for j in range(seq.shape[2]):
            lim[i, j], spread[i, j] = extrapolate_sequence(seq[:, i, j], eps)
    rep = report_from_values(lim, lad)
    return LimitReport(lad.tolist(), lim.tolist(), spread.tolist(), len(eps), rep)


# -- Phragmen-Lindelof alternative --------------------------------------------------
@dataclass
class PLReport:
    horn: str
    slope_minus: float
    slope_plus: float
    ratios_minus: list
    ratios_plus: list
    minus_decreasing: bool
    used_absolute_value: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _slope(logr, lad):
    x = np.log(lad)
    return float(np.polyfit(x, logr, 1)[0])


def pl_classify(profile, potential: PotentialSpec, ladder=DEFAULT_LADDER,
                face: str | None = None) -> PLReport:
    """Which horn of the alternative the profile supports on the ladder.

    Horn ``(i)``: ``u/δ^{β₋}`` stays away from zero as ``δ -> 0`` (slope of
    ``log ratio`` against ``log δ`` at most ``+0.05``). Horn ``(ii)``:
    ``u/δ^{β₊}`` stays bounded (slope at least ``-0.05``). A profile that is
    not positive on the ladder is classified through ``|u|`` and flagged.
    """
    if potential.mu > 0.25:
        raise InapplicableError("the alternative needs mu <= 1/4")
    lad = _check_ladder(ladder)
    faces = None if face is None else [face]
    u = ladder_values(profile, lad, faces)[0]
    used_abs = bool(np.any(u <= 0))
    au = np.abs(u)
    if np.any(au == 0):
        raise InapplicableError("profile vanishes at a ladder point")
    bm, bp = potential.beta_minus, potential.beta_plus
    rm = au / lad**bm
    rp = au / lad**bp
    sm = _slope(np.log(rm), lad)
    sp = _slope(np.log(rp), lad)
    i_ok = sm <= SLOPE_BAND
    ii_ok = sp >= -SLOPE_BAND
    horn = {(True, False): "i", (False, True): "ii", (True, True): "both",
            (False, False): "neither"}[(i_ok, ii_ok)]
    return PLReport(horn, sm, sp, rm.tolist(), rp.tolist(),
                    bool(np.all(np.diff(rm) < 0)), used_abs)


# -- amplitude ----------------------------------------------------------------------
@dataclass
class AmplitudeReport:
    M: float
    c: float
    uncertainty: float
    residual: float
    log_model_residual: float
    mismatch: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def amplitude_fit(profile, beta: float, ladder=DEFAULT_LADDER, values=None) -> AmplitudeReport:
    """Fit ``u = M ℓ^{β/2} + c`` and compare against the log model.

    ``mismatch`` is set when the amplitude model leaves a residual more than
    ``MISMATCH_FACTOR`` times that of ``a ℓ + b log ℓ + c`` (and above 1e-8).
    """
    lad = _check_ladder(ladder)
    vals = ladder_values(profile, lad) if values is None else np.atleast_2d(values)
    l = np.tile(ell(lad), vals.shape[0])
    X = np.column_stack([l ** (0.5 * beta), np.ones_like(l)])
    coef, err, rms = _lstsq(X, np.ravel(vals))
    _, _, rms_log = fit_log_model(vals, lad)
    mismatch = rms > MISMATCH_FACTOR * rms_log and rms > 1e-8
    return AmplitudeReport(float(coef[0]), float(coef[1]), float(err[0]), rms, rms_log,
                           bool(mismatch))


# -- Keller-Osserman dominance -------------------------------------------------------
@dataclass
class KOReport:
    max_excess: float
    worst_x: float
    worst_delta: float
    passed: bool
    bound: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def ko_check(profile, A: float, kind: str = "L", tol: float = 1e-8) -> KOReport:
    """Largest ``u - bound`` over the nodes, ``bound = L_A(δ)`` or ``log(A/δ²)``."""
    d = profile.mesh.delta
    if kind == "L":
        bound = lambert.eval_L(A, np.minimum(d, math.sqrt(A / math.e)))
        if np.any(d > math.sqrt(A / math.e)):
            raise LambertDomainError("A is too small for L_A on this mesh")
    elif kind == "log":
        bound = np.log(A / d**2)
    else:
        raise InapplicableError(f"unknown bound kind {kind!r}")
    ex = profile.values - bound
    i = int(np.argmax(ex))
    return KOReport(float(ex[i]), float(profile.mesh.nodes[i]), float(d[i]),
                    bool(ex[i] <= tol), kind)


@dataclass
class RunVerdict:
    verdict: str
    ratio: AsymptoticsReport
    amplitude: AmplitudeReport | None
    extrapolated: bool

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "ratio": self.ratio.to_dict(),
                "amplitude": None if self.amplitude is None else self.amplitude.to_dict(),
                "extrapolated": self.extrapolated}


def run_verdict(result, beta: float | None = None, M: float | None = None,
                ladder=DEFAULT_LADDER) -> RunVerdict:
    """Verdict for a continuation run.

    The log-ratio fit is made on ladder values extrapolated to ``ε -> 0``.
    Runs with a prescribed amplitude are judged on the last profile with the
    ``ℓ^{β/2}`` model: ``large-with-amplitude-M`` when that model fits (no
    mismatch) with a positive amplitude.
    """
    lim = continuation_limit(result, ladder)
    rep = lim.report
    if M is not None:
        if beta is None:
            raise InapplicableError("amplitude verdicts need the borderline coefficient")
        amp = amplitude_fit(result.profile, beta, ladder)
        ok = (not amp.mismatch) and amp.M > RATIO_BAND
        return RunVerdict("large-with-amplitude-M" if ok else "inconclusive", rep, amp, True)
    return RunVerdict(rep.verdict, rep, None, True)
