"""The Keller–Osserman profile ``L_A(t)`` and the lower Lambert W branch.

``L_A(t)`` is the solution ``L >= 1`` of ``e^L / L = A / t^2``. It exists for
``A >= e t^2`` and equals ``-W_{-1}(-t^2/A)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import LambertDomainError

INV_E = math.exp(-1.0)
BRANCH_TOL = 1e-14


def lambert_w_m1(s, full_output=False):
    """Lower real branch ``W_{-1}(s)`` for ``-1/e <= s < 0``.

    Parameters
    ----------
    s : float
    full_output : bool
        Also return a flag that is True when ``s`` lies within 1e-14 of the
        branch point, where ``-1`` is returned as the best representable value.

    Raises
    ------
    LambertDomainError
        If ``s`` is outside ``[-1/e, 0)``.
    """
    s = float(s)
    if not (s < 0.0) or s < -INV_E - BRANCH_TOL:
        raise LambertDomainError(f"W_-1 undefined at s={s!r}; need -1/e < s < 0")
    if abs(s + INV_E) < BRANCH_TOL:
        w, flag = -1.0, True
    else:
        w, flag = kernels.wm1_scalar(s), False
    return (w, flag) if full_output else w


def _check_domain(A, t):
    A = np.asarray(A, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(A <= 0) or np.any(t <= 0):
        raise LambertDomainError("L_A(t) needs A > 0 and t > 0")
    s = -(t * t) / A
    if np.any(s < -INV_E - BRANCH_TOL):
        raise LambertDomainError("L_A(t) undefined: A < e t^2")
    return s


def eval_L(A, t):
    """``L_A(t)``, vectorized over ``A`` and ``t``."""
    s = _check_domain(A, t)
    near = np.abs(s + INV_E) < BRANCH_TOL
    safe = np.where(near, -0.5 * INV_E, s)
    w = kernels.wm1_array(np.atleast_1d(safe)).reshape(safe.shape)
    L = np.where(near, 1.0, -w)
    return float(L) if L.ndim == 0 else L


def dL(A, t):
    """First and second derivatives of ``L_A`` in ``t``."""
    L = np.asarray(eval_L(A, t))
    t = np.asarray(t, float)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = -2.0 * L / (t * (L - 1.0))
        d2 = 2.0 * L / (t * t * (L - 1.0)) * (1.0 - 2.0 / (L - 1.0) ** 2)
    return L, d1, d2


def implicit_residual(A, t, L):
    """Relative residual of ``e^L/L = A/t^2``, evaluated in log form."""
    A = np.asarray(A, float)
    t = np.asarray(t, float)
    L = np.asarray(L, float)
    return np.abs(np.expm1(L - np.log(L) - np.log(A) + 2 * np.log(t)))


def L_lower_bounds(A, t, depth=3):
    """Iterated-log lower bounds ``log(A/t²)``, ``+ log log(A/t²)``, ...

    Returns ``(bounds, truncated)``; ``truncated`` is True when a logarithm of
    a non-positive number would be needed before reaching ``depth``.
    """
    if depth not in (1, 2, 3):
        raise ValueError("depth must be 1, 2 or 3")
    _check_domain(A, t)
    x1 = math.log(A / (t * t))
    out = [x1]
    prev = x1
    for _ in range(depth - 1):
        if prev <= 0:
            return out, True
        prev = x1 + math.log(prev)
        out.append(prev)
    return out, False


@dataclass(frozen=True)
class KOProfile:
    """``t -> L_A(t)`` for a fixed amplitude ``A``."""

    A: float

    @property
    def t_max(self) -> float:
        """Largest ``t`` in the domain of definition (``A = e t²``)."""
        return math.sqrt(self.A / math.e)

    def __call__(self, t):
        return eval_L(self.A, t)
