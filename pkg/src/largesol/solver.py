"""Finite-difference solver for ``-Δu - q(δ) u/δ² + e^u = 0`` on radial meshes.

Second differences use the 3-point stencil on non-uniform nodes; the radial
term ``(N-1)/r u'`` uses the centered non-uniform first difference. At the
center of a ball the Laplacian is replaced by its symmetric limit
``N u''(0)``. Dirichlet nodes carry identity rows.

Large solutions are approximated by truncation continuation: Dirichlet
problems on ``{δ > ε_k}`` with blow-up-scale face data, ``ε_k -> 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bounds import (BoundFamily, PotentialSpec, search_A_keller_osserman, value_at)
from .errors import (BracketError, DivergenceError, GateError, OverflowGuard, ParameterError)
from .geometry import DomainSpec, Mesh, graded_mesh
from .hardy import cached_hardy, gate_mu

EXP_CAP = 700.0


@dataclass(frozen=True)
class SolverConfig:
    """Numerical settings shared by every solve.

    ``schedule`` is the decreasing list of truncation distances used by the
    continuation; ``epsilon`` is the truncation for single solves.
    """

    tol: float = 1e-10
    step_tol: float = 1e-9
    max_iter: int = 50
    n: int = 4000
    grading: float = 2.0
    epsilon: float = 1e-10
    schedule: tuple = tuple(10.0**-k for k in range(1, 5))
    data_policy: str = "auto"
    probes: tuple = (0.25, 0.5, 0.75)
    cauchy_tol: float = 1e-6
    damping_floor: float = 2.0**-20
    hardy_n: int = 1024

    def __post_init__(self):
        if not (self.tol > 0 and self.cauchy_tol > 0 and self.max_iter > 0):
            raise ParameterError("tolerances and iteration limits must be positive")
        s = np.asarray(self.schedule, float)
        if s.size and (np.any(np.diff(s) >= 0) or np.any(s <= 0)):
            raise ParameterError("schedule must be positive and strictly decreasing")
        if self.data_policy not in ("auto", "ko", "asymptotic", "log", "sub"):
            raise ParameterError(f"unknown data policy {self.data_policy!r}")

    def replace(self, **kw) -> "SolverConfig":
        d = dict(self.__dict__)
        d.update(kw)
        return SolverConfig(**d)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["schedule"] = list(self.schedule)
        d["probes"] = list(self.probes)
        return d


@dataclass
class BVProblem:
    """Dirichlet problem on the truncated domain ``{δ > epsilon}``.

    ``data`` maps each face to a number or to a :class:`BoundFamily`, which is
    evaluated at the truncation distance.
    """

    domain: DomainSpec
    potential: PotentialSpec
    data: dict
    epsilon: float
    n: int = 4000
    grading: float = 2.0
    rhs: float | None = None

    def __post_init__(self):
        faces = set(self.domain.faces)
        if set(self.data) != faces:
            raise ParameterError(f"boundary data must name exactly the faces {sorted(faces)}")

    def face_values(self) -> dict:
        out = {}
        for f, v in self.data.items():
            if isinstance(v, BoundFamily):
                v = float(value_at(v, self.domain, f, self.epsilon))
            out[f] = float(v)
        return out

    def to_dict(self) -> dict:
        data = {f: (v.to_dict() if isinstance(v, BoundFamily) else v)
                for f, v in self.data.items()}
        return {"domain": self.domain.to_dict(), "potential": self.potential.to_dict(),
                "data": data, "epsilon": self.epsilon, "n": self.n, "grading": self.grading,
                "rhs": self.rhs}


@dataclass
class SolutionProfile:
    mesh: Mesh
    values: np.ndarray
    residual_norm: float
    problem: BVProblem
    iterations: int
    damping: list = field(default_factory=list)

    @property
    def delta(self):
        return self.mesh.delta

    def at(self, x):
        return self.mesh.at(self.values, x)

    def sidecar(self) -> dict:
        return {"problem": self.problem.to_dict(), "residual_norm": self.residual_norm,
                "iterations": self.iterations, "damping": self.damping,
                "mesh": {"n": self.mesh.n, "epsilon": self.mesh.epsilon,
                         "grading": self.mesh.grading}}


# -- discrete operator ----------------------------------------------------------
class Operator:
    """Tridiagonal coefficients of ``-(u'' + (N-1)/r u') - q u/δ²`` on a mesh."""

    def __init__(self, mesh: Mesh, potential: PotentialSpec):
        n = mesh.n
        h = mesh.spacing
        hm = np.concatenate([[np.nan], h])
        hp = np.concatenate([h, [np.nan]])
        lo = np.zeros(n)
        di = np.zeros(n)
        up = np.zeros(n)
        inner = np.arange(1, n - 1)
        a, b = hm[inner], hp[inner]
        s = a + b
        # second difference
        lo[inner] = 2.0 / (a * s)
        up[inner] = 2.0 / (b * s)
        di[inner] = -2.0 / (a * b)
        if mesh.domain.radial:
            r = mesh.nodes[inner]
            k = (mesh.domain.dim - 1) / np.where(r > 0, r, np.inf)
            lo[inner] += k * (-b / (a * s))
            di[inner] += k * ((b - a) / (a * b))
            up[inner] += k * (a / (b * s))
        if mesh.domain.kind == "ball":
            # symmetric center: N u''(0) ≈ 2N (u1 - u0)/h0²
            N = mesh.domain.dim
            di[0] = -2.0 * N / h[0] ** 2
            up[0] = 2.0 * N / h[0] ** 2
        # operator is minus the Laplacian minus the potential
        self.lo, self.di, self.up = -lo, -di, -up
        self.pot = -potential.coefficient(mesh.delta) / mesh.delta**2
        self.mesh = mesh
        self.bc = mesh.dirichlet

    def apply(self, u):
        out = self.di * u + self.pot * u
        out[1:] += self.lo[1:] * u[:-1]
        out[:-1] += self.up[:-1] * u[1:]
        return out


def _exp(u):
    if np.any(u > EXP_CAP):
        raise OverflowGuard(f"exponential argument {float(np.max(u)):.1f} exceeds {EXP_CAP}")
    return np.exp(u)


def _residual(op: Operator, u, bvals, rhs, nonlinear):
    """Nodal residual and the per-row magnitude used to normalize it."""
    F = op.apply(u)
    mag = np.abs(op.di * u) + np.abs(op.pot * u)
    mag[1:] += np.abs(op.lo[1:] * u[:-1])
    mag[:-1] += np.abs(op.up[:-1] * u[1:])
    if nonlinear:
        e = _exp(u)
        F = F + e
        mag += e
    if rhs is not None:
        F = F - rhs
        mag += abs(rhs)
    F[op.bc] = u[op.bc] - bvals[op.bc]
    mag[op.bc] = np.maximum(1.0, np.abs(bvals[op.bc]))
    return F, mag


def _scaled_norm(F, mag):
    """Row-wise relative residual ``|F_i| / Σ|terms_i|`` (a backward error)."""
    return float(np.max(np.abs(F) / np.maximum(mag, np.finfo(float).tiny)))


def _newton_solve(op: Operator, sub, diag, sup, F):
    sub = sub.copy()
    sup = sup.copy()
    diag = diag.copy()
    bc = op.bc
    sub[bc] = 0.0
    sup[bc] = 0.0
    diag[bc] = 1.0
    return kernels.thomas(sub, diag, sup, -F)


def solve_dirichlet(problem: BVProblem, config: SolverConfig = SolverConfig(), *,
                    initial=None, bracket=None, mesh: Mesh | None = None) -> SolutionProfile:
    """Damped Newton solve of the truncated Dirichlet problem.

    Parameters
    ----------
    initial : array or callable, optional
        Nodal initial guess, or a function of ``(mesh)`` returning one.
    bracket : (lower, upper), optional
        Nodal sub/super profiles the solution must lie between.

    Raises
    ------
    DivergenceError
        When the line search hits the damping floor twice in a row.
    BracketError
        When the accepted solution leaves the supplied bracket.
    """
    if mesh is None:
        mesh = graded_mesh(problem.domain, problem.n, problem.epsilon, problem.grading)
    op = Operator(mesh, problem.potential)
    fv = problem.face_values()
    bvals = np.zeros(mesh.n)
    for f, v in fv.items():
        bvals[mesh.dirichlet & (mesh.face_of == f)] = v
    nonlinear = problem.rhs is None
    if initial is None:
        u = np.zeros(mesh.n)
    elif callable(initial):
        u = np.asarray(initial(mesh), float).copy()
    else:
        u = np.asarray(initial, float).copy()
    u[mesh.dirichlet] = bvals[mesh.dirichlet]
    F, mag = _residual(op, u, bvals, problem.rhs, nonlinear)
    norm = _scaled_norm(F, mag)
    trace = [norm]
    steps = []
    damping = []
    it = 0
    stalls = 0
    last_step = math.inf
    while norm > config.tol or last_step > config.step_tol:
        if it >= config.max_iter:
            raise DivergenceError(f"no convergence in {config.max_iter} Newton steps "
                                  f"(residual {norm:.3e})", trace)
        it += 1
        diag = op.di + op.pot + (_exp(u) if nonlinear else 0.0)
        du = _newton_solve(op, op.lo, diag, op.up, F)
        lam = 1.0
        while True:
            trial = u + lam * du
            try:
                Ft, mt = _residual(op, trial, bvals, problem.rhs, nonlinear)
                nt = _scaled_norm(Ft, mt)
            except OverflowGuard:
                nt = math.inf
            if np.isfinite(nt) and nt < norm * (1 - 1e-4 * lam) or nt <= config.tol:
                break
            lam *= 0.5
            if lam < config.damping_floor:
                break
        if lam < config.damping_floor:
            stalls += 1
            if stalls >= 2:
                raise DivergenceError("line search reached the damping floor", trace)
            u = _monotone_sweeps(op, u, bvals, problem.rhs, nonlinear)
            F, mag = _residual(op, u, bvals, problem.rhs, nonlinear)
            norm = _scaled_norm(F, mag)
            last_step = math.inf
            damping.append(0.0)
            trace.append(norm)
            continue
        stalls = 0
        last_step = float(np.max(np.abs(lam * du) / np.maximum(1.0, np.abs(u))))
        u, F, mag, norm = trial, Ft, mt, nt
        damping.append(lam)
        trace.append(norm)
        steps.append(last_step)
    if not np.all(np.isfinite(u)):
        raise DivergenceError("non-finite nodal values", trace)
    prof = SolutionProfile(mesh, u, norm, problem, it, damping)
    if bracket is not None:
        check_bracket(prof, *bracket)
    return prof


def _monotone_sweeps(op: Operator, u, bvals, rhs, nonlinear, sweeps=50):
    """Fixed-point sweeps ``(L + K) u⁺ = K u - e^u`` with ``K = e^{u}`` frozen."""
    if not nonlinear:
        return u
    K = _exp(np.minimum(u, EXP_CAP))
    diag = op.di + op.pot + K
    for _ in range(sweeps):
        r = K * u - _exp(u) + (0.0 if rhs is None else rhs)
        r[op.bc] = bvals[op.bc]
        sub, sup, d = op.lo.copy(), op.up.copy(), diag.copy()
        sub[op.bc] = sup[op.bc] = 0.0
        d[op.bc] = 1.0
        u = kernels.thomas(sub, d, sup, r)
    return u


def check_bracket(profile: SolutionProfile, lower, upper, atol: float | None = None):
    """Raise :class:`BracketError` unless ``lower <= u <= upper`` nodewise."""
    u = profile.values
    tol = 1e-9 * np.maximum(1.0, np.abs(u)) if atol is None else atol
    if lower is not None:
        bad = np.flatnonzero(u < np.asarray(lower) - tol)
        if bad.size:
            raise BracketError(f"solution below the lower bracket at {bad.size} nodes "
                               f"(first x={profile.mesh.nodes[bad[0]]:.6g})")
    if upper is not None:
        bad = np.flatnonzero(u > np.asarray(upper) + tol)
        if bad.size:
            raise BracketError(f"solution above the upper bracket at {bad.size} nodes "
                               f"(first x={profile.mesh.nodes[bad[0]]:.6g})")


# -- torsion and zero boundary data ----------------------------------------------
def _gate(domain, potential, config):
    hardy = cached_hardy(domain, config.hardy_n)
    verdict = gate_mu(potential.mu, hardy)
    if verdict != "admissible":
        raise GateError(f"mu={potential.mu} is {verdict} against the discrete Hardy "
                        f"constant {hardy.value:.6f}")
    return hardy


def _zero_data(domain):
    return {f: 0.0 for f in domain.faces}


def solve_torsion(domain: DomainSpec, potential: PotentialSpec,
                  config: SolverConfig = SolverConfig()) -> SolutionProfile:
    """Solution ``φ`` of ``-Δφ - q φ/δ² = -1`` vanishing on the truncation faces."""
    _gate(domain, potential, config)
    prob = BVProblem(domain, potential, _zero_data(domain), config.epsilon, config.n,
                     config.grading, rhs=-1.0)
    return solve_dirichlet(prob, config)


def solve_zero_bc(domain: DomainSpec, potential: PotentialSpec,
                  config: SolverConfig = SolverConfig(), phi: SolutionProfile | None = None):
    """Solution ``u₀`` with zero face data, started from the torsion profile.

    Returns ``(u₀, φ)``; the sandwich ``φ <= u₀ <= 0`` is enforced.
    """
    if phi is None:
        phi = solve_torsion(domain, potential, config)
    prob = BVProblem(domain, potential, _zero_data(domain), config.epsilon, config.n,
                     config.grading)
    u0 = solve_dirichlet(prob, config, initial=phi.values, mesh=phi.mesh,
                         bracket=(phi.values, np.zeros(phi.mesh.n)))
    return u0, phi


# -- large solutions -------------------------------------------------------------
def probe_points(domain: DomainSpec, fractions) -> np.ndarray:
    """Reduced coordinates at the given fractions of the domain's extent."""
    f = np.asarray(fractions, float)
    lo = 0.0 if domain.kind == "ball" else domain.lo
    return lo + f * (domain.hi - lo)


@dataclass
class DataPolicy:
    """Face data ``M(ε)`` for the continuation and a matching initial profile."""

    name: str
    func: object
    params: dict

    def __call__(self, domain, face, eps):
        return float(self.func(domain, face, np.asarray(eps, float)))

    def profile(self, domain, face, delta):
        return self.func(domain, face, np.asarray(delta, float))


def make_data_policy(domain: DomainSpec, potential: PotentialSpec, name: str = "auto",
                     M: float | None = None, B: float | None = None) -> DataPolicy:
    """Blow-up-scale face data for truncation continuation.

    ``auto`` picks: borderline potentials ``log(B/ε²)`` for ``β < 2`` (or
    ``M ℓ(ε)^{β/2}`` when ``M`` is given) and ``log(A/ε²)`` otherwise, with
    ``μ > 0`` treated as below;
    ``μ = 0`` the two-term asymptotics ``log(2/ε²) + (N-1) H₀ ε``; ``μ > 0``
    the Keller–Osserman profile ``L_{c²A}(ε)``; ``μ < 0`` ``log(c²A/ε²)``.
    ``sub`` (``μ > 0``) uses the near-boundary branch of the global
    sub-solution, so the continuation increases instead of decreasing.
    """
    from .geometry import mean_curvature
    from .lambert import eval_L

    beta = potential.beta
    if name == "auto":
        if beta is not None:
            name = "ko" if potential.mu > 0 else "log"
        elif potential.mu == 0:
            name = "asymptotic"
        elif potential.mu > 0:
            name = "ko"
        else:
            name = "log"
    if beta is not None and M is not None:
        if not M > 0:
            raise ParameterError("amplitude M must be positive")
        m = 0.5 * beta
        return DataPolicy("amplitude", lambda d, f, e: M * (-2.0 * np.log(e)) ** m,
                          {"M": M, "beta": beta})
    if name == "asymptotic":
        N = domain.dim
        H = {f: mean_curvature(domain, f) for f in domain.faces}
        return DataPolicy("asymptotic",
                          lambda d, f, e: np.log(2.0 / e**2) + (N - 1) * H[f] * e, {})
    if name == "log":
        if beta is not None and beta < 2 and potential.mu == 0:
            if B is None:
                B = (2.0 - beta) / 2.0
            if not 0 < B < 2 - beta:
                raise ParameterError(f"B must lie in (0, {2 - beta:g}) for beta={beta:g}")
            return DataPolicy("log", lambda d, f, e: np.log(B / e**2), {"B": B})
        if potential.mu > 0:
            raise ParameterError("log data needs mu <= 0")
        A = search_A_keller_osserman(domain, potential, kind="LogSuper").delta_amplitude
        return DataPolicy("log", lambda d, f, e: np.log(A / e**2), {"A": A})
    if name == "sub":
        if not potential.mu > 0 or beta is not None:
            raise ParameterError("sub-solution data needs mu > 0 and no borderline term")
        from .bounds import _global_branch, build_global_sub
        phi = solve_torsion(domain, potential, SolverConfig(n=2000, epsilon=1e-10))
        fam = build_global_sub(potential, phi)
        hi = fam.strip[1]
        return DataPolicy("sub", lambda d, f, e: _global_branch(fam, np.minimum(e, hi))[0],
                          {"C": fam.p("C"), "eps0": fam.p("eps0")})
    if name == "ko":
        A = search_A_keller_osserman(domain, potential).delta_amplitude
        return DataPolicy("ko", lambda d, f, e: eval_L(A, np.minimum(e, math.sqrt(A / math.e))),
                          {"A": A})
    raise ParameterError(f"unknown data policy {name!r}")


@dataclass
class ContinuationResult:
    profile: SolutionProfile
    profiles: list
    schedule: list
    probe_x: np.ndarray
    probe_values: np.ndarray
    increments: np.ndarray
    policy: dict

    @property
    def cauchy(self) -> float:
        """Largest probe change over the last continuation step."""
        return float(np.max(np.abs(self.increments[-1]))) if len(self.increments) else math.inf

    def converged(self, tol: float) -> bool:
        return self.cauchy <= tol

    def diagnostics(self) -> dict:
        return {"schedule": list(self.schedule), "probe_x": self.probe_x.tolist(),
                "probe_values": self.probe_values.tolist(),
                "increments": [list(map(float, r)) for r in self.increments],
                "cauchy": self.cauchy, "policy": self.policy}


def _warm_start(prev: SolutionProfile | None, policy: DataPolicy, domain: DomainSpec):
    def guess(mesh: Mesh):
        u = np.empty(mesh.n)
        for f in domain.faces:
            sel = mesh.face_of == f
            d = mesh.delta[sel]
            g = policy.profile(domain, f, d)
            if prev is not None:
                inside = d >= prev.mesh.epsilon
                g = np.where(inside, prev.mesh.interpolate(prev.values, f, np.maximum(
                    d, prev.mesh.epsilon)), g)
            u[sel] = g
        return u
    return guess


def continuation(domain: DomainSpec, potential: PotentialSpec, policy: DataPolicy,
                 config: SolverConfig) -> ContinuationResult:
    """Dirichlet solves along ``config.schedule`` with face data from ``policy``."""
    px = probe_points(domain, config.probes)
    prev = None
    profiles, vals = [], []
    for eps in config.schedule:
        data = {f: policy(domain, f, eps) for f in domain.faces}
        prob = BVProblem(domain, potential, data, eps, config.n, config.grading)
        prof = solve_dirichlet(prob, config, initial=_warm_start(prev, policy, domain))
        profiles.append(prof)
        vals.append(prof.at(px))
        prev = prof
    vals = np.array(vals)
    inc = np.diff(vals, axis=0)
    return ContinuationResult(prev, profiles, list(config.schedule), px, vals, inc,
                              {"name": policy.name, **policy.params})


def solve_large(domain: DomainSpec, potential: PotentialSpec,
                config: SolverConfig = SolverConfig()) -> ContinuationResult:
    """Truncation continuation toward a large solution (or its vanishing limit)."""
    if potential.mu > 0:
        _gate(domain, potential, config)
    policy = make_data_policy(domain, potential, config.data_policy)
    return continuation(domain, potential, policy, config)


def solve_large_borderline(domain: DomainSpec, beta: float, M: float | None = None,
                           config: SolverConfig = SolverConfig(), B: float | None = None,
                           mu: float = 0.0) -> ContinuationResult:
    """Continuation under the potential ``+γ(δ)/δ²``.

    Without ``M`` the face data is ``log(B/ε²)`` (``0 < B < 2 - β``) when
    ``β < 2`` and the Keller–Osserman ``log(A/ε²)`` otherwise; with ``M`` it
    is ``M (log ε⁻²)^{β/2}``.
    """
    pot = PotentialSpec(mu, beta)
    if M is None and beta >= 2 and B is not None:
        raise ParameterError("B is only used for beta < 2")
    if M is None and mu > 0:
        _gate(domain, pot, config)
        policy = make_data_policy(domain, pot, "ko")
    elif M is None and beta < 2:
        policy = make_data_policy(domain, pot, "log", B=B)
    elif M is None:
        A = search_A_keller_osserman(domain, pot, kind="LogSuper").delta_amplitude
        policy = DataPolicy("log", lambda d, f, e: np.log(A / e**2), {"A": A})
    else:
        policy = make_data_policy(domain, pot, M=M)
    return continuation(domain, pot, policy, config)


def uniqueness_probe(domain: DomainSpec, potential: PotentialSpec, config: SolverConfig,
                     schedules) -> float:
    """Largest probe discrepancy between continuations on two schedules."""
    a, b = (solve_large(domain, potential, config.replace(schedule=tuple(s)))
            for s in schedules)
    return float(np.max(np.abs(a.probe_values[-1] - b.probe_values[-1])))
