"""Acceptance criteria, one test per criterion.

Every test prints a single ``[PASS]``/``[FAIL]`` line before asserting, so
the outcome of each criterion is visible even under ``pytest -q``.
"""
import functools
import math
import time

import numpy as np
import pytest

from largesol import analysis as A
from largesol import bounds as B
from largesol import solver as S
from largesol.geometry import Annulus, Ball, Interval, graded_mesh
from largesol.hardy import assemble_pencil, hardy_constant
from largesol.lambert import eval_L, implicit_residual

from catalog import FD_FAMILIES, catalog, derivative_errors
from oracles import L_bisect, dense_generalized_min, dense_linear_solve, exact_large_interval

I = Interval(0.0, 1.0)
DEEP = tuple(10.0 ** (-2 * k) for k in range(1, 16))
HARDY_SCHEDULE = tuple(10.0**-k for k in range(1, 9))


def report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}")
    assert ok, detail


# -- shared runs ------------------------------------------------------------------
@functools.lru_cache(maxsize=None)
def large_run(domain, mu, schedule=None, beta=None, M=None):
    cfg = S.SolverConfig() if schedule is None else S.SolverConfig(schedule=schedule)
    t = time.perf_counter()
    if beta is None:
        res = S.solve_large(domain, B.PotentialSpec(mu), cfg)
    else:
        res = S.solve_large_borderline(domain, beta, M, cfg, mu=mu)
    return res, time.perf_counter() - t


def ko_reference(domain, potential):
    if potential.mu > 0:
        return B.search_A_keller_osserman(domain, potential).delta_amplitude, "L"
    return B.search_A_keller_osserman(domain, potential, kind="LogSuper").delta_amplitude, "log"


# -- criteria ---------------------------------------------------------------------
def test_criterion_01_exact_solution(capsys):
    cfg = S.SolverConfig(schedule=tuple(10.0**-k for k in range(1, 5)), n=4000, grading=2.0)
    t = time.perf_counter()
    res = S.solve_large(I, B.PotentialSpec(0.0), cfg)
    elapsed = time.perf_counter() - t
    err = float(np.max(np.abs(res.probe_values[-1] - exact_large_interval(res.probe_x))))
    report(capsys, 1, "exact large solution at probes", err <= 1e-5 and elapsed < 10,
           f"max probe error {err:.2e} (tol 1e-5), {elapsed:.2f} s (limit 10 s)")


def test_criterion_02_lambert(capsys):
    rng = np.random.default_rng(2024)
    t = 10.0 ** rng.uniform(-12, 0, 10_000)
    A_ = math.e * t * t * (1 + 10.0 ** rng.uniform(-6, 12, t.size))
    L = eval_L(A_, t)
    res = float(np.max(implicit_residual(A_, t, L)))
    ref = np.array([L_bisect(a, s) for a, s in zip(A_, t)])
    agree = float(np.max(np.abs(L - ref) / ref))
    lo = float(np.min(L))
    tg = np.geomspace(1e-10, 0.5, 100)
    Ag = np.geomspace(1.0, 1e6, 100)
    TT, AA = np.meshgrid(tg, Ag)
    inside = AA >= math.e * TT**2
    G = np.where(inside, eval_L(AA, np.where(inside, TT, 1e-10)), np.nan)
    inc_A = np.diff(G, axis=0)
    dec_t = np.diff(G, axis=1)
    mono = bool(np.all(inc_A[np.isfinite(inc_A)] > 0) and np.all(dec_t[np.isfinite(dec_t)] < 0))
    ok = res <= 1e-12 and agree <= 1e-12 and lo >= 1 and mono
    report(capsys, 2, "Lambert branch", ok,
           f"residual {res:.1e}, oracle {agree:.1e}, min L {lo:.4f}, monotone {mono}")


def test_criterion_03_ko_dominance(capsys):
    runs = [(I, B.PotentialSpec(0.0), large_run(I, 0.0)[0]),
            (I, B.PotentialSpec(0.2), large_run(I, 0.2, HARDY_SCHEDULE)[0]),
            (I, B.PotentialSpec(-0.5), large_run(I, -0.5, DEEP)[0]),
            (I, B.PotentialSpec(0, 1.0), large_run(I, 0.0, DEEP, 1.0)[0]),
            (I, B.PotentialSpec(0, 3.0), large_run(I, 0.0, DEEP, 3.0)[0]),
            (I, B.PotentialSpec(0, 1.0), large_run(I, 0.0, DEEP, 1.0, 2.0)[0]),
            (I, B.PotentialSpec(0.2, 1.0), large_run(I, 0.2, HARDY_SCHEDULE, 1.0)[0]),
            (I, B.PotentialSpec(-0.5, 1.0), large_run(I, -0.5, DEEP, 1.0)[0]),
            (Ball(3, 1.0), B.PotentialSpec(0.2),
             large_run(Ball(3, 1.0), 0.2, HARDY_SCHEDULE)[0]),
            (Annulus(2, 1.0, 2.0), B.PotentialSpec(0.0),
             large_run(Annulus(2, 1.0, 2.0), 0.0, HARDY_SCHEDULE)[0])]
    for s in ((2.0 ** -k for k in range(20, 24)), (3.0 ** -k for k in range(13, 17))):
        runs.append((I, B.PotentialSpec(0.2), large_run(I, 0.2, tuple(s))[0]))
    profiles, violations, worst = 0, 0, -math.inf
    for dom, pot, res in runs:
        amp, kind = ko_reference(dom, pot)
        for prof in res.profiles:
            rep = A.ko_check(prof, amp, kind)
            profiles += 1
            violations += not rep.passed
            worst = max(worst, rep.max_excess)
    for mu in (-1.0, 0.0, 0.2):
        pot = B.PotentialSpec(mu)
        u0, _ = S.solve_zero_bc(I, pot)
        rep = A.ko_check(u0, *ko_reference(I, pot))
        profiles += 1
        violations += not rep.passed
        worst = max(worst, rep.max_excess)
    report(capsys, 3, "Keller-Osserman dominance", violations == 0,
           f"{profiles} profiles, {violations} violations, worst u - bound {worst:.2e}")


def test_criterion_04_hardy(capsys):
    lines, ok = [], True
    for dom in (I, Ball(3, 1.0)):
        vals = [hardy_constant(dom, n=n) for n in (256, 1024, 4096)]
        v = [r.value for r in vals]
        resid = max(r.residual for r in vals)
        mesh = graded_mesh(dom, 256, 1e-8 * 2 * dom.inradius)
        kd, ko, md, mo = assemble_pencil(mesh)
        free = slice(int(np.argmax(~mesh.dirichlet)), mesh.n - int(np.argmax(~mesh.dirichlet[::-1])))
        K = np.diag(kd[free]) + np.diag(ko[free][:-1], 1) + np.diag(ko[free][:-1], -1)
        Mm = np.diag(md[free]) + np.diag(mo[free][:-1], 1) + np.diag(mo[free][:-1], -1)
        dense = abs(dense_generalized_min(K, Mm) - v[0])
        good = (min(v) >= 0.25 and v[0] >= v[1] >= v[2] and v[2] <= 0.30
                and resid <= 1e-10 and dense <= 1e-10)
        ok &= good
        lines.append(f"{dom.kind} {v[0]:.5f}/{v[1]:.5f}/{v[2]:.5f} res {resid:.0e} "
                     f"dense {dense:.0e}")
    report(capsys, 4, "Hardy constant", ok, "; ".join(lines))


def test_criterion_05_zero_bc_sandwich(capsys):
    ok, parts = True, []
    for mu in (-1.0, 0.0, 0.2):
        u0, phi = S.solve_zero_bc(I, B.PotentialSpec(mu))
        good = bool(np.all(phi.values <= u0.values + 1e-9) and np.all(u0.values <= 1e-9))
        ok &= good
        parts.append(f"mu={mu:g} {'ok' if good else 'broken'}")
    phi0 = S.solve_torsion(I, B.PotentialSpec(0.0))
    xi, v = dense_linear_solve(np.linspace(0, 1, 2001), 0.0)
    t_err = abs(phi0.at(0.5) + 0.125)
    o_err = abs(phi0.at(0.5) - v[xi.size // 2])
    ok &= t_err <= 1e-8 and o_err <= 1e-8
    report(capsys, 5, "zero-boundary sandwich", ok,
           f"{', '.join(parts)}; torsion(0.5) error {t_err:.1e}, dense oracle {o_err:.1e}")


def test_criterion_06_asymptotic_law(capsys):
    res, elapsed = large_run(I, 0.2, HARDY_SCHEDULE)
    t = time.perf_counter()
    a = A.boundary_ratio(res.profile).limit
    lim = A.continuation_limit(res).report.limit
    elapsed += time.perf_counter() - t
    ok = 0.9 <= a <= 1.1 and abs(lim - 1) <= 0.05 and elapsed < 30
    report(capsys, 6, "asymptotic law mu=0.2", ok,
           f"a = {a:.4f}, extrapolated limit {lim:.4f}, {elapsed:.2f} s (limit 30 s)")


def test_criterion_07_nonexistence(capsys):
    pot = B.PotentialSpec(-0.5)
    res, _ = large_run(I, -0.5, DEEP)
    verdict = A.run_verdict(res).verdict
    pl = A.pl_classify(res.profile, pot)
    ok = res.cauchy <= 1e-6 and verdict == "vanishing" and pl.horn == "ii" and pl.minus_decreasing
    report(capsys, 7, "nonexistence signature mu=-0.5", ok,
           f"Cauchy {res.cauchy:.1e}, verdict {verdict}, horn {pl.horn}, "
           f"beta- ratio decreasing {pl.minus_decreasing}")


def test_criterion_08_borderline(capsys):
    v1 = A.run_verdict(large_run(I, 0.0, DEEP, 1.0)[0]).verdict
    v3 = A.run_verdict(large_run(I, 0.0, DEEP, 3.0)[0]).verdict
    M = A.amplitude_fit(large_run(I, 0.0, DEEP, 1.0, 2.0)[0].profile, 1.0).M
    flips = True
    for beta in (1.0, 3.0):
        pot = B.PotentialSpec(0, beta)
        for m in np.round(np.arange(0.05, beta + 0.5, 0.05), 10):
            obs = B.classify_on_strip(B.LogPower(m), pot, I, samples=200).observed
            if m <= beta / 2 - 0.05 + 1e-9:
                flips &= obs == "super"
            elif m >= beta / 2 + 0.05 - 1e-9:
                flips &= obs == "sub"
    ok = v1 == "large-with-ratio-1" and v3 == "vanishing" and 1.8 <= M <= 2.2 and flips
    report(capsys, 8, "borderline threshold", ok,
           f"beta=1 {v1}, beta=3 {v3}, M fit {M:.3f}, LogPower flip {flips}")


def test_criterion_09_uniqueness(capsys):
    a = large_run(I, 0.2, tuple(2.0 ** -k for k in range(20, 24)))[0]
    b = large_run(I, 0.2, tuple(3.0 ** -k for k in range(13, 17)))[0]
    gap = float(np.max(np.abs(a.probe_values[-1] - b.probe_values[-1])))
    report(capsys, 9, "uniqueness probe", gap <= 1e-4, f"probe discrepancy {gap:.2e} (tol 1e-4)")


def test_criterion_10_catalog(capsys):
    families, bad = 0, []
    for dom in (I, Ball(3, 1.0), Annulus(2, 1.0, 3.0)):
        for fam, pot in catalog(dom):
            r = B.classify_on_strip(fam, pot, dom, samples=1000)
            families += 1
            if not r.passed:
                bad.append(f"{fam.kind}@{dom.kind}")
    worst = max(max(derivative_errors(f)) for f in FD_FAMILIES)
    ok = not bad and worst <= 1e-6
    report(capsys, 10, "catalog sign suite", ok,
           f"{families} family checks, failures {bad or 'none'}, worst derivative error "
           f"{worst:.1e}")


def test_criterion_11_comparison(capsys):
    rng = np.random.default_rng(11)
    pot = B.PotentialSpec(0.2)
    violations = 0
    for _ in range(50):
        lo = rng.uniform(-3.0, 10.0, 2)
        hi = lo + rng.uniform(0.0, 4.0, 2)
        a = S.solve_dirichlet(S.BVProblem(I, pot, dict(zip(I.faces, lo)), 1e-6, 1000))
        b = S.solve_dirichlet(S.BVProblem(I, pot, dict(zip(I.faces, hi)), 1e-6, 1000))
        violations += int(np.sum(a.values > b.values + 1e-12 * np.abs(b.values).max()))
    report(capsys, 11, "discrete comparison principle", violations == 0,
           f"50 pairs, {violations} nodal violations")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
