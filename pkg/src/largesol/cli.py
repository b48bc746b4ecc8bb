"""Command-line batch runner.

Every run writes into ``<out>/<subcommand>-<hash12>/`` and appends one
record to ``<out>/runs.jsonl``. Exit status: 0 success, 2 verdict-level
failure, 1 operational error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import scipy

from . import analysis, bounds, kernels, lambert
from .config import ConfigError, ExperimentConfig, atomic_write, canonical_json
from .errors import LabError
from .geometry import DomainSpec, graded_mesh
from .hardy import hardy_constant
from .solver import (BVProblem, SolutionProfile, solve_dirichlet, solve_large,
                     solve_large_borderline)

from . import __version__

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2
SUBCOMMANDS = ("hardy", "solve", "large", "borderline", "bounds", "analyze", "matrix",
               "lambert", "export")
OPEN_VERDICT = "open — reported, not asserted"

DEEP = tuple(10.0 ** (-2 * k) for k in range(1, 16))
HARDY_SCHEDULE = tuple(10.0**-k for k in range(1, 9))

# (row id, table column, mu, beta, expected) with expected "exists",
# "none", or None for the critical cell that is reported only.
MATRIX = (
    ("mu-negative", "mu", -0.5, None, "none"),
    ("mu-zero", "mu", 0.0, None, "exists"),
    ("mu-hardy", "mu", 0.2, None, "exists"),
    ("beta-super", "beta", 0.0, 3.0, "none"),
    ("beta-sub", "beta", 0.0, 1.0, "exists"),
    ("beta-critical", "beta", 0.0, 2.0, None),
    ("mixed-mu-negative", "mu-beta", -0.5, 1.0, "none"),
    ("mixed-mu-hardy", "mu-beta", 0.2, 1.0, "exists"),
)


class UsageError(LabError):
    pass


# -- artifacts -------------------------------------------------------------------
def _fmt(x) -> str:
    return repr(float(x))


def profile_csv(profile, config_hash: str) -> str:
    """``x, δ, u`` per node behind a single ``#`` header line."""
    buf = io.StringIO()
    buf.write(f"# columns=x,delta,u config={config_hash}\n")
    m = profile.mesh
    order = np.argsort(m.nodes, kind="stable")
    for i in order:
        buf.write(f"{_fmt(m.nodes[i])},{_fmt(m.delta[i])},{_fmt(profile.values[i])}\n")
    return buf.getvalue()


def read_profile_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise UsageError(f"{path}: missing '#' header line")
        meta = dict(tok.split("=", 1) for tok in header[1:].split() if "=" in tok)
        rows = np.array([[float(v) for v in r] for r in csv.reader(fh) if r], float)
    if rows.ndim != 2 or rows.shape[1] != 3:
        raise UsageError(f"{path}: expected three columns x,delta,u")
    return rows, meta


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def write_json(path, obj):
    atomic_write(path, canonical_json(_jsonable(obj)))


def write_profile(run_dir, name, profile, cfg_hash, extra=None):
    atomic_write(os.path.join(run_dir, f"{name}.csv"), profile_csv(profile, cfg_hash))
    side = profile.sidecar()
    side["config_hash"] = cfg_hash
    if extra:
        side.update(extra)
    write_json(os.path.join(run_dir, f"{name}.json"), side)


def versions() -> dict:
    return {"largesol": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": sys.version.split()[0], "kernels": kernels.BACKEND}


def append_record(out, record):
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "runs.jsonl"), "a", encoding="utf-8") as fh:
        fh.write(json.dumps(_jsonable(record), sort_keys=True) + "\n")


# -- subcommands -------------------------------------------------------------------
def _ko_reference(domain, potential):
    """Searched Keller–Osserman amplitude and the bound kind that applies."""
    if potential.mu > 0:
        s = bounds.search_A_keller_osserman(domain, potential)
        return s.delta_amplitude, "L"
    s = bounds.search_A_keller_osserman(domain, potential, kind="LogSuper")
    return s.delta_amplitude, "log"


def _verdict_block(result, cfg, potential, M=None):
    domain = result.profile.problem.domain
    A, kind = _ko_reference(domain, potential)
    ko = analysis.ko_check(result.profile, A, kind)
    verdict = analysis.run_verdict(result, potential.beta, M, cfg.ladder)
    block = {"verdict": verdict.to_dict(), "ko": ko.to_dict(), "ko_amplitude": A,
             "continuation": result.diagnostics()}
    if potential.mu <= 0.25 and potential.beta is None:
        try:
            block["pl"] = analysis.pl_classify(result.profile, potential, cfg.ladder).to_dict()
        except LabError as exc:
            block["pl"] = {"error": str(exc)}
    # Cauchy convergence is soft: amplitude-data runs approach their limit
    # only logarithmically in ε, so it fails a run under --strict alone.
    block["soft_checks"] = {"cauchy": result.converged(cfg.solver.cauchy_tol)}
    return block, verdict.verdict, {"ko_dominance": ko.passed}


def cmd_hardy(cfg, run_dir):
    ns = [int(n) for n in cfg.params.get("n", [256, 1024, 4096])]
    values = [hardy_constant(cfg.domain, n=n) for n in ns]
    v = [r.value for r in values]
    trend = "non-increasing" if all(b <= a + 1e-12 for a, b in zip(v, v[1:])) else "increasing"
    report = {"domain": cfg.domain.to_dict(), "n": ns, "value": v, "trend": trend,
              "eigen_residual": [r.residual for r in values]}
    write_json(os.path.join(run_dir, "hardy.json"), report)
    ok = trend == "non-increasing" and all(x >= 0.25 - 1e-12 for x in v)
    return report, {"hardy": trend}, {"hardy_bracket": ok}


def cmd_solve(cfg, run_dir):
    data = cfg.params.get("data")
    if not isinstance(data, dict):
        raise ConfigError("params.data", "expected an object mapping face -> value")
    prob = BVProblem(cfg.domain, cfg.potential, {k: float(v) for k, v in data.items()},
                     cfg.solver.epsilon, cfg.solver.n, cfg.solver.grading)
    prof = solve_dirichlet(prob, cfg.solver)
    write_profile(run_dir, "profile", prof, cfg.hash)
    report = {"residual_norm": prof.residual_norm, "iterations": prof.iterations}
    write_json(os.path.join(run_dir, "report.json"), report)
    return report, {}, {"residual": prof.residual_norm <= cfg.solver.tol}


def cmd_large(cfg, run_dir):
    res = solve_large(cfg.domain, cfg.potential, cfg.solver)
    block, verdict, checks = _verdict_block(res, cfg, cfg.potential)
    write_profile(run_dir, "profile", res.profile, cfg.hash,
                  {"continuation": res.diagnostics()})
    write_json(os.path.join(run_dir, "report.json"), block)
    return block, {"large": verdict}, checks


def cmd_borderline(cfg, run_dir):
    p = cfg.params
    beta = p.get("beta", cfg.potential.beta)
    if beta is None:
        raise ConfigError("params.beta", "missing (or set potential.beta)")
    M, B = p.get("M"), p.get("B")
    res = solve_large_borderline(cfg.domain, float(beta), M, cfg.solver, B, cfg.potential.mu)
    pot = bounds.PotentialSpec(cfg.potential.mu, float(beta))
    block, verdict, checks = _verdict_block(res, cfg, pot, M)
    extra = {"continuation": res.diagnostics(), "beta": float(beta), "M": M}
    write_profile(run_dir, "profile", res.profile, cfg.hash, extra)
    write_json(os.path.join(run_dir, "report.json"), block)
    return block, {"borderline": verdict}, checks


_FAMILIES = {"PowerHarmonic": bounds.PowerHarmonic, "CorrectedPower": bounds.CorrectedPower,
             "LogPower": bounds.LogPower, "KellerOssermanSuper": bounds.KellerOssermanSuper,
             "LogSuper": bounds.LogSuper, "LocalSubL": bounds.LocalSubL,
             "BorderlineSub": bounds.BorderlineSub, "BorderlineHSub": bounds.BorderlineHSub,
             "BorderlineHSuper": bounds.BorderlineHSuper}


def family_from_descriptor(desc, domain, potential):
    if not isinstance(desc, dict) or desc.get("kind") not in _FAMILIES:
        raise ConfigError("params.family.kind", f"expected one of {sorted(_FAMILIES)}")
    kw = {k: v for k, v in desc.items() if k != "kind"}
    if "strip" in kw:
        kw["strip"] = tuple(float(s) for s in kw["strip"])
    if desc["kind"] == "LocalSubL":
        kw.setdefault("potential", potential)
        kw.setdefault("domain", domain)
    try:
        return _FAMILIES[desc["kind"]](**kw)
    except TypeError as exc:
        raise ConfigError("params.family", str(exc)) from None


def cmd_bounds(cfg, run_dir):
    fam = family_from_descriptor(cfg.params.get("family"), cfg.domain, cfg.potential)
    rep = bounds.classify_on_strip(fam, cfg.potential, cfg.domain,
                                   samples=int(cfg.params.get("samples", 1000)))
    report = rep.to_dict()
    write_json(os.path.join(run_dir, "classification.json"), report)
    # borderline families carry no sign claim; they are reported only
    return report, {"bounds": rep.observed}, {"classification": rep.passed or rep.borderline}


def load_profile(csv_path) -> SolutionProfile | analysis.SampledProfile:
    """Rebuild a profile from its CSV and JSON sidecar."""
    rows, _ = read_profile_csv(csv_path)
    side_path = os.path.splitext(csv_path)[0] + ".json"
    with open(side_path, encoding="utf-8") as fh:
        side = json.load(fh)
    prob = side["problem"]
    domain = DomainSpec.from_dict(prob["domain"])
    mesh = graded_mesh(domain, int(prob["n"]), float(prob["epsilon"]), float(prob["grading"]))
    order = np.argsort(mesh.nodes, kind="stable")
    if np.max(np.abs(mesh.nodes[order] - rows[:, 0])) > 1e-12:
        raise UsageError(f"{csv_path}: nodes do not match the sidecar mesh")
    values = np.empty(mesh.n)
    values[order] = rows[:, 2]
    return analysis.SampledProfile(mesh, values), side


def cmd_analyze(cfg, run_dir):
    path = cfg.params.get("profile")
    if not isinstance(path, str):
        raise ConfigError("params.profile", "expected the path of a profile CSV")
    prof, side = load_profile(path)
    pot = side["problem"]["potential"]
    potential = bounds.PotentialSpec(pot["mu"], pot.get("beta"))
    rep = analysis.boundary_ratio(prof, ladder=cfg.ladder)
    report = {"ratio": rep.to_dict()}
    if potential.mu <= 0.25 and potential.beta is None:
        report["pl"] = analysis.pl_classify(prof, potential, cfg.ladder).to_dict()
    if potential.beta is not None:
        report["amplitude"] = analysis.amplitude_fit(prof, potential.beta, cfg.ladder).to_dict()
    write_json(os.path.join(run_dir, "analysis.json"), report)
    return report, {"analyze": rep.verdict}, {}


def cmd_lambert(cfg, run_dir):
    A = float(cfg.params.get("A", 1.0))
    ts = cfg.params.get("t")
    if ts is None:
        ts = np.geomspace(1e-12, math.sqrt(A / math.e), 25).tolist()
    buf = io.StringIO()
    buf.write("# columns=t,L,residual\n")
    for t in ts:
        L = float(lambert.eval_L(A, float(t)))
        r = float(lambert.implicit_residual(A, float(t), L))
        buf.write(f"{_fmt(t)},{_fmt(L)},{_fmt(r)}\n")
    atomic_write(os.path.join(run_dir, "lambert.csv"), buf.getvalue())
    sys.stdout.write(buf.getvalue())
    return {"A": A, "count": len(ts)}, {}, {}


def _row_config(cfg, row):
    rid, _, mu, beta, _ = row
    sched = DEEP if mu < 0 or (beta is not None and mu == 0) else HARDY_SCHEDULE
    return ExperimentConfig(cfg.domain, bounds.PotentialSpec(mu, beta),
                            cfg.solver.replace(schedule=sched), ladder=cfg.ladder,
                            out=cfg.out, seed=cfg.seed)


def _run_row(args):
    cfg, row, run_dir = args
    rid, column, mu, beta, expected = row
    sub = _row_config(cfg, row)
    row_dir = os.path.join(run_dir, rid)
    if beta is None:
        block, verdicts, checks = cmd_large(sub, row_dir)
    else:
        block, verdicts, checks = cmd_borderline(sub, row_dir)
    verdict = next(iter(verdicts.values()))
    observed = {"large-with-ratio-1": "exists", "large-with-amplitude-M": "exists",
                "vanishing": "none"}.get(verdict, "inconclusive")
    status = OPEN_VERDICT if expected is None else (
        "match" if observed == expected else "mismatch")
    return {"row": rid, "column": column, "mu": mu, "beta": beta, "expected": expected,
            "verdict": verdict, "observed": observed, "status": status,
            "ko_dominance": checks["ko_dominance"],
            "cauchy": block["soft_checks"]["cauchy"]}


def cmd_matrix(cfg, run_dir, workers=1):
    jobs = [(cfg, row, run_dir) for row in MATRIX]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_row, jobs))
    else:
        rows = [_run_row(j) for j in jobs]
    write_json(os.path.join(run_dir, "matrix.json"), {"rows": rows})
    buf = io.StringIO()
    buf.write("# columns=row,mu,beta,expected,verdict,status\n")
    for r in rows:
        buf.write(f"{r['row']},{r['mu']},{r['beta']},{r['expected']},{r['verdict']},"
                  f"{r['status']}\n")
    atomic_write(os.path.join(run_dir, "matrix.csv"), buf.getvalue())
    checks = {r["row"]: r["status"] != "mismatch" and r["ko_dominance"] for r in rows}
    return {"rows": rows}, {r["row"]: r["verdict"] for r in rows}, checks


def export_plotdata(run_dir) -> list:
    """Whitespace-separated ``.dat`` files next to every profile CSV under ``run_dir``."""
    found = []
    for root, _, files in sorted(os.walk(run_dir)):
        for f in sorted(files):
            if f.endswith(".csv") and os.path.exists(os.path.join(root, f[:-4] + ".json")):
                found.append(os.path.join(root, f))
    if not found:
        raise UsageError(f"no profile CSVs under {run_dir}")
    written = []
    for path in found:
        rows, meta = read_profile_csv(path)
        with open(path[:-4] + ".json", encoding="utf-8") as fh:
            side = json.load(fh)
        beta, M = side.get("beta"), side.get("M")
        x, d, u = rows.T
        ell = -2.0 * np.log(d)
        cols = [x, d, u, ell, u / ell]
        names = ["x", "delta", "u", "log_delta^-2", "u/log_delta^-2"]
        if beta is not None and M is not None:
            cols.append(ell ** (0.5 * beta))
            names.append(f"log_delta^-2^({0.5 * beta:g})")
        buf = io.StringIO()
        buf.write(f"# config={meta.get('config', side.get('config_hash', ''))}\n")
        buf.write("# " + " ".join(names) + "\n")
        for row in zip(*cols):
            buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
        out = path[:-4] + ".dat"
        atomic_write(out, buf.getvalue())
        written.append(out)
    return written


def _soft_checks(report) -> dict:
    if "rows" in report:
        return {r["row"]: r.get("cauchy", True) for r in report["rows"]}
    return report.get("soft_checks", {})


COMMANDS = {"hardy": cmd_hardy, "solve": cmd_solve, "large": cmd_large,
            "borderline": cmd_borderline, "bounds": cmd_bounds, "analyze": cmd_analyze,
            "lambert": cmd_lambert}


# -- entry point -------------------------------------------------------------------
def build_parser():
    ap = argparse.ArgumentParser(prog="largesol", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("run_dir", nargs="?", help="run directory (export only)")
    ap.add_argument("--config", help="JSON experiment config")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--workers", type=int, default=1, help="parallel matrix rows")
    ap.add_argument("--strict", action="store_true",
                    help="treat inconclusive verdicts as failures")
    return ap


def run(subcommand, config_path=None, out=None, workers=1, strict=False, run_dir=None):
    """Run one subcommand; returns the exit status."""
    try:
        if subcommand == "export":
            if not run_dir:
                raise UsageError("export needs a run directory")
            for path in export_plotdata(run_dir):
                print(path)
            return EXIT_OK
        cfg = ExperimentConfig() if config_path is None else ExperimentConfig.load(config_path)
        if out is not None:
            cfg.out = out
        rdir = os.path.join(cfg.out, f"{subcommand}-{cfg.hash[:12]}")
        os.makedirs(rdir, exist_ok=True)
        atomic_write(os.path.join(rdir, "config.json"), cfg.to_json())
        started = time.time()
        if subcommand == "matrix":
            report, verdicts, checks = cmd_matrix(cfg, rdir, workers)
        else:
            report, verdicts, checks = COMMANDS[subcommand](cfg, rdir)
        failed = [k for k, ok in checks.items() if not ok]
        soft = [k for k, ok in _soft_checks(report).items() if not ok]
        inconclusive = [k for k, v in verdicts.items() if v in ("inconclusive", "mixed")]
        record = {"config_hash": cfg.hash, "subcommand": subcommand, "run_dir": rdir,
                  "started": started, "finished": time.time(), "versions": versions(),
                  "verdicts": verdicts, "checks": checks, "soft_checks_failed": soft}
        write_json(os.path.join(rdir, "record.json"), record)
        append_record(cfg.out, record)
        if strict:
            failed += soft + inconclusive
        if failed:
            print(f"verdict-level failure: {', '.join(failed)}", file=sys.stderr)
            return EXIT_VERDICT
        print(json.dumps(_jsonable(verdicts), sort_keys=True))
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error at {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (LabError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run(args.subcommand, args.config, args.out, args.workers, args.strict, args.run_dir)


if __name__ == "__main__":
    sys.exit(main())
