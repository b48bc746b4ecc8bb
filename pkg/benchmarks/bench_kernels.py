"""Compare the compiled kernels with the pure-Python fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel is timed on both backends after checking that they agree. The
end-to-end rows run a full continuation in a subprocess with and without
``LARGESOL_PURE_PYTHON=1``.
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from largesol import _kernels_py as py

try:
    from largesol import _ckernels as cy
except ImportError:
    sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation`")


def tridiag(n, rng):
    sub = -rng.uniform(0.5, 1.0, n)
    sup = -rng.uniform(0.5, 1.0, n)
    diag = 2.5 + rng.uniform(0.0, 1.0, n)
    return sub, diag, sup, rng.standard_normal(n)


def cases(rng):
    s4k = tridiag(4000, rng)
    s64k = tridiag(64000, rng)
    off = rng.uniform(0.1, 1.0, 4096)
    diag = rng.uniform(-2.0, 2.0, 4096)
    args = -np.exp(rng.uniform(-600.0, -1.0 - 1e-9, 100_000))
    scal = args[:2000]
    return [
        ("thomas n=4000", lambda m: m.thomas(*s4k)),
        ("thomas n=64000", lambda m: m.thomas(*s64k)),
        ("sturm_count n=4096", lambda m: m.sturm_count(off, diag)),
        ("wm1_array 1e5", lambda m: m.wm1_array(args)),
        ("wm1_scalar x2000", lambda m: [m.wm1_scalar(float(s)) for s in scal]),
    ]


def agree(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


E2E = ("import time; from largesol import solve_large, Interval, PotentialSpec, SolverConfig;"
       "t=time.perf_counter(); solve_large(Interval(0,1), PotentialSpec({mu}),"
       "SolverConfig(schedule=tuple(10.0**-k for k in range(1, 9))));"
       "print(time.perf_counter()-t)")


def end_to_end(mu, pure):
    env = dict(os.environ)
    env.pop("LARGESOL_PURE_PYTHON", None)
    if pure:
        env["LARGESOL_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", E2E.format(mu=mu)], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="also write the rows as JSON")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    rows = []
    for name, fn in cases(rng):
        diff = agree(fn(cy), fn(py))
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        rows.append({"case": name, "cython_s": t_cy, "python_s": t_py,
                     "speedup": t_py / t_cy, "max_rel_diff": diff})
    for mu in (0.0, 0.2):
        t_cy = min(end_to_end(mu, False) for _ in range(3))
        t_py = min(end_to_end(mu, True) for _ in range(3))
        rows.append({"case": f"solve_large mu={mu}", "cython_s": t_cy, "python_s": t_py,
                     "speedup": t_py / t_cy, "max_rel_diff": float("nan")})
    print(f"{'case':<24}{'cython [s]':>12}{'python [s]':>12}{'speedup':>10}{'max diff':>11}")
    for r in rows:
        print(f"{r['case']:<24}{r['cython_s']:>12.2e}{r['python_s']:>12.2e}"
              f"{r['speedup']:>10.1f}{r['max_rel_diff']:>11.1e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
