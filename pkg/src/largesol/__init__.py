"""Large solutions of -Δu - q(δ)u/δ² + e^u = 0 on intervals, balls and annuli."""
from .analysis import (amplitude_fit, boundary_ratio, continuation_limit, ko_check,
                       pl_classify, run_verdict)
from .bounds import (BoundFamily, PotentialSpec, build_global_sub, classify_on_strip,
                     search_A_keller_osserman)
from .config import ExperimentConfig
from .errors import LabError
from .geometry import Annulus, Ball, DomainSpec, Interval, graded_mesh
from .hardy import hardy_constant, local_hardy_constant
from .kernels import BACKEND
from .lambert import eval_L, lambert_w_m1
from .solver import (BVProblem, SolverConfig, solve_dirichlet, solve_large,
                     solve_large_borderline, solve_torsion, solve_zero_bc, uniqueness_probe)

__version__ = "0.1.0"

__all__ = [
    "Annulus", "BACKEND", "BVProblem", "Ball", "BoundFamily", "DomainSpec", "ExperimentConfig",
    "Interval", "LabError", "PotentialSpec", "SolverConfig", "amplitude_fit", "boundary_ratio",
    "build_global_sub", "classify_on_strip", "continuation_limit", "eval_L", "graded_mesh",
    "hardy_constant", "ko_check", "lambert_w_m1", "local_hardy_constant", "pl_classify",
    "run_verdict", "search_A_keller_osserman", "solve_dirichlet", "solve_large",
    "solve_large_borderline", "solve_torsion", "solve_zero_bc", "uniqueness_probe",
]
