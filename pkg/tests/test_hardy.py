import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from largesol.geometry import Ball, Interval, Annulus, graded_mesh
from largesol.hardy import (assemble_pencil, gate_mu, hardy_constant, local_hardy_constant,
                            rayleigh_quotient, _restrict, default_epsilon)
from oracles import dense_generalized_min, hardy_half_interval, hardy_strip_interval


def dense_pencil(mesh):
    kd, ko, md, mo, _ = _restrict(mesh, *assemble_pencil(mesh))
    K = np.diag(kd) + np.diag(ko, 1) + np.diag(ko, -1)
    M = np.diag(md) + np.diag(mo, 1) + np.diag(mo, -1)
    return K, M


@pytest.mark.parametrize("dom", [Interval(0, 1), Ball(3, 1), Annulus(2, 1, 3)])
def test_dense_oracle_n256(dom):
    mesh = graded_mesh(dom, 256, default_epsilon(dom), 2.0)
    r = hardy_constant(dom, mesh)
    assert abs(r.value - dense_generalized_min(*dense_pencil(mesh))) <= 1e-10
    assert r.residual <= 1e-10


@pytest.mark.parametrize("dom", [Interval(0, 1), Ball(3, 1)])
def test_refinement_monotone_and_bracketed(dom):
    vals = [hardy_constant(dom, n=n).value for n in (256, 1024, 4096)]
    assert all(v >= 0.25 for v in vals)
    assert vals[0] >= vals[1] >= vals[2]
    assert vals[2] <= 0.30


def test_interval_matches_truncated_continuum():
    # half-interval with symmetric minimizer: Neumann condition at the midpoint
    r = hardy_constant(Interval(0, 1), n=4096)
    exact = hardy_half_interval(default_epsilon(Interval(0, 1)), 0.5)
    assert 0 <= r.value - exact < 1e-5


def test_minimizer_positive_and_symmetric():
    r = hardy_constant(Interval(0, 1), n=1025)
    phi = r.minimizer
    assert np.all(phi[1:-1] > 0)
    assert np.allclose(phi, phi[::-1], atol=1e-8 * phi.max())


def test_rayleigh_quotient_upper_bound():
    dom = Interval(0, 1)
    mesh = graded_mesh(dom, 512, default_epsilon(dom), 2.0)
    lam = hardy_constant(dom, mesh).value
    trial = np.sqrt(mesh.delta) * np.log(mesh.delta / mesh.epsilon)
    assert rayleigh_quotient(mesh, trial) >= lam


@given(st.floats(1e-6, 1e-2), st.floats(0.05, 0.5))
@settings(max_examples=15, deadline=None)
def test_local_strip_matches_continuum(eps, rho):
    r = local_hardy_constant(Interval(0, 1), rho, n=1024, epsilon=eps)
    exact = hardy_strip_interval(eps, rho)
    assert r.value >= exact - 1e-9
    assert r.value - exact < 2e-3 * exact


def test_local_exceeds_global():
    dom = Ball(3, 1)
    assert local_hardy_constant(dom, 0.05).value > hardy_constant(dom).value


def test_gate_paths():
    r = hardy_constant(Interval(0, 1), n=1024, estimate_error=True)
    assert gate_mu(0.2, r) == "admissible"
    assert gate_mu(0.3, r) == "inadmissible"
    assert gate_mu(r.value, r, margin=1e-3) == "borderline"
