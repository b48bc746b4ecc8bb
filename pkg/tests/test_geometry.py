import numpy as np
import pytest
from hypothesis import given, strategies as st

from largesol.errors import DomainViolation, MeshError
from largesol.geometry import (Annulus, Ball, DomainSpec, Interval, distance, graded_mesh,
                               laplacian_of_distance, mean_curvature, smooth_distance,
                               whitney_constant)


def test_distance_examples():
    assert distance(Interval(0, 1), 0.3) == pytest.approx(0.3)
    assert distance(Ball(3, 2), 2.0) == 0.0
    assert distance(Annulus(2, 1, 3), 2.0) == 1.0


def test_distance_outside_raises():
    with pytest.raises(DomainViolation):
        distance(Interval(0, 1), 1.5)
    with pytest.raises(DomainViolation):
        distance(Annulus(2, 1, 3), 0.5)


@pytest.mark.parametrize("ctor", [lambda: Interval(1, 0), lambda: Ball(3, 0),
                                  lambda: Annulus(2, 3, 1), lambda: Annulus(1, 1, 2)])
def test_invalid_domains(ctor):
    with pytest.raises(DomainViolation):
        ctor()


def test_mean_curvature():
    assert mean_curvature(Interval(0, 1), "left") == 0.0
    assert mean_curvature(Ball(3, 2), "sphere") == 0.5
    assert mean_curvature(Annulus(2, 1, 3), "inner") == -1.0
    assert mean_curvature(Annulus(2, 1, 3), "outer") == pytest.approx(1 / 3)
    with pytest.raises(DomainViolation):
        mean_curvature(Ball(3, 2), "inner")


@pytest.mark.parametrize("dom,face,x", [(Annulus(2, 1, 3), "inner", 1.0),
                                        (Annulus(4, 1, 3), "outer", 3.0),
                                        (Ball(3, 2), "sphere", 2.0)])
def test_laplacian_of_distance_matches_curvature_at_boundary(dom, face, x):
    # Δδ = -(N-1) H0 on the boundary
    lap = laplacian_of_distance(dom, x)
    assert lap == pytest.approx(-(dom.dim - 1) * mean_curvature(dom, face))


def test_ball_laplacian_of_distance_by_finite_differences():
    dom = Ball(3, 1.0)
    r, h = 0.6, 1e-4
    f = lambda s: 1.0 - s
    fd = (f(r + h) - 2 * f(r) + f(r - h)) / h**2 + 2 / r * (f(r + h) - f(r - h)) / (2 * h)
    assert laplacian_of_distance(dom, r) == pytest.approx(fd, abs=1e-8)
    assert laplacian_of_distance(dom, r) == pytest.approx(-2 / r)


@given(st.floats(0, 1), st.floats(0, 1))
def test_distance_is_lipschitz(x, y):
    dom = Interval(0, 1)
    assert abs(distance(dom, x) - distance(dom, y)) <= abs(x - y) + 1e-15


@given(st.floats(1.0, 3.0), st.floats(1.0, 3.0))
def test_annulus_distance_is_lipschitz(x, y):
    dom = Annulus(2, 1, 3)
    assert abs(distance(dom, x) - distance(dom, y)) <= abs(x - y) + 1e-15


@pytest.mark.parametrize("dom", [Interval(0, 1), Interval(-2, 5), Ball(3, 1.5), Annulus(2, 1, 3)])
def test_smooth_distance_bracket(dom):
    x = np.linspace(dom.lo, dom.hi, 2001)[1:-1]
    d, _, _ = smooth_distance(dom, x)
    delta = distance(dom, x)
    c = whitney_constant(dom)
    assert np.all(d <= delta * (1 + 1e-12))
    assert np.all(delta <= c * d * (1 + 1e-12))


def test_uniform_mesh_example():
    m = graded_mesh(Interval(0, 1), 17, 0.1, 1.0)
    np.testing.assert_allclose(m.nodes, np.linspace(0.1, 0.9, 17), atol=1e-15)


def test_graded_ball_spacing_ratio():
    m = graded_mesh(Ball(3, 1), 64, 1e-3, 2.0)
    assert m.nodes[-1] == pytest.approx(0.999)
    face_h = m.spacing[-1]
    central_h = m.spacing[0]
    assert central_h / face_h >= 10


def test_empty_truncation_raises():
    with pytest.raises(MeshError):
        graded_mesh(Interval(0, 1), 16, 0.6)
    with pytest.raises(MeshError):
        graded_mesh(Interval(0, 1), 8, 0.1)


@pytest.mark.parametrize("dom", [Interval(0, 1), Ball(2, 1), Annulus(3, 1, 2)])
@pytest.mark.parametrize("eps", [1e-2, 1e-6])
@pytest.mark.parametrize("g", [1.0, 2.0, 4.0])
def test_mesh_invariants(dom, eps, g):
    m = graded_mesh(dom, 101, eps, g)
    assert np.all(m.spacing > 0)
    assert np.all(np.diff(m.nodes) > 0)
    np.testing.assert_allclose(m.delta, distance(dom, m.nodes), rtol=1e-9, atol=1e-15)
    faces = m.delta[m.dirichlet]
    assert np.all(faces == eps)
    assert np.all(m.delta[~m.dirichlet] > eps)
    assert m.ridge_mask.sum() >= 2


def test_mesh_below_float_spacing_keeps_exact_distances():
    m = graded_mesh(Interval(0, 1), 400, 1e-25, 2.0)
    assert m.delta[-1] == 1e-25
    assert np.all(m.spacing > 0)
    # the cells near the right face are resolved even though x rounds to 1
    assert m.spacing[-1] < 1e-25


def test_domain_roundtrip():
    for dom in [Interval(-1, 2), Ball(3, 2), Annulus(2, 1, 3)]:
        assert DomainSpec.from_dict(dom.to_dict()) == dom
    with pytest.raises(DomainViolation):
        DomainSpec.from_dict({"kind": "torus"})
