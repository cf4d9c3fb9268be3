import math

import numpy as np
import pytest

from itescatter import numerics as nm
from itescatter.errors import NonConvergence


def test_gauss_legendre_exact_degree():
    rule = nm.gauss_legendre(6)
    for p in range(12):
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        assert abs(rule.integrate(rule.nodes**p) - exact) < 1e-14
    assert rule.degree == 11


def test_radial_rule_maps_interval():
    rule = nm.radial_rule(2.5, 20)
    assert np.all((rule.nodes > 0) & (rule.nodes < 2.5))
    assert abs(rule.integrate(rule.nodes**2) - 2.5**3 / 3) < 1e-13


@pytest.mark.parametrize("N,R", [(2, 1.0), (3, 1.0), (3, 0.7)])
def test_ball_quadrature_volume_and_moment(N, R):
    rule = nm.ball_quadrature(R, N, 16, 16)
    vol = math.pi * R**2 if N == 2 else 4 * math.pi * R**3 / 3
    assert abs(rule.integrate(np.ones(len(rule.weights))) - vol) < 1e-12
    r2 = np.sum(rule.nodes**2, axis=1)
    exact = vol * R**2 * N / (N + 2)
    assert abs(rule.integrate(r2) - exact) < 1e-12


def test_bracket_and_refine_sine_roots():
    roots = nm.bracket_and_refine(math.sin, 0.5, 10.0, 200, 1e-13)
    found = [r.root for r in roots]
    np.testing.assert_allclose(found, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-12)
    for r in roots:
        assert r.lo <= r.root <= r.hi and r.hi - r.lo <= 1e-12


def test_bracket_and_refine_vectorized_grid_agrees():
    a = nm.bracket_and_refine(math.cos, 0.1, 8.0, 50)
    b = nm.bracket_and_refine(math.cos, 0.1, 8.0, 50, f_grid=np.cos)
    assert [r.root for r in a] == [r.root for r in b]


def test_bracket_misses_tangential_roots():
    assert nm.bracket_and_refine(lambda x: (x - 1.0) ** 2, 0.0, 2.0, 40) == []


def test_bracket_argument_checks():
    with pytest.raises(ValueError):
        nm.bracket_and_refine(math.sin, 2.0, 1.0)
    with pytest.raises(ValueError):
        nm.bracket_and_refine(math.sin, 1.0, 2.0, 1)


def test_fd_residual_of_plane_wave_is_second_order():
    k, n = 2.0, 1.5
    d = np.array([0.6, 0.0, 0.8])

    def field(p):
        return np.exp(1j * k * n * p @ d)

    x = np.array([0.1, -0.2, 0.3])
    res = [abs(nm.fd_helmholtz_residual(field, x, k, n, h)) for h in (0.02, 0.01, 0.005)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all(np.abs(orders - 2) < 0.05)


@pytest.mark.parametrize("N,count", [(2, 17), (3, 64)])
def test_sample_directions_unit_and_spread(N, count):
    dirs = nm.sample_directions(N, count)
    assert dirs.shape == (count, N)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-15)
    assert np.linalg.norm(dirs.mean(axis=0)) < 0.05
    np.testing.assert_array_equal(dirs, nm.sample_directions(N, count))


def test_sample_directions_errors():
    with pytest.raises(ValueError):
        nm.sample_directions(4, 10)
    with pytest.raises(ValueError):
        nm.sample_directions(3, 0)


def test_least_squares_rosenbrock():
    def res(p):
        return np.array([10 * (p[1] - p[0] ** 2), 1 - p[0]])

    out = nm.least_squares_minimize(res, [-1.2, 1.0], max_iter=500)
    np.testing.assert_allclose(out.params, [1.0, 1.0], atol=1e-7)
    params, misfit = out
    assert misfit < 1e-20


def test_least_squares_complex_residual_and_bounds():
    target = 1.3 + 0.4j

    def res(p):
        z = complex(p[0], p[1])
        return np.array([z**2 - target**2, z**3 - target**3])

    out = nm.least_squares_minimize(res, [1.0, 0.0], [(0.1, 3.0), (0.0, 1.0)])
    assert abs(complex(*out.params) - target) < 1e-9


def test_least_squares_respects_box():
    out = nm.least_squares_minimize(lambda p: np.array([p[0] - 5.0]), [0.5], [(0.0, 1.0)])
    assert out.params[0] == 1.0


def test_multistart_is_seeded():
    def res(p):
        return np.array([np.sin(3 * p[0]) + 0.1 * p[0]])

    a = nm.least_squares_minimize(res, [0.0], [(-3, 3)], multistart_count=5, seed=11)
    b = nm.least_squares_minimize(res, [0.0], [(-3, 3)], multistart_count=5, seed=11)
    assert a.params[0] == b.params[0] and a.starts_tried == 5
    assert a.best_start == int(np.argmin(a.start_misfits))


def test_nonconvergence_when_nothing_improves():
    with pytest.raises(NonConvergence):
        nm.least_squares_minimize(lambda p: np.array([np.nan]), [0.0])
