import math
from unittest import mock

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from itescatter import forward, numerics, specialfn
from itescatter.errors import SingularModalSystem
from itescatter.forward import BallMedium, ScatteringConfig

mp.mp.dps = 40
E3 = (0.0, 0.0, 1.0)


def mp_j(m, x):
    return mp.sqrt(mp.pi / (2 * x)) * mp.besselj(m + mp.mpf(1) / 2, x)


def mp_y(m, x):
    return mp.sqrt(mp.pi / (2 * x)) * mp.bessely(m + mp.mpf(1) / 2, x)


def mp_d(f, m, x):
    return f(m - 1, x) - (m + 1) / x * f(m, x) if m else -f(1, x)


def mp_two_layer(k, r1, R, n1, n2, M):
    """A_m of a centred two-layer ball from the 4x4 continuity system."""
    out = []
    k = mp.mpf(k)
    for m in range(M + 1):
        a, b = k * r1, k * R
        rows = [
            # at r1: B j(k n1 r1) = C j(k n2 r1) + D y(k n2 r1), and n-weighted derivatives
            [0, mp_j(m, n1 * a), -mp_j(m, n2 * a), -mp_y(m, n2 * a)],
            [0, n1 * mp_d(mp_j, m, n1 * a), -n2 * mp_d(mp_j, m, n2 * a), -n2 * mp_d(mp_y, m, n2 * a)],
            # at R: j(b) + A h(b) = C j(k n2 R) + D y(k n2 R)
            [mp_j(m, b) + 1j * mp_y(m, b), 0, -mp_j(m, n2 * b), -mp_y(m, n2 * b)],
            [mp_d(mp_j, m, b) + 1j * mp_d(mp_y, m, b), 0, -n2 * mp_d(mp_j, m, n2 * b), -n2 * mp_d(mp_y, m, n2 * b)],
        ]
        rhs = mp.matrix([0, 0, -mp_j(m, b), -mp_d(mp_j, m, b)])
        out.append(complex(mp.lu_solve(mp.matrix(rows), rhs)[0]))
    return np.array(out)


def test_no_contrast_gives_zero_field():
    cfg = ScatteringConfig(1.3, E3, 3)
    c = forward.modal_coefficients(cfg, BallMedium.constant((0, 0, 0), 1.0, 1.0))
    assert np.all(c.A == 0)
    ff = forward.far_field(c, cfg, BallMedium.constant((0, 0, 0), 1.0, 1.0), numerics.sample_directions(3, 10))
    assert np.all(ff.values == 0)


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("n", [2.0, 1.4 + 0.3j, 0.6])
def test_dual_paths_agree(dim, n):
    d = E3 if dim == 3 else (1.0, 0.0)
    cfg = ScatteringConfig(1.7, d, dim)
    med = BallMedium.constant((0.0,) * dim, 1.1, n)
    M = 15
    a = forward.modal_coefficients(cfg, med, M=M).A
    b = forward.closed_form_coefficients(cfg, med, M)
    c, _ = forward.solve_modal_system(cfg, med, M)
    scale = np.abs(a) + 1e-300
    assert np.max(np.abs(a - b) / scale) < 1e-10
    assert np.max(np.abs(a - c) / scale) < 1e-10


def test_constant_coefficients_match_mpmath_oracle():
    cfg = ScatteringConfig(1.0, E3, 3)
    A = forward.modal_coefficients(cfg, BallMedium.constant((0, 0, 0), 1.0, 2.0), M=10).A
    for m in range(11):
        t = mp.mpf(1)
        j, dj = mp_j(m, t), mp_d(mp_j, m, t)
        h, dh = j + 1j * mp_y(m, t), dj + 1j * mp_d(mp_y, m, t)
        jn, djn = mp_j(m, 2 * t), mp_d(mp_j, m, 2 * t)
        ref = complex(-(dj * jn - 2 * j * djn) / (dh * jn - 2 * h * djn))
        assert abs(A[m] - ref) <= 1e-12 * abs(ref)


def test_soundsoft_matches_mpmath_series():
    cfg = ScatteringConfig(2.0, E3, 3)
    A = forward.modal_coefficients(cfg, BallMedium.soundsoft((0, 0, 0), 0.9), M=12).A
    for m in range(13):
        t = mp.mpf(2) * mp.mpf("0.9")
        ref = complex(-mp_j(m, t) / (mp_j(m, t) + 1j * mp_y(m, t)))
        assert abs(A[m] - ref) <= 1e-12 * abs(ref)


def test_two_layer_matches_mpmath_transfer():
    cfg = ScatteringConfig(1.5, E3, 3)
    med = BallMedium.layered((0, 0, 0), (0.5, 1.0), (1.8, 1.3 + 0.1j))
    A = forward.modal_coefficients(cfg, med, M=8).A
    ref = mp_two_layer(1.5, mp.mpf("0.5"), 1, mp.mpf("1.8"), mp.mpc("1.3", "0.1"), 8)
    assert np.max(np.abs(A - ref) / np.abs(ref)) < 1e-11


@pytest.mark.parametrize("dim", [2, 3])
def test_single_layer_reproduces_constant_exactly(dim):
    d = E3 if dim == 3 else (0.0, 1.0)
    cfg = ScatteringConfig(2.2, d, dim)
    z = (0.1,) * dim
    a = forward.modal_coefficients(cfg, BallMedium.constant(z, 0.9, 1.6 + 0.2j))
    b = forward.modal_coefficients(cfg, BallMedium.layered(z, (0.9,), (1.6 + 0.2j,)))
    np.testing.assert_array_equal(a.A, b.A)


def test_layered_wrapper_rejects_constant():
    cfg = ScatteringConfig(1.0, E3, 3)
    with pytest.raises(TypeError):
        forward.layered_modal_coefficients(cfg, BallMedium.constant((0, 0, 0), 1.0, 2.0))


@pytest.mark.parametrize("dim,n", [(3, 1.5), (3, 2.0 + 0.5j), (2, 1.7)])
def test_optical_theorem(dim, n):
    d = E3 if dim == 3 else (1.0, 0.0)
    cfg = ScatteringConfig(1.2, d, dim)
    med = BallMedium.constant((0.0,) * dim, 1.0, n)
    c = forward.modal_coefficients(cfg, med)
    forward_val = forward.far_field(c, cfg, med, np.array([d])).values[0]
    if dim == 3:
        rule = numerics.ball_quadrature(1.0, 3, 1, 40)
        dirs = rule.nodes / np.linalg.norm(rule.nodes, axis=1)[:, None]
        w = rule.weights / rule.weights.sum() * 4 * math.pi
        total = np.sum(w * np.abs(forward.far_field(c, cfg, med, dirs).values) ** 2)
        lhs = forward_val.imag
        rhs = cfg.k / (4 * math.pi) * total
    else:
        th = 2 * math.pi * np.arange(400) / 400
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
        total = np.sum(np.abs(forward.far_field(c, cfg, med, dirs).values) ** 2) * 2 * math.pi / 400
        # 2D with the sqrt(2/(pi k)) exp(-i pi/4) normalization
        lhs = -math.sqrt(8 * math.pi * cfg.k) * (np.exp(1j * math.pi / 4) * forward_val).real
        rhs = cfg.k * total
    if not isinstance(n, complex):
        assert abs(lhs - rhs) < 1e-10 * abs(rhs)
    else:
        assert lhs > rhs  # absorption removes energy


def test_far_field_extraction_rate():
    cfg = ScatteringConfig(2.0, E3, 3)
    med = BallMedium.constant((0.3, -0.2, 0.1), 0.8, 1.7)
    c = forward.modal_coefficients(cfg, med)
    dirs = numerics.sample_directions(3, 5)
    uinf = forward.far_field(c, cfg, med, dirs).values
    rs = np.array([1e3, 2e3, 4e3])
    errs = [np.max(np.abs(forward.scattered_field(c, cfg, med, r * dirs) * r * np.exp(-2j * r) - uinf)) for r in rs]
    rate = -np.polyfit(np.log(rs), np.log(errs), 1)[0]
    assert 0.95 < rate < 1.05


def test_translation_phase():
    cfg = ScatteringConfig(1.5, (0.6, 0.8, 0.0), 3)
    z = np.array([0.2, -0.4, 0.3])
    a = BallMedium.constant((0, 0, 0), 0.7, 1.9)
    b = BallMedium.constant(z, 0.7, 1.9)
    dirs = numerics.sample_directions(3, 12)
    fa = forward.solve_far_field(cfg, a, dirs).values
    fb = forward.solve_far_field(cfg, b, dirs).values
    shift = np.exp(1j * cfg.k * z @ cfg.d_array) * np.exp(-1j * cfg.k * dirs @ z)
    np.testing.assert_allclose(fb, fa * shift, rtol=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_jacobi_anger(dim):
    d = E3 if dim == 3 else (1.0, 0.0)
    cfg = ScatteringConfig(3.0, d, dim)
    pts = numerics.sample_directions(dim, 6) * 1.3
    series = forward.jacobi_anger_check(cfg, pts, 40)
    assert np.max(np.abs(series - np.exp(1j * cfg.k * pts @ cfg.d_array))) < 1e-12
    z = np.array([0.3, -0.1, 0.2][:dim])
    shifted = forward.jacobi_anger_check(cfg, pts, 40, z)
    assert np.max(np.abs(shifted - np.exp(1j * cfg.k * pts @ cfg.d_array))) < 1e-12


def test_interface_traces_continuous():
    for dim, med in [(3, BallMedium.constant((0.1, 0, 0), 1.0, 2.0 + 0.1j)),
                     (2, BallMedium.layered((0, 0.2), (0.3, 0.8), (1.5, 2.5)))]:
        d = E3 if dim == 3 else (1.0, 0.0)
        cfg = ScatteringConfig(2.0, d, dim)
        c = forward.modal_coefficients(cfg, med)
        ui, dui, uo, duo = forward.boundary_traces(c, cfg, med, numerics.sample_directions(dim, 20))
        assert np.max(np.abs(ui - uo)) < 1e-10
        assert np.max(np.abs(dui - duo)) < 1e-9


def test_field_satisfies_helmholtz_to_second_order():
    cfg = ScatteringConfig(1.0, E3, 3)
    med = BallMedium.constant((0, 0, 0), 1.0, 2.0)
    c = forward.modal_coefficients(cfg, med)

    def field(p):
        return forward.total_field(c, cfg, med, p)

    for x, n in [(np.array([0.2, 0.1, -0.3]), 2.0), (np.array([1.2, -0.5, 0.9]), 1.0)]:
        res = [abs(numerics.fd_helmholtz_residual(field, x, 1.0, n, h)) for h in (0.02, 0.01)]
        assert 1.8 < math.log2(res[0] / res[1]) < 2.2


def test_domain_errors():
    cfg = ScatteringConfig(1.0, E3, 3)
    med = BallMedium.constant((0, 0, 0), 1.0, 2.0)
    c = forward.modal_coefficients(cfg, med)
    with pytest.raises(ValueError):
        forward.scattered_field(c, cfg, med, [0.1, 0.0, 0.0])
    with pytest.raises(ValueError):
        forward.transmitted_field(c, cfg, med, [2.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        forward.far_field(c, cfg, med, [[1.0, 1.0, 0.0]])


@pytest.mark.parametrize("bad", [
    lambda: ScatteringConfig(0.0, E3, 3),
    lambda: ScatteringConfig(1.0, (1.0, 1.0, 0.0), 3),
    lambda: ScatteringConfig(1.0, E3, 4),
    lambda: BallMedium.constant((0, 0, 0), -1.0, 2.0),
    lambda: BallMedium.constant((0, 0, 0), 1.0, 2.0 - 0.1j),
    lambda: BallMedium.layered((0, 0, 0), (0.5, 0.4), (1.2, 1.3)),
])
def test_invalid_inputs(bad):
    with pytest.raises(ValueError):
        bad()


def test_singular_system_raised_with_mode_and_k():
    cfg = ScatteringConfig(1.25, E3, 3)
    med = BallMedium.constant((0, 0, 0), 1.0, 2.0)
    orig = forward._exterior_coefficients

    def zero_den(*args):
        A, den, scale = orig(*args)
        den = den.copy()
        den[2] = 0.0
        return A, den, scale

    with mock.patch.object(forward, "_exterior_coefficients", zero_den):
        with pytest.raises(SingularModalSystem) as info:
            forward.modal_coefficients(cfg, med)
    assert info.value.m == 2 and info.value.k == 1.25


def test_truncation_grows_with_size_parameter():
    cfg = ScatteringConfig(1.0, E3, 3)
    Ms = [forward.modal_coefficients(cfg, BallMedium.constant((0, 0, 0), R, 1.5)).M for R in (0.5, 2.0, 8.0)]
    assert Ms[0] < Ms[1] < Ms[2] <= forward.MAX_ORDER


def test_coefficient_decay_normalized_ratio():
    for t in (0.5, 1.0, 3.0):
        M0 = math.ceil(t) + 2
        A = forward.modal_coefficients(ScatteringConfig(1.0, E3, 3), BallMedium.constant((0, 0, 0), t, 2.0), M=4 * M0).A
        vals = [math.log(abs(A[m])) + 2 * specialfn.log_double_factorial(2 * m + 1) - (2 * m + 1) * math.log(t)
                for m in range(2 * M0, 4 * M0 + 1)]
        assert math.exp(max(vals) - min(vals)) < 10


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 4.0), st.floats(0.3, 1.5), st.floats(0.5, 3.0), st.floats(0.0, 0.5))
def test_absorbing_media_lose_energy(k, R, nr, ni):
    cfg = ScatteringConfig(k, E3, 3)
    c = forward.modal_coefficients(cfg, BallMedium.constant((0, 0, 0), R, complex(nr, ni)))
    # per-mode energy balance: |1 + 2A|^2 <= 1 with equality without absorption
    s = np.abs(1 + 2 * c.A)
    assert np.all(s <= 1 + 1e-10)
    if ni == 0:
        assert np.max(np.abs(s - 1)) < 1e-9
