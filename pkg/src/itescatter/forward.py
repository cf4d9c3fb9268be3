"""
Forward scattering of a plane wave by a penetrable ball (3D) or disc (2D).

The medium obeys ``Delta u + k^2 n^2 u = 0``; note the *square* of the index.
Data generated elsewhere with the ``k^2 n`` convention must be converted
(``n_here = sqrt(n_there)``) before use.

Fields are expanded about the ball centre ``z`` in separated modes::

    3D:  u^s = sum_m i^m (2m+1) A_m h_m(k|x-z|) P_m(cos theta)
    2D:  u^s = sum_m eps_m i^m A_m H_m(k|x-z|) cos(m theta),  eps_0 = 1, eps_m = 2

with ``theta`` the angle between ``d`` and ``x - z``.  The far-field pattern is
the coefficient in ``u^s(x) = e^{ik|x|} |x|^{-(N-1)/2} u_inf(x_hat) + ...``
(measured from the origin, not from ``z``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import specialfn
from .errors import SingularModalSystem

__all__ = [
    "ScatteringConfig",
    "Constant",
    "Layered",
    "SoundSoft",
    "BallMedium",
    "ModalCoefficients",
    "FarFieldPattern",
    "translate_phase",
    "modal_coefficients",
    "layered_modal_coefficients",
    "closed_form_coefficients",
    "solve_modal_system",
    "scattered_field",
    "transmitted_field",
    "total_field",
    "far_field",
    "jacobi_anger_check",
    "boundary_traces",
    "solve_far_field",
    "DEFAULT_TOL",
    "MAX_ORDER",
]

DEFAULT_TOL = 1e-12
MAX_ORDER = 200
TRANSFER_COND_LIMIT = 1e12
SINGULAR_TOL = 1e-14


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScatteringConfig:
    """Wavenumber ``k``, unit incident direction ``d`` and dimension."""

    k: float
    d: tuple
    dim: int = 3

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.dim!r}")
        if not self.k > 0:
            raise ValueError("wavenumber must be positive")
        d = tuple(float(c) for c in self.d)
        if len(d) != self.dim:
            raise ValueError("direction length must match dimension")
        if abs(math.hypot(*d) - 1.0) > 1e-12:
            raise ValueError("incident direction must be a unit vector")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "k", float(self.k))

    @property
    def d_array(self) -> np.ndarray:
        return np.asarray(self.d)


def _check_index(n: complex) -> complex:
    n = complex(n)
    if n.imag < 0 or n == 0:
        raise ValueError(f"refractive index needs Im n >= 0 and n != 0, got {n}")
    return n


@dataclass(frozen=True)
class Constant:
    n: complex

    def __post_init__(self):
        object.__setattr__(self, "n", _check_index(self.n))


@dataclass(frozen=True)
class Layered:
    """Piecewise-constant radial index; ``radii[i]`` is the outer radius of layer i."""

    radii: tuple
    indices: tuple

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        idx = tuple(_check_index(n) for n in self.indices)
        if len(radii) != len(idx) or not radii:
            raise ValueError("need one index per layer")
        if radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("layer radii must be positive and strictly increasing")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "indices", idx)


@dataclass(frozen=True)
class SoundSoft:
    pass


Profile = Union[Constant, Layered, SoundSoft]


@dataclass(frozen=True)
class BallMedium:
    center: tuple
    radius: float
    profile: Profile

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if isinstance(self.profile, Layered) and abs(self.profile.radii[-1] - self.radius) > 1e-12 * self.radius:
            raise ValueError("outermost layer radius must equal the ball radius")

    @classmethod
    def constant(cls, center, radius, n):
        return cls(center, radius, Constant(n))

    @classmethod
    def layered(cls, center, radii, indices):
        return cls(center, radii[-1], Layered(radii, indices))

    @classmethod
    def soundsoft(cls, center, radius):
        return cls(center, radius, SoundSoft())

    @property
    def z(self) -> np.ndarray:
        return np.asarray(self.center)

    def index_at(self, r):
        """Refractive index at distance ``r`` from the centre (1 outside)."""
        r = np.asarray(r, dtype=float)
        p = self.profile
        out = np.ones(r.shape, dtype=complex)
        if isinstance(p, Constant):
            out[r < self.radius] = p.n
        elif isinstance(p, Layered):
            layer = np.searchsorted(np.asarray(p.radii), r, side="right")
            inside = r < self.radius
            out[inside] = np.asarray(p.indices)[layer[inside]]
        return out


@dataclass(frozen=True)
class ModalCoefficients:
    """Exterior (``A``) and interior (``B``) modal coefficients, orders 0..M.

    For layered media ``B`` holds the innermost-layer coefficients and the
    per-layer radial functions ``amp * (f_reg + beta * f_irr)`` are kept in
    ``layer_amp`` and ``layer_beta`` (shape ``(M + 1, L)``).
    """

    M: int
    A: np.ndarray
    B: np.ndarray
    dim: int
    k: float
    layer_amp: Optional[np.ndarray] = field(default=None, repr=False)
    layer_beta: Optional[np.ndarray] = field(default=None, repr=False)


@dataclass(frozen=True)
class FarFieldPattern:
    directions: np.ndarray
    values: np.ndarray
    config: ScatteringConfig


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def translate_phase(cfg: ScatteringConfig, z) -> complex:
    """Phase ``exp(i k z.d)`` picked up by a ball centred at ``z``."""
    return complex(np.exp(1j * cfg.k * np.dot(np.asarray(z, dtype=float), cfg.d_array)))


def _mode_weights(dim: int, M: int) -> np.ndarray:
    m = np.arange(M + 1)
    if dim == 3:
        return (2 * m + 1).astype(float)
    w = np.full(M + 1, 2.0)
    w[0] = 1.0
    return w


def _angular(dim: int, M: int, cos_theta: np.ndarray) -> np.ndarray:
    """Angular factors P_m(cos theta) or cos(m theta), shape (M+1, P)."""
    c = np.clip(cos_theta, -1.0, 1.0)
    if dim == 3:
        return specialfn.legendre_p_all(M, c)
    theta = np.arccos(c)
    return np.cos(np.arange(M + 1)[:, None] * theta[None, :])


def _cos_theta(d: np.ndarray, vec: np.ndarray, norm: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        c = vec @ d / norm
    c = np.where(norm > 0, c, 1.0)
    return np.clip(c, -1.0, 1.0)


def _regular_q(fam, M: int, k: float, nu: complex, r: float) -> np.ndarray:
    """``k nu f_{m+1}/f_m`` at ``k nu r`` for the regular radial function."""
    return k * nu * fam.ratios(M, k * nu * r)


def _has_contrast(profile) -> bool:
    if isinstance(profile, Constant):
        return profile.n != 1
    if isinstance(profile, Layered):
        return any(n != 1 for n in profile.indices)
    return True


def _exterior_coefficients(q, jv, hv, k, e):
    """A_m from the reduced log-derivative ``q`` of the interior radial function.

    ``jv``/``hv`` hold orders 0..M+1 at ``t = kR``.
    """
    num = q * jv[:-1] - k * jv[1:]
    den = q * hv[:-1] - k * hv[1:]
    return -e * num / den, den, np.abs(q * hv[:-1]) + np.abs(k * hv[1:])


def _choose_order(w: np.ndarray, tol: float) -> int:
    """Smallest M whose next three relative mode magnitudes are below ``tol``."""
    peak = np.max(w)
    if not peak > 0:
        return 0
    small = w < tol * peak
    for m in range(len(w) - 3):
        if small[m + 1] and small[m + 2] and small[m + 3]:
            return m
    return len(w) - 1


def _solve_modes(cfg: ScatteringConfig, med: BallMedium, M: int, q_fn):
    fam = specialfn.family(cfg.dim)
    k, R = cfg.k, med.radius
    t = k * R
    e = translate_phase(cfg, med.center)
    _, _, jv = fam.regular(M, t)
    _, _, hv = fam.outgoing(M, t)
    with np.errstate(all="ignore"):
        if isinstance(med.profile, SoundSoft):
            A = -e * jv[:-1] / hv[:-1]
            extra = None
        else:
            q, extra = q_fn(fam, M)
            A, den, scale = _exterior_coefficients(q, jv, hv, k, e)
            bad = np.isfinite(den) & (np.abs(den) < SINGULAR_TOL * scale)
            if np.any(bad):
                m = int(np.argmax(bad))
                raise SingularModalSystem(m, k, "modal determinant vanishes")
    A = np.where(np.isfinite(A), A, 0.0)
    if not _has_contrast(med.profile):
        A = np.zeros(M + 1, dtype=complex)
    U = e * jv[:-1] + A * hv[:-1]
    U = np.where(np.isfinite(U), U, 0.0)
    with np.errstate(all="ignore"):
        w = _mode_weights(cfg.dim, M) * (np.abs(A * hv[:-1]) + np.abs(jv[:-1]))
    w = np.where(np.isfinite(w), w, 0.0)
    return A, U, w, extra


def _truncated(cfg, med, tol, M, solver):
    if M is not None:
        return solver(int(M))
    t = cfg.k * med.radius
    trial = min(MAX_ORDER, int(t + 10 * t ** (1 / 3) + 30))
    while True:
        res = solver(trial)
        Mc = _choose_order(res[2], tol)
        if Mc < trial - 3 or trial >= MAX_ORDER:
            return solver(min(Mc, MAX_ORDER))
        trial = min(MAX_ORDER, 2 * trial)


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------

def modal_coefficients(
    cfg: ScatteringConfig,
    med: BallMedium,
    tol: float = DEFAULT_TOL,
    M: Optional[int] = None,
) -> ModalCoefficients:
    """Modal coefficients of a homogeneous or sound-soft ball.

    The order ``M`` is the smallest one after which three consecutive modes
    have boundary magnitude ``(2m+1)(|A_m h_m(kR)| + |j_m(kR)|)`` below
    ``tol`` relative to the largest mode (capped at 200).  Pass ``M`` to
    override.

    Raises
    ------
    SingularModalSystem
        When a modal determinant vanishes (``k`` is a resonance).
    """
    if isinstance(med.profile, Layered):
        return layered_modal_coefficients(cfg, med, tol, M)

    fam = specialfn.family(cfg.dim)

    def q_fn(fam, M):
        return _regular_q(fam, M, cfg.k, med.profile.n, med.radius), None

    def solver(M):
        return _solve_modes(cfg, med, M, q_fn)

    A, U, w, _ = _truncated(cfg, med, tol, M, solver)
    Mf = A.size - 1
    if isinstance(med.profile, SoundSoft):
        B = np.zeros(0, dtype=complex)
    else:
        jn, _, _ = fam.regular(Mf, cfg.k * med.profile.n * med.radius)
        with np.errstate(all="ignore"):
            B = U / jn
        B = np.where(np.isfinite(B), B, 0.0)
    return ModalCoefficients(Mf, A, B, cfg.dim, cfg.k)


def _transfer_sweep(fam, M, k, radii, indices):
    """Propagate ``q`` outward through the layers; keep per-layer betas.

    In layer ``l`` the radial function is ``f_reg(k n_l r) + beta_l f_irr(k n_l r)``.
    """
    L = len(radii)
    betas = np.zeros((M + 1, L), dtype=complex)
    q = _regular_q(fam, M, k, indices[0], radii[0])
    for l in range(1, L):
        nu = indices[l]
        z_in = k * nu * radii[l - 1]
        _, _, jv = fam.regular(M, z_in)
        _, _, yv = fam.irregular(M, z_in)
        mat = np.empty((M + 1, 2, 2), dtype=complex)
        mat[:, 0, 0], mat[:, 0, 1] = jv[:-1], yv[:-1]
        mat[:, 1, 0], mat[:, 1, 1] = k * nu * jv[1:], k * nu * yv[1:]
        with np.errstate(all="ignore"):
            mat = mat / np.linalg.norm(mat, axis=1, keepdims=True)
            mat = mat / np.linalg.norm(mat, axis=2, keepdims=True)
            ok = np.all(np.isfinite(mat), axis=(1, 2))
            cond = np.full(M + 1, 1.0)
            if np.any(ok):
                cond[ok] = np.linalg.cond(mat[ok])
        if np.any(cond > TRANSFER_COND_LIMIT):
            m = int(np.argmax(cond > TRANSFER_COND_LIMIT))
            raise SingularModalSystem(m, k, f"transfer matrix condition {cond[m]:.3g} at layer {l}")
        with np.errstate(all="ignore"):
            beta = (k * nu * jv[1:] - q * jv[:-1]) / (q * yv[:-1] - k * nu * yv[1:])
            z_out = k * nu * radii[l]
            _, _, jo = fam.regular(M, z_out)
            _, _, yo = fam.irregular(M, z_out)
            q = k * nu * (jo[1:] + beta * yo[1:]) / (jo[:-1] + beta * yo[:-1])
        betas[:, l] = beta
    return q, betas


def _layer_value(fam, M, k, nu, r, beta):
    jv, _, _ = fam.regular(M, k * nu * r)
    if np.all(beta == 0):
        return jv
    yv, _, _ = fam.irregular(M, k * nu * r)
    with np.errstate(all="ignore"):
        return jv + beta * yv


def layered_modal_coefficients(
    cfg: ScatteringConfig,
    med: BallMedium,
    tol: float = DEFAULT_TOL,
    M: Optional[int] = None,
) -> ModalCoefficients:
    """Modal coefficients of a concentric layered ball by a transfer sweep.

    Continuity of the field and its radial derivative is carried across every
    interface as continuity of ``q = m/r - f'/f``; a single layer reproduces
    :func:`modal_coefficients` exactly.
    """
    prof = med.profile
    if not isinstance(prof, Layered):
        raise TypeError("layered_modal_coefficients needs a Layered profile")
    radii, indices = prof.radii, prof.indices

    def q_fn(fam, M):
        return _transfer_sweep(fam, M, cfg.k, radii, indices)

    def solver(M):
        return _solve_modes(cfg, med, M, q_fn)

    A, U, w, betas = _truncated(cfg, med, tol, M, solver)
    Mf = A.size - 1
    fam = specialfn.family(cfg.dim)
    L = len(radii)
    amp = np.zeros((Mf + 1, L), dtype=complex)
    with np.errstate(all="ignore"):
        outer = _layer_value(fam, Mf, cfg.k, indices[-1], radii[-1], betas[:, -1])
        amp[:, -1] = U / outer
        for l in range(L - 2, -1, -1):
            here = _layer_value(fam, Mf, cfg.k, indices[l], radii[l], betas[:, l])
            there = _layer_value(fam, Mf, cfg.k, indices[l + 1], radii[l], betas[:, l + 1])
            amp[:, l] = amp[:, l + 1] * there / here
    amp = np.where(np.isfinite(amp), amp, 0.0)
    return ModalCoefficients(Mf, A, amp[:, 0].copy(), cfg.dim, cfg.k, amp, betas)


def closed_form_coefficients(cfg: ScatteringConfig, med: BallMedium, M: int) -> np.ndarray:
    """A_m from the textbook quotient of Bessel products (constant index only).

    ``A_m = -e (j'(t) j(tn) - n j(t) j'(tn)) / (h'(t) j(tn) - n h(t) j'(tn))``.
    Kept as an independent path for cross-checks; it overflows for large
    ``|Im n|`` and loses digits for high orders.
    """
    n = med.profile.n
    fam = specialfn.family(cfg.dim)
    t = cfg.k * med.radius
    e = translate_phase(cfg, med.center)
    j, jp, _ = fam.regular(M, t)
    h, hp, _ = fam.outgoing(M, t)
    jn, jnp, _ = fam.regular(M, t * n)
    return -e * (jp * jn - n * j * jnp) / (hp * jn - n * h * jnp)


def solve_modal_system(cfg: ScatteringConfig, med: BallMedium, M: int):
    """Solve the 2x2 interface system mode by mode with a dense solver.

    Rows: field continuity and ``t`` times radial-derivative continuity.
    Returns ``(A, B)``.
    """
    n = med.profile.n
    fam = specialfn.family(cfg.dim)
    t = cfg.k * med.radius
    e = translate_phase(cfg, med.center)
    j, jp, _ = fam.regular(M, t)
    h, hp, _ = fam.outgoing(M, t)
    jn, jnp, _ = fam.regular(M, t * n)
    mats = np.empty((M + 1, 2, 2), dtype=complex)
    mats[:, 0, 0], mats[:, 0, 1] = h, -jn
    mats[:, 1, 0], mats[:, 1, 1] = t * hp, -t * n * jnp
    rhs = -e * np.stack([j, t * jp], axis=1)
    sol = np.linalg.solve(mats, rhs[..., None])[..., 0]
    return sol[:, 0], sol[:, 1]


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

def _points(x, dim):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != dim:
        raise ValueError(f"points must have {dim} coordinates")
    return x, single


def _series(coeffs, cfg, radial, cos_theta):
    ang = _angular(cfg.dim, coeffs.M, cos_theta)
    m = np.arange(coeffs.M + 1)
    pref = (1j**m * _mode_weights(cfg.dim, coeffs.M))[:, None]
    with np.errstate(all="ignore"):
        terms = pref * radial * ang
    terms = np.where(np.isfinite(terms), terms, 0.0)
    return np.sum(terms, axis=0)


def scattered_field(coeffs: ModalCoefficients, cfg: ScatteringConfig, med: BallMedium, x):
    """Truncated exterior series at points with ``|x - z| > R``."""
    pts, single = _points(x, cfg.dim)
    rel = pts - med.z
    r = np.linalg.norm(rel, axis=1)
    if np.any(r <= med.radius):
        raise ValueError("scattered_field needs points strictly outside the ball")
    fam = specialfn.family(cfg.dim)
    h, _, _ = fam.outgoing(coeffs.M, cfg.k * r)
    val = _series(coeffs, cfg, coeffs.A[:, None] * h, _cos_theta(cfg.d_array, rel, r))
    return val[0] if single else val


def _interior_radial(coeffs, cfg, med, r):
    fam = specialfn.family(cfg.dim)
    prof = med.profile
    if isinstance(prof, Constant):
        jn, _, _ = fam.regular(coeffs.M, cfg.k * prof.n * r)
        return coeffs.B[:, None] * jn
    if isinstance(prof, Layered):
        radial = np.zeros((coeffs.M + 1, r.size), dtype=complex)
        layer = np.searchsorted(np.asarray(prof.radii), r, side="right")
        for l, nu in enumerate(prof.indices):
            sel = layer == l
            if not np.any(sel):
                continue
            beta = coeffs.layer_beta[:, l][:, None]
            z = cfg.k * nu * r[sel]
            jv, _, _ = fam.regular(coeffs.M, z)
            val = jv
            if l > 0:
                yv, _, _ = fam.irregular(coeffs.M, z)
                with np.errstate(all="ignore"):
                    val = jv + beta * yv
            radial[:, sel] = coeffs.layer_amp[:, l][:, None] * val
        return radial
    return np.zeros((coeffs.M + 1, r.size), dtype=complex)


def transmitted_field(coeffs: ModalCoefficients, cfg: ScatteringConfig, med: BallMedium, x):
    """Truncated interior series at points with ``|x - z| < R``.

    Zero inside a sound-soft ball.
    """
    pts, single = _points(x, cfg.dim)
    rel = pts - med.z
    r = np.linalg.norm(rel, axis=1)
    if np.any(r >= med.radius):
        raise ValueError("transmitted_field needs points strictly inside the ball")
    radial = _interior_radial(coeffs, cfg, med, r)
    val = _series(coeffs, cfg, radial, _cos_theta(cfg.d_array, rel, r))
    return val[0] if single else val


def total_field(coeffs: ModalCoefficients, cfg: ScatteringConfig, med: BallMedium, x):
    """Transmitted field inside, incident plus scattered field outside."""
    pts, single = _points(x, cfg.dim)
    r = np.linalg.norm(pts - med.z, axis=1)
    out = np.empty(len(pts), dtype=complex)
    ins = r < med.radius
    if np.any(ins):
        out[ins] = transmitted_field(coeffs, cfg, med, pts[ins])
    if np.any(~ins):
        po = pts[~ins]
        out[~ins] = np.exp(1j * cfg.k * po @ cfg.d_array) + scattered_field(coeffs, cfg, med, po)
    return out[0] if single else out


def far_field(
    coeffs: ModalCoefficients,
    cfg: ScatteringConfig,
    med: BallMedium,
    directions,
) -> FarFieldPattern:
    """Far-field pattern at the given unit directions.

    Uses the outgoing asymptotics of ``h_m`` (3D) or ``H_m`` (2D)::

        3D: u_inf = (-i/k) e^{-ik x.z} sum (2m+1) A_m P_m(x.d)
        2D: u_inf = sqrt(2/(pi k)) e^{-i pi/4} e^{-ik x.z} sum eps_m A_m cos(m theta)
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    if dirs.shape[1] != cfg.dim:
        raise ValueError(f"directions must have {cfg.dim} components")
    norms = np.linalg.norm(dirs, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise ValueError("directions must be unit vectors")
    c = np.clip(dirs @ cfg.d_array, -1.0, 1.0)
    ang = _angular(cfg.dim, coeffs.M, c)
    s = (_mode_weights(cfg.dim, coeffs.M) * coeffs.A) @ ang
    k = cfg.k
    if cfg.dim == 3:
        pref = -1j / k
    else:
        pref = math.sqrt(2.0 / (math.pi * k)) * np.exp(-0.25j * math.pi)
    shift = np.exp(-1j * k * dirs @ med.z)
    return FarFieldPattern(dirs, pref * shift * s, cfg)


def solve_far_field(cfg: ScatteringConfig, med: BallMedium, directions, tol: float = DEFAULT_TOL):
    """Coefficients plus far field in one call."""
    return far_field(modal_coefficients(cfg, med, tol), cfg, med, directions)


def jacobi_anger_check(cfg: ScatteringConfig, x, M: int, z=None):
    """Truncated plane-wave expansion of ``exp(i k x.d)`` about ``z`` (default 0)."""
    pts, single = _points(x, cfg.dim)
    z = np.zeros(cfg.dim) if z is None else np.asarray(z, dtype=float)
    rel = pts - z
    r = np.linalg.norm(rel, axis=1)
    fam = specialfn.family(cfg.dim)
    jv, _, _ = fam.regular(M, cfg.k * r)
    e = translate_phase(cfg, z)
    dummy = ModalCoefficients(M, np.zeros(M + 1), np.zeros(0), cfg.dim, cfg.k)
    val = e * _series(dummy, cfg, jv, _cos_theta(cfg.d_array, rel, r))
    return val[0] if single else val


def boundary_traces(coeffs: ModalCoefficients, cfg: ScatteringConfig, med: BallMedium, directions):
    """One-sided traces of the total field and its radial derivative on ``|x - z| = R``.

    Returns ``(u_in, du_in, u_out, du_out)`` at ``z + R * x_hat``; the outer
    trace uses the exact incident wave plus the scattered series.  For a
    sound-soft ball the inner traces are zero.
    """
    dirs = np.atleast_2d(np.asarray(directions, dtype=float))
    fam = specialfn.family(cfg.dim)
    k, R, M = cfg.k, med.radius, coeffs.M
    c = np.clip(dirs @ cfg.d_array, -1.0, 1.0)
    prof = med.profile
    if isinstance(prof, Constant):
        _, _, jn = fam.regular(M + 1, k * prof.n * R)
        dj = fam._deriv(jn)[: M + 1]
        rad_in = coeffs.B[:, None] * jn[: M + 1, None]
        drad_in = (k * prof.n) * coeffs.B[:, None] * dj[:, None]
    elif isinstance(prof, Layered):
        nu = prof.indices[-1]
        z = k * nu * R
        _, _, jv = fam.regular(M + 1, z)
        beta, amp = coeffs.layer_beta[:, -1], coeffs.layer_amp[:, -1]
        val, der = jv[: M + 1], fam._deriv(jv)[: M + 1]
        if len(prof.indices) > 1:
            _, _, yv = fam.irregular(M + 1, z)
            val = val + beta * yv[: M + 1]
            der = der + beta * fam._deriv(yv)[: M + 1]
        rad_in = (amp * val)[:, None]
        drad_in = (k * nu * amp * der)[:, None]
    else:
        rad_in = drad_in = np.zeros((M + 1, 1), dtype=complex)
    _, _, hv = fam.outgoing(M + 1, k * R)
    dh = fam._deriv(hv)[: M + 1]
    rad_out = coeffs.A[:, None] * hv[: M + 1, None]
    drad_out = k * coeffs.A[:, None] * dh[:, None]
    u_in = _series(coeffs, cfg, rad_in, c)
    du_in = _series(coeffs, cfg, drad_in, c)
    pts = med.z + R * dirs
    inc = np.exp(1j * k * pts @ cfg.d_array)
    u_out = inc + _series(coeffs, cfg, rad_out, c)
    du_out = 1j * k * (dirs @ cfg.d_array) * inc + _series(coeffs, cfg, drad_out, c)
    return u_in, du_in, u_out, du_out
