"""
Interior transmission eigenvalues of a ball with two constant indices.

For ``Delta u + k^2 n^2 u = 0``, ``Delta v + k^2 nt^2 v = 0`` in ``|x| < R`` with
matching Cauchy data on the sphere, separation of variables gives one
determinant per angular mode::

    D_m(k) = f_m(knR) * k nt * f_m'(k nt R) - f_m(k nt R) * k n * f_m'(knR)

with ``f = j`` (3D) or ``J`` (2D).  It is evaluated in the equivalent form
``k n f(k nt R) f_{m+1}(knR) - k nt f(knR) f_{m+1}(k nt R)``, and for small
arguments as ``f f~ (k n rho - k nt rho~)`` with ``rho = f_{m+1}/f_m``, which
stays accurate as ``k -> 0``.

The module also carries the low-frequency bound machinery: the Dirichlet
Poincare constant of the ball, the threshold below which no real eigenvalue
can exist, and a spectral solver for ``Delta w + k^2 w = f`` with zero trace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import numerics, specialfn
from .errors import NotAnEigenvalue, ResonantWavenumber

__all__ = [
    "ITEProblem",
    "ITEEntry",
    "ITESpectrum",
    "BoundReport",
    "ITEEigenpair",
    "modal_ite_determinant",
    "scan_spectrum",
    "ite_eigenfunctions",
    "greens_identity_residual",
    "poincare_constant",
    "dirichlet_radial_zeros",
    "k0_bounds",
    "resolvent_bound_verify",
    "angular_norm",
]

EIGEN_TOL = 1e-8
ROOT_TOL = 1e-12
SMALL_ARG = 2.0


@dataclass(frozen=True)
class ITEProblem:
    """Two constant indices on the ball ``|x| < R`` and a scan window.

    ``n_star`` defaults to ``max(|n|, |n_tilde|)``.  Pairs with
    ``n**2 == n_tilde**2`` are rejected: the two equations coincide and
    every ``k`` is an eigenvalue.
    """

    R: float
    dim: int
    n: complex
    n_tilde: complex
    k_lo: float = 1e-3
    k_hi: float = 10.0
    m_max: int = 5
    n_star: Optional[float] = None

    def __post_init__(self):
        n, nt = complex(self.n), complex(self.n_tilde)
        if self.dim not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if self.R <= 0:
            raise ValueError("radius must be positive")
        if n.imag < 0 or nt.imag < 0 or n == 0 or nt == 0:
            raise ValueError("indices need Im >= 0 and nonzero modulus")
        if abs(n * n - nt * nt) <= 1e-14 * max(abs(n), abs(nt)) ** 2:
            raise ValueError("n and n_tilde must have distinct squares")
        if not 0 < self.k_lo < self.k_hi:
            raise ValueError("need 0 < k_lo < k_hi")
        if self.m_max < 0:
            raise ValueError("m_max must be nonnegative")
        nstar = max(abs(n), abs(nt)) if self.n_star is None else float(self.n_star)
        if max(abs(n), abs(nt)) > nstar * (1 + 1e-12):
            raise ValueError("indices exceed the n_star bound")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "n_tilde", nt)
        object.__setattr__(self, "n_star", nstar)

    @property
    def is_real(self) -> bool:
        return self.n.imag == 0 and self.n_tilde.imag == 0

    def swapped(self) -> "ITEProblem":
        return ITEProblem(self.R, self.dim, self.n_tilde, self.n, self.k_lo, self.k_hi, self.m_max, self.n_star)


@dataclass(frozen=True)
class ITEEntry:
    m: int
    k: float
    residual: float


@dataclass
class ITESpectrum:
    entries: list = field(default_factory=list)

    @property
    def ks(self) -> np.ndarray:
        return np.array([e.k for e in self.entries])

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class BoundReport:
    C1: float
    C: float
    k0_lemma: float
    k0_thm: float
    k0_effective: float


# ---------------------------------------------------------------------------
# determinant
# ---------------------------------------------------------------------------

def _det_parts(prob: ITEProblem, m: int, k):
    """Return (D, scale) with scale the sum of the magnitudes of the two products."""
    fam = specialfn.family(prob.dim)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    a = k * prob.n * prob.R
    b = k * prob.n_tilde * prob.R
    fa = fam._j(m + 1, a)
    fb = fam._j(m + 1, b)
    t1 = k * prob.n * fb[m] * fa[m + 1]
    t2 = k * prob.n_tilde * fa[m] * fb[m + 1]
    D = t1 - t2
    scale = np.abs(t1) + np.abs(t2)
    small = np.maximum(np.abs(a), np.abs(b)) < SMALL_ARG
    if np.any(small):
        ra = fam.ratios(m, a[small])[m]
        rb = fam.ratios(m, b[small])[m]
        D[small] = fa[m][small] * fb[m][small] * (k[small] * prob.n * ra - k[small] * prob.n_tilde * rb)
    return D, scale


def modal_ite_determinant(prob: ITEProblem, m: int, k):
    """``D_m(k)`` for the ball; complex in general, real for real indices."""
    D, _ = _det_parts(prob, m, k)
    return D[0] if np.ndim(k) == 0 else D


def normalized_determinant(prob: ITEProblem, m: int, k):
    """``|D_m(k)|`` relative to the size of its two products."""
    D, scale = _det_parts(prob, m, k)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(scale > 0, np.abs(D) / scale, 0.0)
    return out[0] if np.ndim(k) == 0 else out


def _complex_candidates(prob, m, grid_points, tol):
    grid = np.linspace(prob.k_lo, prob.k_hi, grid_points)
    vals = normalized_determinant(prob, m, grid)
    out = []
    for i in range(1, len(grid) - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
            res = minimize_scalar(
                lambda k: float(normalized_determinant(prob, m, k)),
                bounds=(grid[i - 1], grid[i + 1]),
                method="bounded",
                options={"xatol": tol},
            )
            if res.fun < 1e-10:
                out.append(ITEEntry(m, float(res.x), float(res.fun)))
    return out


def scan_spectrum(
    prob: ITEProblem,
    grid_points: Optional[int] = None,
    tol: float = ROOT_TOL,
) -> ITESpectrum:
    """Eigenvalues in ``[k_lo, k_hi]`` for modes ``0..m_max``.

    Real indices: sign changes of ``D_m`` refined to width ``tol``.  Complex
    indices: local minima of ``|D_m|`` with normalized value below 1e-10.
    Tangential roots are not detected.
    """
    if grid_points is None:
        grid_points = max(3, int(math.ceil(numerics.POINTS_PER_UNIT_K * (prob.k_hi - prob.k_lo))) + 1)
    entries: list[ITEEntry] = []
    for m in range(prob.m_max + 1):
        if prob.is_real:
            def f(k, m=m):
                return float(modal_ite_determinant(prob, m, k).real)

            def f_grid(ks, m=m):
                return modal_ite_determinant(prob, m, ks).real

            for r in numerics.bracket_and_refine(f, prob.k_lo, prob.k_hi, grid_points, tol, f_grid):
                entries.append(ITEEntry(m, r.root, float(normalized_determinant(prob, m, r.root))))
        else:
            entries.extend(_complex_candidates(prob, m, grid_points, tol))
    entries.sort(key=lambda e: (e.k, e.m))
    return ITESpectrum(entries)


# ---------------------------------------------------------------------------
# eigenfunctions
# ---------------------------------------------------------------------------

def angular_norm(dim: int, m: int) -> float:
    """``int |Y_m|^2`` over the unit sphere for ``P_m(cos theta)`` or ``cos(m theta)``."""
    if dim == 3:
        return 4.0 * math.pi / (2 * m + 1)
    return 2.0 * math.pi if m == 0 else math.pi


@dataclass(frozen=True)
class ITEEigenpair:
    """Radial profiles ``u = c_u f_m(k n r)``, ``v = c_v f_m(k nt r)``.

    Full fields carry the angular factor ``P_m(x_N / r)`` (3D) or
    ``cos(m phi)`` (2D), with ``v`` normalized to unit L2 norm on the ball.
    """

    prob: ITEProblem
    m: int
    k: float
    c_u: complex
    c_v: complex

    def _radial(self, idx, r, deriv=False):
        fam = specialfn.family(self.prob.dim)
        r = np.asarray(r, dtype=float)
        c = self.c_u if idx == 0 else self.c_v
        kn = self.k * (self.prob.n if idx == 0 else self.prob.n_tilde)
        vals = fam._j(self.m + 1, kn * r)
        if deriv:
            return c * kn * fam._deriv(vals)[self.m]
        return c * vals[self.m]

    def u(self, r):
        return self._radial(0, r)

    def v(self, r):
        return self._radial(1, r)

    def du(self, r):
        return self._radial(0, r, deriv=True)

    def dv(self, r):
        return self._radial(1, r, deriv=True)

    @property
    def w_scale(self) -> complex:
        p = self.prob
        return 1.0 / (self.k**2 * (p.n_tilde**2 - p.n**2))

    def w(self, r):
        return (self.u(r) - self.v(r)) * self.w_scale

    def dw(self, r):
        return (self.du(r) - self.dv(r)) * self.w_scale

    def _angular(self, pts):
        pts = np.atleast_2d(pts)
        r = np.linalg.norm(pts, axis=1)
        if self.prob.dim == 3:
            with np.errstate(invalid="ignore", divide="ignore"):
                c = np.where(r > 0, pts[:, 2] / r, 1.0)
            return r, specialfn.legendre_p(self.m, np.clip(c, -1, 1))
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        return r, np.cos(self.m * phi)

    def u_field(self, pts):
        r, a = self._angular(pts)
        return self.u(r) * a

    def v_field(self, pts):
        r, a = self._angular(pts)
        return self.v(r) * a

    def w_field(self, pts):
        r, a = self._angular(pts)
        return self.w(r) * a


def _check_eigen(prob, m, k, tol=EIGEN_TOL):
    res = float(normalized_determinant(prob, m, k))
    if not res < tol:
        raise NotAnEigenvalue(f"|D_{m}({k!r})| = {res:.3g} (normalized) exceeds {tol:g}")
    return res


def ite_eigenfunctions(prob: ITEProblem, m: int, k_star: float, check: bool = True) -> ITEEigenpair:
    """Null vector of the mode-``m`` boundary system at ``k_star``.

    Raises
    ------
    NotAnEigenvalue
        If the normalized determinant exceeds 1e-8 (skipped with ``check=False``).
    """
    if check:
        _check_eigen(prob, m, k_star)
    fam = specialfn.family(prob.dim)
    R, k = prob.R, k_star
    a, b = k * prob.n * R, k * prob.n_tilde * R
    ja = fam._j(m + 1, a)
    jb = fam._j(m + 1, b)
    va, vb = ja[m], jb[m]
    da, db = k * prob.n * fam._deriv(ja)[m], k * prob.n_tilde * fam._deriv(jb)[m]
    # pick the better-scaled boundary row to define the null vector
    if abs(va) * abs(vb) >= abs(da) * abs(db) * min(R, 1.0) ** 2 and (abs(va) + abs(vb)) > 0:
        c_u, c_v = vb, va
    else:
        c_u, c_v = db, da
    pair = ITEEigenpair(prob, m, float(k_star), complex(c_u), complex(c_v))
    quad = numerics.ball_quadrature(R, prob.dim, 48, max(m + 4, 8))
    norm = math.sqrt(float(np.real(quad.integrate(np.abs(pair.v_field(quad.nodes)) ** 2))))
    return ITEEigenpair(prob, m, float(k_star), complex(c_u) / norm, complex(c_v) / norm)


def greens_identity_residual(
    prob: ITEProblem,
    m: int,
    k_star: float,
    order: int = 64,
    check: bool = True,
) -> float:
    """Relative mismatch of ``int |v|^2 = k^2 (n^2 - conj(nt)^2) int conj(v) w``.

    Radial integrals use Gauss-Legendre of the given order; the common angular
    factor cancels.  Off an eigenvalue the boundary terms no longer vanish and
    the mismatch grows (pass ``check=False`` to evaluate there).
    """
    pair = ite_eigenfunctions(prob, m, k_star, check=check)
    rule = numerics.radial_rule(prob.R, order)
    r, w = rule.nodes, rule.weights * rule.nodes ** (prob.dim - 1)
    v = pair.v(r)
    lhs = np.sum(w * np.abs(v) ** 2)
    rhs = k_star**2 * (prob.n**2 - np.conj(prob.n_tilde) ** 2) * np.sum(w * np.conj(v) * pair.w(r))
    return float(abs(lhs - rhs) / abs(lhs))


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

def _radial_j0(dim):
    fam = specialfn.family(dim)
    return lambda x: float(fam._j(0, x)[0].real)


@lru_cache(maxsize=None)
def dirichlet_radial_zeros(dim: int, count: int) -> tuple:
    """First ``count`` positive zeros of ``j_0`` (3D) or ``J_0`` (2D)."""
    f = _radial_j0(dim)
    hi = math.pi * (count + 1)
    roots = numerics.bracket_and_refine(f, 1.0, hi, int(20 * hi), 1e-13)
    zeros = [r.root for r in roots]
    if len(zeros) < count:
        raise RuntimeError("missed Dirichlet zeros in scan")
    return tuple(zeros[:count])


def poincare_constant(R: float, N: int) -> float:
    """Optimal Poincare constant ``1/lambda_1`` of the ball of radius ``R``."""
    if R <= 0:
        raise ValueError("radius must be positive")
    mu = dirichlet_radial_zeros(N, 1)[0]
    return (R / mu) ** 2


def k0_bounds(R: float, N: int, n_star: float) -> BoundReport:
    """Low-frequency thresholds.

    ``k0_lemma = 1/(2 sqrt(C1))`` makes the zero-trace Helmholtz solve bounded
    with constant ``C = sqrt(2) C1``; ``k0_thm = 1/(sqrt(2C) n_star)`` is the
    supremum of the admissible open range for uniqueness.  Below
    ``k0_effective = min(k0_lemma, k0_thm)`` no real eigenvalue exists.
    """
    if R <= 0 or n_star <= 0:
        raise ValueError("radius and n_star must be positive")
    C1 = poincare_constant(R, N)
    C = math.sqrt(2.0) * C1
    k0_lemma = 1.0 / (2.0 * math.sqrt(C1))
    k0_thm = 1.0 / (math.sqrt(2.0 * C) * n_star)
    return BoundReport(C1, C, k0_lemma, k0_thm, min(k0_lemma, k0_thm))


def _dirichlet_mode(dim, mu, R, r):
    x = mu * np.asarray(r, dtype=float) / R
    if dim == 3:
        return np.sinc(x / math.pi)
    return specialfn.family(2)._j(0, x)[0].real


def resolvent_bound_verify(R: float, N: int, k: float, f_coeffs, order: int = 256, check_regime: bool = True):
    """Solve ``Delta w + k^2 w = f``, ``w = 0`` on the sphere, spectrally.

    ``f`` is radial and given by its coefficients on the first (at most 50)
    Dirichlet eigenfunctions ``f_0(mu_j r / R)``.  Returns
    ``(norm_ratio, bound)`` with ``norm_ratio = ||w|| / ||f||`` from radial
    quadrature and ``bound = sqrt(2) C1``.  The bound is only claimed for
    ``k < k0_lemma``; pass ``check_regime=False`` to evaluate beyond it.

    Raises
    ------
    ResonantWavenumber
        If ``k**2`` is within 1e-12 of a retained eigenvalue.
    """
    f_coeffs = np.asarray(f_coeffs, dtype=complex)
    J = f_coeffs.size
    if J > 50:
        raise ValueError("at most 50 eigenbasis coefficients")
    C1 = poincare_constant(R, N)
    if check_regime and not k < 1.0 / (2.0 * math.sqrt(C1)):
        raise ValueError("k must lie below k0_lemma")
    mus = np.asarray(dirichlet_radial_zeros(N, J))
    lam = (mus / R) ** 2
    gap = k**2 - lam
    if np.any(np.abs(gap) < 1e-12):
        raise ResonantWavenumber(f"k^2 = {k**2!r} hits a Dirichlet eigenvalue")
    w_coeffs = f_coeffs / gap
    rule = numerics.radial_rule(R, order)
    r, wt = rule.nodes, rule.weights * rule.nodes ** (N - 1)
    basis = np.array([_dirichlet_mode(N, mu, R, r) for mu in mus])
    f_vals = f_coeffs @ basis
    w_vals = w_coeffs @ basis
    ratio = math.sqrt(np.sum(wt * np.abs(w_vals) ** 2) / np.sum(wt * np.abs(f_vals) ** 2))
    return ratio, math.sqrt(2.0) * C1
