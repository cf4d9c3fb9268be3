"""
Shared numerical machinery: quadrature rules, sign-change root scanning,
finite-difference Helmholtz residuals, direction sampling and a multistart
Levenberg-Marquardt driver.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NonConvergence

__all__ = [
    "QuadratureRule",
    "BracketedRoot",
    "LSQResult",
    "DEFAULT_SEED",
    "gauss_legendre",
    "radial_rule",
    "ball_quadrature",
    "bracket_and_refine",
    "fd_helmholtz_residual",
    "sample_directions",
    "least_squares_minimize",
]

DEFAULT_SEED = 20240917
POINTS_PER_UNIT_K = 40


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights on a tagged domain.

    ``nodes`` is 1-D for interval rules and ``(P, N)`` for ball rules.
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain: str
    degree: int

    def integrate(self, values) -> complex:
        return np.sum(self.weights * np.asarray(values))


@dataclass(frozen=True)
class BracketedRoot:
    lo: float
    hi: float
    root: float
    residual: float


def gauss_legendre(order: int) -> QuadratureRule:
    """Gauss-Legendre rule on [-1, 1], exact to degree ``2*order - 1``."""
    if order < 1:
        raise ValueError("order must be >= 1")
    x, w = np.polynomial.legendre.leggauss(order)
    return QuadratureRule(x, w, "interval", 2 * order - 1)


def radial_rule(R: float, order: int) -> QuadratureRule:
    """Gauss-Legendre rule mapped to [0, R] (no radial Jacobian)."""
    if R <= 0:
        raise ValueError("R must be positive")
    g = gauss_legendre(order)
    return QuadratureRule(0.5 * R * (g.nodes + 1.0), 0.5 * R * g.weights, "radial", g.degree)


def ball_quadrature(R: float, N: int, radial_order: int, angular_order: int) -> QuadratureRule:
    """Product rule over the centred ball ``|x| < R`` in R^N.

    Radial Gauss nodes carry the ``r^(N-1)`` Jacobian.  In 3D the angular part
    is Gauss in ``cos(theta)`` times a trapezoid in azimuth with
    ``2*angular_order`` points; in 2D a trapezoid with ``2*angular_order``
    points.  Nodes are returned as Cartesian points of shape ``(P, N)``.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    rad = radial_rule(R, radial_order)
    r, wr = rad.nodes, rad.weights * rad.nodes ** (N - 1)
    nphi = 2 * angular_order
    phi = 2 * np.pi * np.arange(nphi) / nphi
    wphi = np.full(nphi, 2 * np.pi / nphi)
    if N == 2:
        rr, pp = np.meshgrid(r, phi, indexing="ij")
        pts = np.stack([rr * np.cos(pp), rr * np.sin(pp)], axis=-1).reshape(-1, 2)
        w = np.outer(wr, wphi).ravel()
    elif N == 3:
        g = gauss_legendre(angular_order)
        ct, wt = g.nodes, g.weights
        rr, cc, pp = np.meshgrid(r, ct, phi, indexing="ij")
        ss = np.sqrt(1.0 - cc**2)
        pts = np.stack([rr * ss * np.cos(pp), rr * ss * np.sin(pp), rr * cc], axis=-1).reshape(-1, 3)
        w = (wr[:, None, None] * wt[None, :, None] * wphi[None, None, :]).ravel()
    else:
        raise ValueError(f"dimension must be 2 or 3, got {N!r}")
    return QuadratureRule(pts, w, f"ball{N}", min(rad.degree, 2 * angular_order - 1))


# ---------------------------------------------------------------------------
# root scanning
# ---------------------------------------------------------------------------

def _refine(f, a, b, fa, fb, tol, maxit=200):
    """Illinois regula falsi with periodic bisection and tight-bracket probes."""
    side = 0
    for it in range(maxit):
        if b - a < tol:
            break
        c = (a * fb - b * fa) / (fb - fa)
        if it % 3 == 2 or not (a < c < b) or not math.isfinite(c):
            c = 0.5 * (a + b)
        fc = f(c)
        if fc == 0.0:
            return c - 0.25 * tol, c + 0.25 * tol, c, fc
        if np.sign(fc) == np.sign(fa):
            a, fa = c, fc
            if side == -1:
                fb *= 0.5
            side = -1
            probe = c + 0.5 * tol
        else:
            b, fb = c, fc
            if side == 1:
                fa *= 0.5
            side = 1
            probe = c - 0.5 * tol
        if b - a >= tol and a < probe < b:
            fp = f(probe)
            if fp == 0.0:
                return probe - 0.25 * tol, probe + 0.25 * tol, probe, fp
            if np.sign(fp) == np.sign(fa):
                a, fa = probe, fp
            else:
                b, fb = probe, fp
    return a, b, None, None


def bracket_and_refine(
    f: Callable[[float], float],
    k_lo: float,
    k_hi: float,
    grid_points: Optional[int] = None,
    tol: float = 1e-12,
    f_grid: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> list[BracketedRoot]:
    """Find every sign change of ``f`` on a uniform scan grid and refine it.

    Tangential (double) roots without a sign change are not detected.
    ``grid_points`` defaults to 40 per unit length of the interval.
    ``f_grid``, if given, evaluates ``f`` on the whole grid at once.
    """
    if not k_lo < k_hi:
        raise ValueError("need k_lo < k_hi")
    if grid_points is None:
        grid_points = max(2, int(math.ceil(POINTS_PER_UNIT_K * (k_hi - k_lo))) + 1)
    if grid_points < 2 or tol <= 0:
        raise ValueError("need grid_points >= 2 and tol > 0")
    grid = np.linspace(k_lo, k_hi, grid_points)
    if f_grid is not None:
        vals = np.asarray(f_grid(grid), dtype=float)
    else:
        vals = np.array([float(f(g)) for g in grid])
    roots: list[BracketedRoot] = []
    i = 0
    while i < grid_points - 1:
        a, b, fa, fb = grid[i], grid[i + 1], vals[i], vals[i + 1]
        if fa == 0.0 and 0 < i and vals[i - 1] * fb < 0:
            half = min(0.25 * tol, 0.5 * (b - a))
            roots.append(BracketedRoot(a - half, a + half, float(a), 0.0))
        elif fa * fb < 0:
            lo, hi, root, res = _refine(f, a, b, fa, fb, tol)
            if root is None:
                flo, fhi = f(lo), f(hi)
                root = (lo * fhi - hi * flo) / (fhi - flo) if fhi != flo else 0.5 * (lo + hi)
                if not lo < root < hi:
                    root = 0.5 * (lo + hi)
                res = f(root)
            roots.append(BracketedRoot(float(lo), float(hi), float(root), abs(float(res))))
        i += 1
    roots.sort(key=lambda r: r.root)
    return roots


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def fd_helmholtz_residual(field: Callable, x, k: float, n_local: complex, h: float) -> complex:
    """``(Delta_h u + k^2 n^2 u)(x)`` with the central 2N+1 point stencil.

    ``field`` maps an array of points of shape ``(P, N)`` to ``P`` values.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    N = x.size
    offs = np.vstack([np.zeros(N), h * np.eye(N), -h * np.eye(N)])
    u = np.asarray(field(x[None, :] + offs), dtype=complex)
    lap = (np.sum(u[1 : N + 1]) + np.sum(u[N + 1 :]) - 2 * N * u[0]) / h**2
    return complex(lap + k**2 * n_local**2 * u[0])


def sample_directions(N: int, count: int) -> np.ndarray:
    """Deterministic quasi-uniform unit vectors: Fibonacci sphere or circle."""
    if count < 1:
        raise ValueError("count must be positive")
    if N == 2:
        th = 2 * np.pi * np.arange(count) / count
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if N == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        phi = np.pi * (3.0 - math.sqrt(5.0)) * np.arange(count)
        s = np.sqrt(1.0 - z**2)
        return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)
    raise ValueError(f"dimension must be 2 or 3, got {N!r}")


# ---------------------------------------------------------------------------
# least squares
# ---------------------------------------------------------------------------

@dataclass
class LSQResult:
    params: np.ndarray
    misfit: float
    iterations: int
    starts_tried: int
    best_start: int
    jacobian: np.ndarray = field(repr=False)
    start_misfits: list = field(default_factory=list)

    def __iter__(self):
        # allows ``params, misfit = least_squares_minimize(...)``
        return iter((self.params, self.misfit))


def _real_residual(objective):
    def res(p):
        r = np.asarray(objective(p))
        if np.iscomplexobj(r):
            r = np.concatenate([r.real.ravel(), r.imag.ravel()])
        return np.asarray(r, dtype=float).ravel()

    return res


def _fd_jacobian(res, p, r0, lo, hi):
    J = np.empty((r0.size, p.size))
    for i in range(p.size):
        step = max(1e-6 * abs(p[i]), 1e-8)
        q = p.copy()
        if p[i] + step > hi[i]:
            step = -step
        q[i] += step
        J[:, i] = (res(q) - r0) / step
    return J


def _lm(res, p0, lo, hi, max_iter, xtol):
    p = np.clip(np.asarray(p0, dtype=float), lo, hi)
    r = res(p)
    cost = 0.5 * r @ r
    J = _fd_jacobian(res, p, r, lo, hi)
    A = J.T @ J
    g = J.T @ r
    mu = 1e-3 * max(np.max(np.diag(A)), 1e-300)
    nu = 2.0
    it = 0
    for it in range(1, max_iter + 1):
        if not np.isfinite(cost) or cost == 0.0 or not np.any(g):
            break
        D = np.maximum(np.diag(A), 1e-12 * max(np.max(np.diag(A)), 1e-300))
        try:
            step = np.linalg.solve(A + mu * np.diag(D), -g)
        except np.linalg.LinAlgError:
            mu *= nu
            nu *= 2
            continue
        p_new = np.clip(p + step, lo, hi)
        step = p_new - p
        if np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol):
            break
        r_new = res(p_new)
        cost_new = 0.5 * r_new @ r_new
        pred = -(step @ g) - 0.5 * step @ (A @ step)
        rho = (cost - cost_new) / pred if pred > 0 else -1.0
        if np.isfinite(cost_new) and cost_new < cost:
            p, r, cost = p_new, r_new, cost_new
            J = _fd_jacobian(res, p, r, lo, hi)
            A = J.T @ J
            g = J.T @ r
            mu *= max(1.0 / 3.0, 1.0 - (2.0 * min(rho, 1.0) - 1.0) ** 3) if rho > 0 else 1.0
            nu = 2.0
        else:
            mu *= nu
            nu *= 2.0
            if nu > 1e40:
                break
    return p, cost, it, J


def least_squares_minimize(
    objective: Callable,
    initial: Sequence[float],
    bounds: Optional[Sequence[Sequence[float]]] = None,
    multistart_count: int = 1,
    seed: int = DEFAULT_SEED,
    max_iter: int = 200,
    xtol: float = 1e-15,
    target_misfit: Optional[float] = None,
    extra_starts: Sequence[Sequence[float]] = (),
    workers: int = 1,
) -> LSQResult:
    """Multistart Levenberg-Marquardt with forward-difference Jacobians.

    Parameters
    ----------
    objective : callable
        Maps a parameter vector to a residual vector (real or complex).
    initial : sequence of float
        First start.
    bounds : sequence of (lo, hi), optional
        Box constraints, enforced by projection.  Random restarts are drawn
        uniformly from this box.
    multistart_count : int
        Total number of random starts, including ``initial``.
    seed : int
        Seed of the restart generator.
    target_misfit : float, optional
        Stop trying further starts once a start reaches this misfit.
    extra_starts : sequence
        Deterministic starts tried right after ``initial``.

    Returns
    -------
    LSQResult
        Best start by misfit ``0.5*||r||^2`` (ties resolved by start index).

    Raises
    ------
    NonConvergence
        If no start lowered the misfit below its starting value.
    """
    p0 = np.atleast_1d(np.asarray(initial, dtype=float))
    if bounds is None:
        lo = np.full(p0.size, -np.inf)
        hi = np.full(p0.size, np.inf)
    else:
        b = np.asarray(bounds, dtype=float)
        lo, hi = b[:, 0], b[:, 1]
    res = _real_residual(objective)
    rng = np.random.default_rng(seed)
    starts = [p0] + [np.asarray(s, dtype=float) for s in extra_starts]
    n_random = max(multistart_count - 1, 0)
    if n_random and not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("random restarts need a finite bound box")
    for _ in range(n_random):
        starts.append(lo + (hi - lo) * rng.random(p0.size))

    def run(s):
        s = np.clip(s, lo, hi)
        r0 = res(s)
        c0 = 0.5 * r0 @ r0
        p, c, it, J = _lm(res, s, lo, hi, max_iter, xtol)
        return c0, p, c, it, J

    outcomes = []
    if workers > 1 and target_misfit is None:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            outcomes = list(ex.map(run, starts))
    else:
        for s in starts:
            outcomes.append(run(s))
            if target_misfit is not None and outcomes[-1][2] <= target_misfit:
                break

    best = min(range(len(outcomes)), key=lambda i: (outcomes[i][2], i))
    c0s = [o[0] for o in outcomes]
    if not any(o[2] < o[0] or o[0] == 0.0 for o in outcomes) or not np.isfinite(outcomes[best][2]):
        raise NonConvergence(f"no start reduced the misfit (initial misfits {c0s})")
    _, p, c, it, J = outcomes[best]
    return LSQResult(p, float(c), it, len(outcomes), best, J, [float(o[2]) for o in outcomes])
