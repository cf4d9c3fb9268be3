"""
Recovery of ball media from one far-field pattern (single ``k`` and ``d``).

Three model classes are supported:

* ``ConstantN``      known ball, unknown complex constant index;
* ``BallAndN``       unknown centre, radius and complex constant index;
* ``LayeredRadial``  known ball, unknown piecewise-constant radial index on
  uniform shells.

All fits minimise the unweighted discrete l2 misfit ``0.5 * ||F(p) - data||^2``
with the multistart Levenberg-Marquardt driver.  Complex indices are
parameterised as ``(Re n, Im n)`` with ``Im n >= 0`` enforced by the bound box.
Since only ``n**2`` enters the equations, ``n`` and ``-n`` are
indistinguishable; boxes must keep ``Re n > 0``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import forward, ite, numerics, specialfn
from .errors import DegenerateData, HypothesisViolation, IllConditioned
from .forward import BallMedium, FarFieldPattern, ScatteringConfig

__all__ = [
    "ConstantN",
    "BallAndN",
    "LayeredRadial",
    "InversionTask",
    "InversionResult",
    "synthesize",
    "add_noise",
    "invert",
    "invert_constant_n",
    "invert_ball_and_n",
    "invert_layered_profile",
    "center_objective",
    "estimate_center",
    "uniqueness_probe",
]

DEFAULT_N_BOUNDS = ((0.1, 3.0), (0.0, 1.0))
FLOOR = 1e-12


@dataclass(frozen=True)
class ConstantN:
    center: tuple
    radius: float


@dataclass(frozen=True)
class BallAndN:
    pass


@dataclass(frozen=True)
class LayeredRadial:
    center: tuple
    radius: float
    layers: int


Model = Union[ConstantN, BallAndN, LayeredRadial]


@dataclass
class InversionTask:
    """Far-field data plus the model class and its bound box.

    ``bounds`` lists ``(lo, hi)`` per real unknown in the order used by the
    model: ``(Re n, Im n)``; ``(z_1..z_N, R, Re n, Im n)``; or
    ``(Re n_1, Im n_1, ..., Re n_L, Im n_L)``.
    """

    data: FarFieldPattern
    model: Model
    bounds: Optional[Sequence[Sequence[float]]] = None
    noise_level: float = 0.0
    multistart: int = 8
    seed: int = numerics.DEFAULT_SEED

    def __post_init__(self):
        if self.bounds is None:
            self.bounds = default_bounds(self.model, self.data.config.dim)
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or not np.all(b[:, 0] < b[:, 1]) or not np.all(np.isfinite(b)):
            raise ValueError("bounds must be finite (lo, hi) pairs with lo < hi")
        if b.shape[0] != n_unknowns(self.model, self.data.config.dim):
            raise ValueError("bounds do not match the number of unknowns")
        if len(self.data.values) < b.shape[0]:
            raise ValueError("fewer data directions than real unknowns")
        self.bounds = [tuple(row) for row in b]


@dataclass
class InversionResult:
    model: str
    params: dict
    vector: np.ndarray
    misfit: float
    iterations: int
    starts_tried: int
    best_start: int
    guarantee: bool
    warnings: list = field(default_factory=list)


def n_unknowns(model: Model, dim: int) -> int:
    if isinstance(model, ConstantN):
        return 2
    if isinstance(model, BallAndN):
        return dim + 3
    return 2 * model.layers


def default_bounds(model: Model, dim: int):
    if isinstance(model, ConstantN):
        return list(DEFAULT_N_BOUNDS)
    if isinstance(model, LayeredRadial):
        return list(DEFAULT_N_BOUNDS) * model.layers
    raise ValueError("BallAndN needs explicit bounds for the centre and radius")


# ---------------------------------------------------------------------------
# data helpers
# ---------------------------------------------------------------------------

def synthesize(cfg: ScatteringConfig, med: BallMedium, directions) -> FarFieldPattern:
    """Noiseless far-field data for a known medium."""
    if np.ndim(directions) == 0:
        directions = numerics.sample_directions(cfg.dim, int(directions))
    return forward.solve_far_field(cfg, med, directions)


def add_noise(data: FarFieldPattern, level: float, seed: int) -> FarFieldPattern:
    """Multiplicative complex Gaussian noise of relative RMS size ``level``."""
    rng = np.random.default_rng(seed)
    xi = (rng.standard_normal(len(data.values)) + 1j * rng.standard_normal(len(data.values))) / math.sqrt(2)
    return FarFieldPattern(data.directions, data.values * (1 + level * xi), data.config)


def _n_star(bounds_re, bounds_im) -> float:
    re = max(abs(bounds_re[0]), abs(bounds_re[1]))
    im = max(abs(bounds_im[0]), abs(bounds_im[1]))
    return math.hypot(re, im)


def _forward(cfg, med, dirs):
    return forward.far_field(forward.modal_coefficients(cfg, med), cfg, med, dirs).values


def _peak(data: FarFieldPattern) -> float:
    return float(np.max(np.abs(data.values))) if len(data.values) else 0.0


def _finish(task, name, params, fit, guarantee, notes, cond_check=True):
    notes = list(notes)
    J = fit.jacobian
    if cond_check and J.size:
        s = np.linalg.svd(J, compute_uv=False)
        if s[0] > 0 and s[-1] < 1e-8 * s[0]:
            msg = f"Jacobian nearly rank deficient (sigma_min/sigma_max = {s[-1] / s[0]:.2e})"
            warnings.warn(msg, IllConditioned, stacklevel=3)
            notes.append(msg)
    return InversionResult(
        name, params, fit.params, fit.misfit, fit.iterations, fit.starts_tried, fit.best_start, guarantee, notes
    )


def _target(data: FarFieldPattern, noise_level: float) -> float:
    # noise-aware stopping: a start whose misfit is at the expected noise
    # energy cannot be improved on meaningfully by further restarts
    energy = max(float(np.sum(np.abs(data.values) ** 2)), 1e-30)
    if noise_level > 0:
        # residual energy at the truth is chi-square like with 2P real terms
        return 0.5 * noise_level**2 * energy * (1 + 3 / math.sqrt(len(data.values)))
    return 1e-28 * energy


# ---------------------------------------------------------------------------
# constant index, known ball
# ---------------------------------------------------------------------------

def _fit_indices(task: InversionTask, center, radius, layers: Optional[int]):
    """Shared fit for ConstantN (layers None) and LayeredRadial."""
    cfg, dirs, data = task.data.config, task.data.directions, task.data.values
    if layers is None:
        def medium(p):
            return BallMedium.constant(center, radius, complex(p[0], p[1]))
        L = 1
    else:
        L = layers
        radii = tuple(radius * (i + 1) / L for i in range(L))
        radii = radii[:-1] + (float(radius),)

        def medium(p):
            return BallMedium.layered(center, radii, [complex(p[2 * i], p[2 * i + 1]) for i in range(L)])

    def residual(p):
        return _forward(cfg, medium(p), dirs) - data

    b = np.asarray(task.bounds)
    initial = np.clip(np.tile([1.0, 0.0], L), b[:, 0], b[:, 1])
    fit = numerics.least_squares_minimize(
        residual,
        initial,
        task.bounds,
        multistart_count=task.multistart,
        seed=task.seed,
        target_misfit=_target(task.data, task.noise_level),
    )
    return fit


def invert_constant_n(task: InversionTask) -> InversionResult:
    """Recover a complex constant index inside a known ball.

    The result's ``guarantee`` flag is set when ``k`` lies below the
    low-frequency threshold for ``n_star`` taken from the bound box; above it a
    ``HypothesisViolation`` warning is issued and the fit still runs.
    """
    model = task.model
    if not isinstance(model, ConstantN):
        raise TypeError("invert_constant_n needs a ConstantN model")
    cfg = task.data.config
    notes = []
    nstar = _n_star(task.bounds[0], task.bounds[1])
    report = ite.k0_bounds(model.radius, cfg.dim, nstar)
    guarantee = cfg.k < report.k0_effective and task.bounds[0][0] > 0 and task.bounds[1][0] >= 0
    if not cfg.k < report.k0_effective:
        msg = f"k = {cfg.k:g} >= k0_effective = {report.k0_effective:g}; uniqueness not guaranteed"
        warnings.warn(msg, HypothesisViolation, stacklevel=2)
        notes.append(msg)
    fit = _fit_indices(task, model.center, model.radius, None)
    n = complex(fit.params[0], fit.params[1])
    return _finish(task, "constant", {"n": [n.real, n.imag]}, fit, guarantee, notes)


def invert_layered_profile(task: InversionTask) -> InversionResult:
    """Recover shell indices of a radially layered ball with known centre."""
    model = task.model
    if not isinstance(model, LayeredRadial):
        raise TypeError("invert_layered_profile needs a LayeredRadial model")
    if model.layers < 1:
        raise ValueError("need at least one layer")
    fit = _fit_indices(task, model.center, model.radius, model.layers)
    L = model.layers
    ns = [[float(fit.params[2 * i]), float(fit.params[2 * i + 1])] for i in range(L)]
    radii = [model.radius * (i + 1) / L for i in range(L)]
    guarantee = all(task.bounds[2 * i + 1][0] >= 0 and task.bounds[2 * i][0] > 0 for i in range(L))
    return _finish(task, "layered", {"n": ns, "radii": radii}, fit, guarantee, [])


# ---------------------------------------------------------------------------
# unknown ball
# ---------------------------------------------------------------------------

def _perp_basis(d: np.ndarray) -> np.ndarray:
    """Orthonormal rows spanning the complement of ``d``."""
    N = d.size
    _, _, vt = np.linalg.svd(d[None, :])
    return vt[1:N]


def _center_residual(data: FarFieldPattern, zp: np.ndarray, degree: int) -> np.ndarray:
    cfg = data.config
    d = cfg.d_array
    dirs = data.directions
    k = cfg.k
    g = np.exp(-1j * k * zp @ d) * np.exp(1j * k * dirs @ zp) * data.values
    c = np.clip(dirs @ d, -1.0, 1.0)
    basis = specialfn.legendre_p_all(degree, c).T
    coef, *_ = np.linalg.lstsq(basis, g, rcond=None)
    return (g - basis @ coef) / np.linalg.norm(g)


def _center_degree(data: FarFieldPattern, size: float) -> int:
    # one Legendre term per mode that the scatterer can excite, plus margin
    deg = int(math.ceil(data.config.k * size)) + 12
    return max(2, min(deg, len(data.values) // 2 - 1))


def center_objective(data: FarFieldPattern, zp, degree: Optional[int] = None) -> float:
    """Relative spread of the recentred pattern across level sets of ``x.d``.

    The pattern ``exp(-ik z'.d) exp(ik z'.x) u_inf(x)`` is projected onto
    polynomials in ``x.d``; the returned value is the squared norm of the
    remainder relative to the pattern.  It vanishes at the true centre and
    is blind to shifts of ``z'`` along ``d``.
    """
    if degree is None:
        degree = _center_degree(data, 4.0)
    r = _center_residual(data, np.asarray(zp, dtype=float), degree)
    return float(np.real(np.vdot(r, r)))


def estimate_center(data: FarFieldPattern, z_bounds, degree: Optional[int] = None, anchor=None):
    """Estimate the centre component orthogonal to ``d``.

    Coarse grid (spacing a quarter wavelength) over the box projected on the
    plane orthogonal to ``d``, then Levenberg-Marquardt from the best three
    grid points.  Returns ``(z_perp, objective)``; ``z_perp`` has no
    component along ``d`` unless ``anchor`` supplies one.
    """
    cfg = data.config
    d = cfg.d_array
    zb = np.asarray(z_bounds, dtype=float)
    box_size = float(np.linalg.norm(zb[:, 1] - zb[:, 0]))
    if degree is None:
        degree = _center_degree(data, box_size)
    E = _perp_basis(d)
    anchor = np.zeros(cfg.dim) if anchor is None else np.asarray(anchor, dtype=float)
    corners = np.array(np.meshgrid(*zb, indexing="ij")).reshape(cfg.dim, -1).T
    proj = corners @ E.T
    lo, hi = proj.min(axis=0), proj.max(axis=0)
    spacing = (2 * math.pi / cfg.k) / 4
    axes = [np.linspace(a, b, max(2, int(math.ceil((b - a) / spacing)) + 1)) for a, b in zip(lo, hi)]
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T

    def resid(s):
        return _center_residual(data, anchor + s @ E, degree)

    scores = [float(np.sum(np.abs(resid(s)) ** 2)) for s in grid]
    order = np.argsort(scores, kind="stable")[:3]
    pbounds = list(zip(lo, hi))
    best = None
    for idx in order:
        fit = numerics.least_squares_minimize(resid, grid[idx], pbounds, multistart_count=1)
        if best is None or fit.misfit < best.misfit:
            best = fit
    z = anchor + best.params @ E
    return z, 2.0 * best.misfit


def invert_ball_and_n(task: InversionTask) -> InversionResult:
    """Recover centre, radius and complex index of a homogeneous ball.

    Stage 1 estimates the centre's component orthogonal to ``d`` from the
    rotational symmetry of the recentred pattern.  Stage 2 fits all
    ``N + 3`` unknowns jointly, starting from that estimate with the
    component along ``d`` seeded on a quarter-wavelength grid, plus random
    restarts over the box.

    Raises
    ------
    DegenerateData
        If the pattern is below the noise floor.
    """
    if not isinstance(task.model, BallAndN):
        raise TypeError("invert_ball_and_n needs a BallAndN model")
    data = task.data
    cfg = data.config
    N = cfg.dim
    peak = _peak(data)
    if peak <= FLOOR:
        raise DegenerateData(f"far-field magnitude {peak:.3g} is below the noise floor")
    b = np.asarray(task.bounds)
    zb, rb, nb = b[:N], b[N], b[N + 1 :]
    z_perp, stage1 = estimate_center(data, zb)

    def residual(p):
        med = BallMedium.constant(p[:N], p[N], complex(p[N + 1], p[N + 2]))
        return _forward(cfg, med, data.directions) - data.values

    d = cfg.d_array
    par = np.array([zb[:, 0] @ d, zb[:, 1] @ d])
    s_lo, s_hi = par.min(), par.max()
    spacing = (2 * math.pi / cfg.k) / 4
    seeds = np.linspace(s_lo, s_hi, max(2, int(math.ceil((s_hi - s_lo) / spacing)) + 1))
    r0 = 0.5 * (rb[0] + rb[1])
    n0 = np.clip([1.5, 0.0], nb[:, 0], nb[:, 1])
    starts = []
    for s in seeds:
        z0 = np.clip(z_perp + s * d, zb[:, 0], zb[:, 1])
        starts.append(np.concatenate([z0, [r0], n0]))
    fit = numerics.least_squares_minimize(
        residual,
        starts[0],
        task.bounds,
        multistart_count=task.multistart,
        seed=task.seed,
        target_misfit=_target(data, task.noise_level),
        extra_starts=starts[1:],
    )
    p = fit.params
    params = {
        "center": [float(c) for c in p[:N]],
        "radius": float(p[N]),
        "n": [float(p[N + 1]), float(p[N + 2])],
        "stage1_center": [float(c) for c in z_perp],
        "stage1_objective": float(stage1),
    }
    guarantee = nb[0][0] > 0 and nb[1][0] >= 0 and rb[0] > 0
    return _finish(task, "ball", params, fit, bool(guarantee), [])


def invert(task: InversionTask) -> InversionResult:
    """Dispatch on the task's model class."""
    if isinstance(task.model, ConstantN):
        return invert_constant_n(task)
    if isinstance(task.model, BallAndN):
        return invert_ball_and_n(task)
    if isinstance(task.model, LayeredRadial):
        return invert_layered_profile(task)
    raise TypeError(f"unknown model {task.model!r}")


# ---------------------------------------------------------------------------
# uniqueness probe
# ---------------------------------------------------------------------------

def uniqueness_probe(center, radius: float, n_true: complex, cfg: ScatteringConfig, n_grid, directions=64):
    """Misfit curve ``||F(n') - F(n_true)||^2`` over candidate indices ``n'``.

    Returns ``(n_grid, misfits)``.
    """
    if np.ndim(directions) == 0:
        directions = numerics.sample_directions(cfg.dim, int(directions))
    ref = _forward(cfg, BallMedium.constant(center, radius, n_true), directions)
    grid = np.asarray(n_grid)
    mis = np.array([
        float(np.sum(np.abs(_forward(cfg, BallMedium.constant(center, radius, complex(n)), directions) - ref) ** 2))
        for n in grid
    ])
    return grid, mis
