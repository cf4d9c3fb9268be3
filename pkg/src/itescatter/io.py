"""
File formats: JSON documents for media, ITE problems, inversion tasks and
results, and CSV for far-field patterns.

Floats are written with ``repr`` (shortest round-trip form) so output files
are byte-stable and parse back exactly.  Malformed documents raise
``ValueError``.
"""
from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .forward import BallMedium, Constant, FarFieldPattern, Layered, ScatteringConfig, SoundSoft
from .inverse import BallAndN, ConstantN, InversionResult, InversionTask, LayeredRadial
from .ite import BoundReport, ITEEntry, ITEProblem, ITESpectrum

__all__ = [
    "parse_complex",
    "complex_pair",
    "config_to_dict",
    "config_from_dict",
    "ite_problem_from_dict",
    "ite_problem_to_dict",
    "task_from_dict",
    "task_to_dict",
    "spectrum_to_dict",
    "spectrum_from_dict",
    "bounds_to_dict",
    "result_to_dict",
    "far_field_to_csv",
    "far_field_from_csv",
    "write_far_field",
    "read_far_field",
    "read_json",
    "write_json",
    "RunManifest",
]


def parse_complex(value, name: str = "n") -> complex:
    """Accept ``[re, im]`` or a bare real number."""
    if isinstance(value, bool):
        raise ValueError(f"{name}: expected a number or [re, im]")
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(float(value[0]), float(value[1]))
    raise ValueError(f"{name}: expected a number or [re, im], got {value!r}")


def complex_pair(z: complex) -> list:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _require(doc: dict, key: str):
    if not isinstance(doc, dict):
        raise ValueError("expected a JSON object")
    if key not in doc:
        raise ValueError(f"missing field {key!r}")
    return doc[key]


def _floats(value, name: str, length: Optional[int] = None) -> tuple:
    if not isinstance(value, (list, tuple)) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise ValueError(f"{name}: expected a list of numbers")
    if length is not None and len(value) != length:
        raise ValueError(f"{name}: expected {length} entries, got {len(value)}")
    return tuple(float(v) for v in value)


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name}: expected a number")
    return float(value)


def _dim(doc) -> int:
    dim = _require(doc, "dimension")
    if dim not in (2, 3) or isinstance(dim, bool):
        raise ValueError("dimension must be 2 or 3")
    return int(dim)


# ---------------------------------------------------------------------------
# medium / scattering configuration
# ---------------------------------------------------------------------------

def config_from_dict(doc: dict):
    """Parse a medium document into ``(ScatteringConfig, BallMedium)``."""
    dim = _dim(doc)
    k = _number(_require(doc, "k"), "k")
    d = _floats(_require(doc, "d"), "d", dim)
    center = _floats(_require(doc, "center"), "center", dim)
    radius = _number(_require(doc, "radius"), "radius")
    prof = _require(doc, "profile")
    kind = _require(prof, "type")
    try:
        cfg = ScatteringConfig(k, d, dim)
        if kind == "constant":
            med = BallMedium.constant(center, radius, parse_complex(_require(prof, "n")))
        elif kind == "layered":
            layers = _require(prof, "layers")
            if not isinstance(layers, list) or not layers:
                raise ValueError("layers: expected a nonempty list")
            radii = [_number(_require(L, "r"), "r") for L in layers]
            ns = [parse_complex(_require(L, "n")) for L in layers]
            if abs(radii[-1] - radius) > 1e-12 * radius:
                raise ValueError("outermost layer radius must equal the ball radius")
            med = BallMedium.layered(center, radii, ns)
        elif kind == "soundsoft":
            med = BallMedium.soundsoft(center, radius)
        else:
            raise ValueError(f"unknown profile type {kind!r}")
    except (TypeError, ValueError) as exc:
        raise ValueError(str(exc)) from exc
    return cfg, med


def config_to_dict(cfg: ScatteringConfig, med: BallMedium) -> dict:
    prof = med.profile
    if isinstance(prof, Constant):
        p = {"type": "constant", "n": complex_pair(prof.n)}
    elif isinstance(prof, Layered):
        p = {"type": "layered", "layers": [{"r": float(r), "n": complex_pair(n)} for r, n in zip(prof.radii, prof.indices)]}
    elif isinstance(prof, SoundSoft):
        p = {"type": "soundsoft"}
    else:
        raise TypeError(f"unknown profile {prof!r}")
    return {
        "dimension": cfg.dim,
        "k": float(cfg.k),
        "d": [float(v) for v in cfg.d_array],
        "center": [float(v) for v in med.z],
        "radius": float(med.radius),
        "profile": p,
    }


# ---------------------------------------------------------------------------
# ITE problems and reports
# ---------------------------------------------------------------------------

def ite_problem_from_dict(doc: dict, k_lo=None, k_hi=None, m_max=None) -> ITEProblem:
    """Parse ``{"dimension", "radius", "n", "n_tilde", ["n_star", "k_lo", "k_hi", "m_max"]}``.

    Keyword arguments override the document's scan window.
    """
    dim = _dim(doc)
    R = _number(_require(doc, "radius"), "radius")
    n = parse_complex(_require(doc, "n"), "n")
    nt = parse_complex(_require(doc, "n_tilde"), "n_tilde")
    nstar = doc.get("n_star")
    lo = k_lo if k_lo is not None else doc.get("k_lo", 1e-3)
    hi = k_hi if k_hi is not None else doc.get("k_hi", 10.0)
    mm = m_max if m_max is not None else doc.get("m_max", 5)
    if isinstance(mm, bool) or not isinstance(mm, int):
        raise ValueError("m_max must be an integer")
    try:
        return ITEProblem(R, dim, n, nt, _number(lo, "k_lo"), _number(hi, "k_hi"), mm,
                          None if nstar is None else _number(nstar, "n_star"))
    except TypeError as exc:
        raise ValueError(str(exc)) from exc


def ite_problem_to_dict(prob: ITEProblem) -> dict:
    return {
        "dimension": prob.dim,
        "radius": float(prob.R),
        "n": complex_pair(prob.n),
        "n_tilde": complex_pair(prob.n_tilde),
        "n_star": float(prob.n_star),
        "k_lo": float(prob.k_lo),
        "k_hi": float(prob.k_hi),
        "m_max": int(prob.m_max),
    }


def spectrum_to_dict(spec: ITESpectrum) -> dict:
    return {"entries": [{"m": int(e.m), "k": float(e.k), "residual": float(e.residual)} for e in spec.entries]}


def spectrum_from_dict(doc: dict) -> ITESpectrum:
    entries = _require(doc, "entries")
    return ITESpectrum([ITEEntry(int(e["m"]), float(e["k"]), float(e["residual"])) for e in entries])


def bounds_to_dict(rep: BoundReport, R: float, dim: int, n_star: float) -> dict:
    return {
        "radius": float(R),
        "dimension": int(dim),
        "n_star": float(n_star),
        "C1": float(rep.C1),
        "C": float(rep.C),
        "k0_lemma": float(rep.k0_lemma),
        "k0_thm": float(rep.k0_thm),
        "k0_effective": float(rep.k0_effective),
    }


# ---------------------------------------------------------------------------
# inversion
# ---------------------------------------------------------------------------

def task_from_dict(doc: dict, data: FarFieldPattern) -> InversionTask:
    """Build an inversion task from its JSON document and far-field data.

    The document carries ``dimension``, ``k`` and ``d`` (checked against the
    data), the ``model`` and optional ``bounds``, ``noise_level``,
    ``multistart`` and ``seed``.
    """
    dim = _dim(doc)
    if dim != data.config.dim:
        raise ValueError("task dimension does not match the data")
    model_doc = _require(doc, "model")
    kind = _require(model_doc, "type")
    if kind == "constant":
        model = ConstantN(_floats(_require(model_doc, "center"), "center", dim), _number(_require(model_doc, "radius"), "radius"))
    elif kind == "ball":
        model = BallAndN()
    elif kind == "layered":
        L = _require(model_doc, "layers")
        if isinstance(L, bool) or not isinstance(L, int) or L < 1:
            raise ValueError("layers must be a positive integer")
        model = LayeredRadial(_floats(_require(model_doc, "center"), "center", dim), _number(_require(model_doc, "radius"), "radius"), L)
    else:
        raise ValueError(f"unknown model type {kind!r}")
    bounds = doc.get("bounds")
    if bounds is not None:
        bounds = [_floats(b, "bounds", 2) for b in bounds]
    seed = doc.get("seed", None)
    kwargs = {}
    if seed is not None:
        kwargs["seed"] = int(seed)
    try:
        return InversionTask(
            data,
            model,
            bounds,
            noise_level=_number(doc.get("noise_level", 0.0), "noise_level"),
            multistart=int(doc.get("multistart", 8)),
            **kwargs,
        )
    except TypeError as exc:
        raise ValueError(str(exc)) from exc


def task_to_dict(task: InversionTask) -> dict:
    cfg, m = task.data.config, task.model
    if isinstance(m, ConstantN):
        model = {"type": "constant", "center": [float(v) for v in m.center], "radius": float(m.radius)}
    elif isinstance(m, BallAndN):
        model = {"type": "ball"}
    else:
        model = {"type": "layered", "center": [float(v) for v in m.center], "radius": float(m.radius), "layers": int(m.layers)}
    return {
        "dimension": cfg.dim,
        "k": float(cfg.k),
        "d": [float(v) for v in cfg.d_array],
        "model": model,
        "bounds": [[float(a), float(b)] for a, b in task.bounds],
        "noise_level": float(task.noise_level),
        "multistart": int(task.multistart),
        "seed": int(task.seed),
    }


def result_to_dict(res: InversionResult) -> dict:
    return {
        "model": res.model,
        "params": res.params,
        "vector": [float(v) for v in res.vector],
        "misfit": float(res.misfit),
        "iterations": int(res.iterations),
        "starts_tried": int(res.starts_tried),
        "best_start": int(res.best_start),
        "guarantee": bool(res.guarantee),
        "warnings": list(res.warnings),
    }


# ---------------------------------------------------------------------------
# far-field CSV
# ---------------------------------------------------------------------------

def _header(dim: int) -> list:
    return ["theta", "re_uinf", "im_uinf"] if dim == 2 else ["x", "y", "z", "re_uinf", "im_uinf"]


def far_field_to_csv(pattern: FarFieldPattern) -> str:
    """CSV text: 2D rows are ``theta`` (angle from the x-axis), 3D rows the
    unit direction components, followed by the real and imaginary parts."""
    dim = pattern.config.dim
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_header(dim))
    for x, u in zip(pattern.directions, pattern.values):
        lead = [math.atan2(x[1], x[0])] if dim == 2 else list(x)
        w.writerow([repr(float(v)) for v in lead] + [repr(float(u.real)), repr(float(u.imag))])
    return buf.getvalue()


def far_field_from_csv(text: str, cfg: ScatteringConfig) -> FarFieldPattern:
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != _header(cfg.dim):
        raise ValueError(f"CSV header must be {','.join(_header(cfg.dim))}")
    body = [r for r in rows[1:] if r]
    try:
        arr = np.array([[float(v) for v in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ValueError(f"malformed CSV value: {exc}") from exc
    ncol = len(_header(cfg.dim))
    if arr.ndim != 2 or arr.shape[1] != ncol or arr.shape[0] == 0:
        raise ValueError("CSV rows do not match the header")
    if cfg.dim == 2:
        dirs = np.stack([np.cos(arr[:, 0]), np.sin(arr[:, 0])], axis=1)
    else:
        dirs = arr[:, :3]
        if np.any(np.abs(np.linalg.norm(dirs, axis=1) - 1) > 1e-12):
            raise ValueError("CSV directions must be unit vectors")
    return FarFieldPattern(dirs, arr[:, -2] + 1j * arr[:, -1], cfg)


def write_far_field(pattern: FarFieldPattern, path) -> None:
    Path(path).write_text(far_field_to_csv(pattern), newline="")


def read_far_field(path, cfg: ScatteringConfig) -> FarFieldPattern:
    return far_field_from_csv(Path(path).read_text(), cfg)


# ---------------------------------------------------------------------------
# JSON helpers and run manifests
# ---------------------------------------------------------------------------

def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc


def write_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=False) + "\n", newline="")


@dataclass
class RunManifest:
    command: str
    input: Optional[str]
    outputs: list = field(default_factory=list)
    seed: Optional[int] = None
    version: str = __version__
    duration: float = 0.0

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "input": self.input,
            "outputs": [str(p) for p in self.outputs],
            "seed": self.seed,
            "version": self.version,
            "duration": float(self.duration),
        }

    def write(self, out_path) -> Path:
        """Write next to ``out_path`` as ``<out_path>.manifest.json``."""
        target = Path(str(out_path) + ".manifest.json")
        write_json(self.to_dict(), target)
        return target
