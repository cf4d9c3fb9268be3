"""
Command-line front end.

Exit codes: 0 ok, 2 bad input, 3 singular modal system, 4 optimizer
non-convergence, 1 failed validation.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__, forward, inverse, ite, numerics, validation
from . import io as fio
from .errors import NonConvergence, SingularModalSystem

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SINGULAR, EXIT_NONCONV = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


def _read_directions(path, dim: int) -> np.ndarray:
    text = Path(path).read_text()
    rows = [r.strip() for r in text.splitlines() if r.strip()]
    if not rows:
        raise InputError(f"{path}: empty directions file")
    try:
        float(rows[0].split(",")[0])
    except ValueError:
        rows = rows[1:]  # header
    try:
        arr = np.array([[float(v) for v in r.split(",")] for r in rows], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if dim == 2 and arr.shape[1] == 1:
        return np.stack([np.cos(arr[:, 0]), np.sin(arr[:, 0])], axis=1)
    if arr.shape[1] != dim:
        raise InputError(f"{path}: expected {dim} columns (or theta in 2D)")
    return arr


def cmd_forward(args) -> int:
    cfg, med = fio.config_from_dict(fio.read_json(args.config))
    if args.file:
        dirs = _read_directions(args.file, cfg.dim)
    else:
        if args.directions < 1:
            raise InputError("--directions must be positive")
        dirs = numerics.sample_directions(cfg.dim, args.directions)
    pattern = forward.solve_far_field(cfg, med, dirs)
    fio.write_far_field(pattern, args.out)
    return _manifest(args, "forward", [args.out])


def cmd_ite(args) -> int:
    prob = fio.ite_problem_from_dict(fio.read_json(args.config), args.kmin, args.kmax, args.mmax)
    spec = ite.scan_spectrum(prob)
    fio.write_json(fio.spectrum_to_dict(spec), args.out)
    return _manifest(args, "ite", [args.out])


def cmd_kbound(args) -> int:
    if args.dim not in (2, 3):
        raise InputError("--dim must be 2 or 3")
    rep = ite.k0_bounds(args.radius, args.dim, args.nstar)
    doc = fio.bounds_to_dict(rep, args.radius, args.dim, args.nstar)
    if args.out:
        fio.write_json(doc, args.out)
        return _manifest(args, "kbound", [args.out])
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_invert(args) -> int:
    doc = fio.read_json(args.task)
    dim = doc.get("dimension")
    if dim not in (2, 3) or "k" not in doc or "d" not in doc:
        raise InputError("task needs dimension, k and d")
    cfg = forward.ScatteringConfig(float(doc["k"]), tuple(doc["d"]), dim)
    data = fio.read_far_field(args.data, cfg)
    task = fio.task_from_dict(doc, data)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = inverse.invert(task)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    fio.write_json(fio.result_to_dict(res), args.out)
    return _manifest(args, "invert", [args.out], seed=task.seed)


def cmd_validate(args) -> int:
    def show(res):
        print(res.line(), flush=True)

    if args.mutate:
        with validation.mutated():
            results = validation.run_suite(args.suite, progress=show)
    else:
        results = validation.run_suite(args.suite, progress=show)
    report = validation.report_dict(results, args.suite)
    if args.out:
        fio.write_json(report, args.out)
        _manifest(args, "validate", [args.out], seed=numerics.DEFAULT_SEED)
    print("ALL PASSED" if report["passed"] else "FAILURES PRESENT")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def _manifest(args, name, outputs, seed=None) -> int:
    m = fio.RunManifest(
        name,
        getattr(args, "config", None) or getattr(args, "task", None),
        [str(o) for o in outputs],
        seed,
        __version__,
        time.perf_counter() - args._t0,
    )
    m.write(outputs[0])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="itescatter", description="Modal scattering, transmission eigenvalues and inversion for balls.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("forward", help="far-field pattern of a medium")
    f.add_argument("config")
    g = f.add_mutually_exclusive_group()
    g.add_argument("--directions", type=int, default=64, help="number of quasi-uniform directions")
    g.add_argument("--file", help="CSV of directions (theta in 2D, or unit vectors)")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_forward)

    e = sub.add_parser("ite", help="interior transmission eigenvalue scan")
    e.add_argument("config")
    e.add_argument("--kmin", type=float)
    e.add_argument("--kmax", type=float)
    e.add_argument("--mmax", type=int)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_ite)

    b = sub.add_parser("kbound", help="low-frequency eigenvalue-free thresholds")
    b.add_argument("--radius", type=float, required=True)
    b.add_argument("--dim", type=int, required=True)
    b.add_argument("--nstar", type=float, required=True)
    b.add_argument("--out")
    b.set_defaults(func=cmd_kbound)

    i = sub.add_parser("invert", help="recover a ball medium from far-field data")
    i.add_argument("task")
    i.add_argument("data")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_invert)

    v = sub.add_parser("validate", help="run the invariant suites")
    v.add_argument("--suite", choices=("fast", "full"), default="fast")
    v.add_argument("--out")
    v.add_argument("--mutate", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._t0 = time.perf_counter()
    try:
        return args.func(args)
    except SingularModalSystem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except NonConvergence as exc:
        print(f"error: optimizer did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except (InputError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
