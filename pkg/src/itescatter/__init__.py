"""
Acoustic scattering by penetrable balls and discs: modal forward solver,
interior transmission eigenvalues with low-frequency bounds, and
single-far-field inversion.

Convention: the total field solves ``Δu + k² n² u = 0``; the refractive
index ``n`` enters only through ``n²``.
"""
__version__ = "0.1.0"
