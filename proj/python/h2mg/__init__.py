"""Multigrid solver built on the levels of an H2 matrix."""

from ._core import (
    H2Matrix,
    Hierarchy,
    NumericalError,
    SurfaceMesh,
    bench_kernel,
    cg_solve,
    dense_solve,
    grid_points,
    point_source_rhs,
    read_obj,
    spd_check,
    verify,
    wavy_torus,
)

__all__ = [
    "H2Matrix",
    "Hierarchy",
    "NumericalError",
    "SurfaceMesh",
    "bench_kernel",
    "cg_solve",
    "dense_solve",
    "grid_points",
    "point_source_rhs",
    "read_obj",
    "spd_check",
    "verify",
    "wavy_torus",
]

__version__ = "0.1.0"
