"""Bohmian trajectories around moving nodal points, and quantum relaxation."""

from ._core import (
    ConfigError,
    Error,
    Wavefunction,
    build_model,
    conservation_drift,
    integrate,
    invariant_value,
    model_3d_integrable,
    model_eq12,
    model_eq30,
    nodal_path,
    nodal_points,
    relaxation,
    resolve_config,
    run_config,
    series_central,
    series_diagonal,
    single_eigenstate,
    x_point,
)

__all__ = [
    "ConfigError",
    "Error",
    "Wavefunction",
    "build_model",
    "conservation_drift",
    "integrate",
    "invariant_value",
    "model_3d_integrable",
    "model_eq12",
    "model_eq30",
    "nodal_path",
    "nodal_points",
    "relaxation",
    "resolve_config",
    "run_config",
    "series_central",
    "series_diagonal",
    "single_eigenstate",
    "x_point",
]
