"""Generalized Gamma-type positive linear operators M_{n,k}."""
from gammaops.operator import (
    ApplyResult,
    OperatorParams,
    QuadratureSpec,
    apply,
    central_moment_closed,
    central_moment_scaled,
    composition_oracle,
    gamma_density,
    h_operator_apply,
    kernel_density,
    raw_moment_closed,
)
from gammaops.spaces import REGISTRY, GridSpec, TestFunction, get_function

__all__ = [
    "ApplyResult",
    "GridSpec",
    "OperatorParams",
    "QuadratureSpec",
    "REGISTRY",
    "TestFunction",
    "apply",
    "central_moment_closed",
    "central_moment_scaled",
    "composition_oracle",
    "gamma_density",
    "get_function",
    "h_operator_apply",
    "kernel_density",
    "raw_moment_closed",
]
