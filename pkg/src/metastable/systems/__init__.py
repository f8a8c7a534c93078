from .base import ABSORBED, ReturnMapSystem, StepOutcome
from .hopper import (
    DomainError,
    HopperParams,
    HopperSystem,
    IntegrationError,
    apex_batch,
    calibrate_hopper,
    find_fixed_point,
    hopper_apex_map,
    integrate_stance,
    return_map_slope,
)
from .linear import FunctionSystem, LinearGaussianSystem, QuadraticSystem, linear_gaussian_map
from .surrogate import SURROGATE_A, SURROGATE_B, SurrogateSystem, surrogate_multidim_map

__all__ = [
    "ABSORBED",
    "DomainError",
    "FunctionSystem",
    "HopperParams",
    "HopperSystem",
    "IntegrationError",
    "LinearGaussianSystem",
    "QuadraticSystem",
    "ReturnMapSystem",
    "SURROGATE_A",
    "SURROGATE_B",
    "StepOutcome",
    "SurrogateSystem",
    "apex_batch",
    "calibrate_hopper",
    "find_fixed_point",
    "hopper_apex_map",
    "integrate_stance",
    "linear_gaussian_map",
    "return_map_slope",
    "surrogate_multidim_map",
]
