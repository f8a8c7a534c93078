"""Metastability analysis of noisy return maps via absorbing Markov chains."""

from .core import EmpiricalDistribution, GaussianBelief, NoiseSpec, PSDError, matrix_sqrt
from .estimators import (
    linearized_propagate,
    monte_carlo_propagate,
    numerical_jacobians,
    sigma_points,
    unscented_estimate,
)
from .kernels import BACKEND
from .markov import (
    GridSpec,
    MetastableReport,
    TransitionMatrix,
    analyze_matrix,
    metastable_distribution,
    metastable_neighborhood,
    mfpt_state,
    mfpt_system,
    spectrum,
)
from .pipeline import EstimatorSettings, build_transition_matrix
from .reduction import TrajectoryDataset, indicator_state, jacobian_indicator, pca

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "EmpiricalDistribution",
    "EstimatorSettings",
    "GaussianBelief",
    "GridSpec",
    "MetastableReport",
    "NoiseSpec",
    "PSDError",
    "TrajectoryDataset",
    "TransitionMatrix",
    "analyze_matrix",
    "build_transition_matrix",
    "indicator_state",
    "jacobian_indicator",
    "linearized_propagate",
    "matrix_sqrt",
    "metastable_distribution",
    "metastable_neighborhood",
    "mfpt_state",
    "mfpt_system",
    "monte_carlo_propagate",
    "numerical_jacobians",
    "pca",
    "sigma_points",
    "spectrum",
    "unscented_estimate",
]
