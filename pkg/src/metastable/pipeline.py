"""Per-state estimation fanned out over a worker pool, and the transition-matrix build.

Workers only read the (immutable) system and settings; results are
gathered by state index, so the matrix does not depend on scheduling.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import NoiseSpec
from .estimators import (
    DEFAULT_W0,
    LinearizationError,
    PropagationResult,
    linearized_propagate,
    monte_carlo_propagate,
    numerical_jacobians,
    unscented_estimate,
)
from .markov import GridSpec, TransitionMatrix, assemble_matrix, row_from_belief, row_from_samples
from .systems.base import ReturnMapSystem

log = logging.getLogger(__name__)

METHODS = ("mc", "linearized", "ut")


@dataclass(frozen=True)
class EstimatorSettings:
    method: str = "ut"
    w0: float = DEFAULT_W0
    epsilon: float | None = None
    n_samples: int = 10_000
    jacobian_step: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown estimator {self.method!r}; choose from {METHODS}")


def grid_states(system: ReturnMapSystem, grid: GridSpec, base_state=None) -> np.ndarray:
    """Initial state for every cell: ``base_state`` with the indicator set to the midpoint."""
    base = system.nominal_state() if base_state is None else np.asarray(base_state, dtype=float)
    X = np.tile(base, (grid.n_cells, 1))
    X[:, system.indicator_index] = grid.midpoints
    return X


def estimate_state(
    system: ReturnMapSystem,
    x0: np.ndarray,
    noise: NoiseSpec,
    settings: EstimatorSettings,
    index: int,
    strict: bool = False,
):
    """One state's next-step estimate: a PropagationResult, or an EmpiricalDistribution for MC."""
    if settings.method == "ut":
        return unscented_estimate(system, x0, noise, settings.w0, settings.epsilon)
    if settings.method == "linearized":
        try:
            model = numerical_jacobians(
                system,
                x0,
                settings.jacobian_step,
                settings.jacobian_step,
                one_sided_fallback=not strict,
            )
        except LinearizationError:
            if strict:
                raise
            return PropagationResult(None, 1.0)
        return linearized_propagate(model, noise)
    return monte_carlo_propagate(system, x0, noise, settings.n_samples, [settings.seed, index])


def _row(system, grid, noise, settings, x0, index):
    est = estimate_state(system, x0, noise, settings, index)
    if settings.method == "mc":
        return row_from_samples(est.samples[:, system.indicator_index], est.n_total, grid)
    return row_from_belief(est.belief, est.absorbed_mass, grid, system.indicator_index)


def map_states(fn, n: int, threads: int = 1) -> list:
    """``[fn(i) for i in range(n)]``, optionally on a thread pool; order is preserved."""
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(n)))


def build_transition_matrix(
    system: ReturnMapSystem,
    grid: GridSpec,
    noise: NoiseSpec,
    settings: EstimatorSettings | None = None,
    threads: int = 1,
    base_state=None,
) -> TransitionMatrix:
    settings = settings or EstimatorSettings()
    X = grid_states(system, grid, base_state)
    log.debug("building %d rows with %s on %d thread(s)", grid.n_cells, settings.method, threads)
    rows = map_states(lambda i: _row(system, grid, noise, settings, X[i], i + 1), grid.n_cells, threads)
    return assemble_matrix(np.vstack(rows), grid)


def deterministic_map(system: ReturnMapSystem, grid: GridSpec, base_state=None) -> np.ndarray:
    """Noise-free image of each cell midpoint on the indicator (NaN where absorbed)."""
    X = grid_states(system, grid, base_state)
    Y, absorbed = system.step_batch(X, np.zeros((len(X), system.noise_dim)))
    out = Y[:, system.indicator_index].copy()
    out[absorbed] = np.nan
    return out
