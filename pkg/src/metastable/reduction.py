"""Choosing a scalar indicator coordinate for multi-dimensional systems."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import NoiseSpec, as_state, matrix_sqrt
from .estimators import numerical_jacobians
from .systems.base import ReturnMapSystem


class InsufficientDataError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrajectoryDataset:
    """States as rows, steps as columns."""

    data: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if data.shape[1] < 2:
            raise InsufficientDataError("a dataset needs at least two steps")
        labels = tuple(self.labels) if self.labels else tuple(f"x{i}" for i in range(data.shape[0]))
        if len(labels) != data.shape[0]:
            raise ValueError("one label per state row is required")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True)
class PcaResult:
    loadings: np.ndarray  # (d, d); column k is principal component k
    explained_ratio: np.ndarray
    standardized: bool
    scores: np.ndarray  # (d, T) projections of the centered data


@dataclass(frozen=True)
class IndicatorChoice:
    index: int
    tie: bool = False
    flagged: bool = False

    def __index__(self):
        return self.index

    def __int__(self):
        return self.index


def collect_dataset(
    system: ReturnMapSystem,
    x0,
    steps: int,
    noise: NoiseSpec,
    seed,
) -> TrajectoryDataset:
    """Run ``steps`` noisy return-map steps from ``x0``; stops early at absorption."""
    x = as_state(x0)
    rng = np.random.default_rng(seed)
    S = matrix_sqrt(noise.covariance)
    cols = []
    for _ in range(steps):
        w = S @ rng.standard_normal(noise.dim)
        out = system.step(x, w)
        if out.absorbed:
            break
        x = out.state
        cols.append(x)
    if len(cols) < 2:
        raise InsufficientDataError(f"trajectory absorbed after {len(cols)} step(s)")
    labels = tuple(f"x{i}" for i in range(system.state_dim))
    return TrajectoryDataset(np.column_stack(cols), labels)


def pca(dataset: TrajectoryDataset, standardize: bool = True) -> PcaResult:
    """PCA via SVD of the row-centered data.

    Each component's largest-magnitude loading is made positive so the
    output is deterministic.
    """
    X = dataset.data
    d, T = X.shape
    if T <= d:
        warnings.warn(f"only {T} samples for {d} variables", RuntimeWarning)
    Z = X - X.mean(axis=1, keepdims=True)
    if standardize:
        sd = Z.std(axis=1, ddof=1)
        zero = np.flatnonzero(sd == 0)
        if zero.size:
            raise ValueError(f"row {dataset.labels[zero[0]]!r} has zero variance; cannot standardize")
        Z = Z / sd[:, None]
    U, s, _ = np.linalg.svd(Z, full_matrices=True)
    sv = np.zeros(d)
    sv[: s.size] = s
    for k in range(d):
        j = np.argmax(np.abs(U[:, k]))
        if U[j, k] < 0:
            U[:, k] = -U[:, k]
    power = sv**2
    total = power.sum()
    ratio = power / total if total > 0 else np.zeros(d)
    return PcaResult(U, ratio, standardize, U.T @ Z)


def _argmax_with_tie(values: np.ndarray, rtol: float = 1e-9) -> IndicatorChoice:
    values = np.abs(np.asarray(values))
    best = float(values.max())
    hits = np.flatnonzero(np.isclose(values, best, rtol=rtol, atol=0.0))
    return IndicatorChoice(int(hits[0]), tie=bool(hits.size > 1))


def indicator_state(result: PcaResult) -> IndicatorChoice:
    """Coordinate with the largest |loading| on the first component; ties go low."""
    return _argmax_with_tie(result.loadings[:, 0])


def jacobian_indicator(system: ReturnMapSystem, x_star, **jac_kwargs) -> IndicatorChoice:
    """Coordinate dominating the eigenvector of the largest-magnitude eigenvalue of ``f_x``."""
    model = numerical_jacobians(system, x_star, **jac_kwargs)
    w, V = np.linalg.eig(model.f_x)
    order = np.argsort(-np.abs(w), kind="stable")
    lead = order[0]
    flagged = bool(abs(w[lead].imag) > 1e-10)
    if len(w) > 1 and np.isclose(abs(w[order[1]]), abs(w[lead]), rtol=1e-8):
        flagged = True
    choice = _argmax_with_tie(np.abs(V[:, lead]))
    return IndicatorChoice(choice.index, choice.tie, flagged)
