"""Next-step distribution estimators: unscented transform, linearization, Monte Carlo.

All three take a deterministic initial state ``x0`` and Gaussian noise and
describe the distribution of ``f(x0, w)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionError,
    EmpiricalDistribution,
    GaussianBelief,
    NoiseSpec,
    as_state,
    matrix_sqrt,
    nearest_psd,
)
from .systems.base import ReturnMapSystem

DEFAULT_W0 = 1.0 / 3.0


class LinearizationError(RuntimeError):
    """A finite-difference evaluation was absorbed."""


@dataclass(frozen=True)
class AugmentedBelief(GaussianBelief):
    """Belief over ``[x; w]``: state block ``eps * I``, noise block ``R_w``."""

    state_dim: int = 1

    @property
    def noise_dim(self) -> int:
        return self.dim - self.state_dim


@dataclass(frozen=True)
class SigmaPointSet:
    points: np.ndarray  # (2n+1, n)
    weights: np.ndarray  # (2n+1,)
    w0: float
    state_dim: int

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        mean = self.weights @ self.points
        dev = self.points - mean
        return mean, (dev * self.weights[:, None]).T @ dev


@dataclass(frozen=True)
class LinearizedModel:
    f_x: np.ndarray
    f_w: np.ndarray
    nominal: np.ndarray


@dataclass(frozen=True)
class PropagationResult:
    belief: GaussianBelief | None
    absorbed_mass: float

    @property
    def totally_absorbed(self) -> bool:
        return self.belief is None


def default_epsilon(x0) -> float:
    x0 = np.asarray(x0, dtype=float)
    return 1e-12 * max(1.0, float(x0 @ x0))


def build_augmented(x0, noise: NoiseSpec, eps: float | None = None) -> AugmentedBelief:
    x0 = as_state(x0)
    if eps is None:
        eps = default_epsilon(x0)
    if not eps > 0:
        raise ValueError(f"state variance eps must be positive, got {eps}")
    d, m = x0.shape[0], noise.dim
    cov = np.zeros((d + m, d + m))
    cov[:d, :d] = eps * np.eye(d)
    cov[d:, d:] = noise.covariance
    return AugmentedBelief(np.concatenate([x0, np.zeros(m)]), cov, state_dim=d)


def sigma_points(belief: AugmentedBelief, w0: float = DEFAULT_W0) -> SigmaPointSet:
    """2n+1 symmetric sigma points with central weight ``w0``.

    Point 0 sits at the mean; points ``j`` and ``j + n`` are the mean
    plus/minus column ``j`` of ``sqrt(n / (1 - w0) * P)``. Every
    non-central weight is ``(1 - w0) / (2n)``.
    """
    if not -1.0 < w0 < 1.0:
        raise ValueError(f"central weight must lie in (-1, 1), got {w0}")
    n = belief.dim
    S = matrix_sqrt(n / (1.0 - w0) * belief.covariance)
    points = np.empty((2 * n + 1, n))
    points[0] = belief.mean
    points[1 : n + 1] = belief.mean + S.T
    points[n + 1 :] = belief.mean - S.T
    weights = np.full(2 * n + 1, (1.0 - w0) / (2 * n))
    weights[0] = w0
    return SigmaPointSet(points, weights, float(w0), getattr(belief, "state_dim", n))


def ut_propagate(system: ReturnMapSystem, sps: SigmaPointSet) -> PropagationResult:
    """Push every sigma point through ``system`` and refit a Gaussian.

    Weights of absorbed points are reported as ``absorbed_mass`` and the
    live weights are renormalized before computing moments.
    """
    d = system.state_dim
    if sps.n != d + system.noise_dim:
        raise DimensionError(
            f"sigma points have dimension {sps.n}, system needs {d} + {system.noise_dim}"
        )
    Y, absorbed = system.step_batch(sps.points[:, :d], sps.points[:, d:])
    live = ~absorbed
    w_live = sps.weights[live]
    live_total = float(w_live.sum())
    if not live.any() or live_total <= 0.0:
        return PropagationResult(None, 1.0)
    absorbed_mass = min(max(1.0 - live_total, 0.0), 1.0)
    w = w_live / live_total if absorbed.any() else w_live
    Yl = Y[live]
    mean = w @ Yl
    dev = Yl - mean
    cov = (dev * w[:, None]).T @ dev
    cov = nearest_psd(cov)
    return PropagationResult(GaussianBelief(mean, cov), absorbed_mass)


def unscented_estimate(
    system: ReturnMapSystem,
    x0,
    noise: NoiseSpec,
    w0: float = DEFAULT_W0,
    eps: float | None = None,
) -> PropagationResult:
    return ut_propagate(system, sigma_points(build_augmented(x0, noise, eps), w0))


def _steps(center: np.ndarray, h) -> np.ndarray:
    if h is None:
        return 1e-5 * np.maximum(1.0, np.abs(center))
    return np.broadcast_to(np.asarray(h, dtype=float), center.shape).copy()


def numerical_jacobians(
    system: ReturnMapSystem,
    x0,
    h_x=None,
    h_w=None,
    one_sided_fallback: bool = False,
) -> LinearizedModel:
    """Central-difference Jacobians of ``f`` at ``(x0, 0)``.

    Default steps are ``1e-5 * max(1, |coordinate|)``. If a perturbed
    evaluation is absorbed, :class:`LinearizationError` is raised unless
    ``one_sided_fallback`` is set, in which case the surviving one-sided
    difference is used for that column.
    """
    x0 = as_state(x0)
    d, m = system.state_dim, system.noise_dim
    if x0.shape[0] != d:
        raise DimensionError(f"expected state of dimension {d}, got {x0.shape[0]}")
    w_zero = np.zeros(m)
    hx = _steps(x0, h_x)
    hw = _steps(w_zero, h_w)

    X = np.tile(x0, (1 + 2 * d + 2 * m, 1))
    W = np.zeros((1 + 2 * d + 2 * m, m))
    for i in range(d):
        X[1 + i, i] += hx[i]
        X[1 + d + i, i] -= hx[i]
    off = 1 + 2 * d
    for j in range(m):
        W[off + j, j] += hw[j]
        W[off + m + j, j] -= hw[j]
    Y, absorbed = system.step_batch(X, W)
    if absorbed[0]:
        raise LinearizationError(f"nominal image of {x0} is absorbed")

    def column(ip, im, h):
        if not absorbed[ip] and not absorbed[im]:
            return (Y[ip] - Y[im]) / (2.0 * h)
        if not one_sided_fallback:
            raise LinearizationError(f"perturbed evaluation near {x0} is absorbed")
        if not absorbed[ip]:
            return (Y[ip] - Y[0]) / h
        if not absorbed[im]:
            return (Y[0] - Y[im]) / h
        raise LinearizationError(f"both perturbations near {x0} are absorbed")

    f_x = np.column_stack([column(1 + i, 1 + d + i, hx[i]) for i in range(d)])
    f_w = np.column_stack([column(off + j, off + m + j, hw[j]) for j in range(m)])
    return LinearizedModel(f_x.reshape(d, d), f_w.reshape(d, m), Y[0].copy())


def linearized_propagate(model: LinearizedModel, noise: NoiseSpec) -> PropagationResult:
    """Mean ``f(x0, 0)``, covariance ``f_w Q f_w^T``. Never reports absorption."""
    if model.f_w.shape[1] != noise.dim:
        raise DimensionError(
            f"noise Jacobian has {model.f_w.shape[1]} columns, noise has dim {noise.dim}"
        )
    cov = model.f_w @ noise.covariance @ model.f_w.T
    return PropagationResult(GaussianBelief(model.nominal, 0.5 * (cov + cov.T)), 0.0)


def monte_carlo_propagate(
    system: ReturnMapSystem,
    x0,
    noise: NoiseSpec,
    n_samples: int,
    seed,
) -> EmpiricalDistribution:
    """Step ``x0`` under ``n_samples`` seeded draws of the noise.

    ``seed`` is anything ``numpy.random.default_rng`` accepts; the pipeline
    passes ``[master_seed, state_index]``.
    """
    if n_samples < 2:
        raise ValueError("need at least two Monte Carlo samples")
    x0 = as_state(x0)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((n_samples, noise.dim))
    W = Z @ matrix_sqrt(noise.covariance).T
    X = np.broadcast_to(x0, (n_samples, x0.shape[0]))
    Y, absorbed = system.step_batch(np.array(X), W)
    return EmpiricalDistribution(Y[~absorbed], n_samples)
