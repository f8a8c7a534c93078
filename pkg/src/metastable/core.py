"""Shared numerical types and small linear-algebra helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    pass


class PSDError(ValueError):
    """Raised when a matrix that must be positive semidefinite is not."""

    def __init__(self, message: str, eigenvalue: float | None = None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


def as_state(x, name: str = "state") -> np.ndarray:
    """Coerce ``x`` into a finite 1-D float array."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries: {arr}")
    return arr


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(M, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {arr.shape}")
    return arr


def psd_validate(M, tol: float = 1e-12) -> bool:
    """True iff ``M`` is symmetric within ``tol`` and has no eigenvalue below ``-tol``."""
    M = as_matrix(M)
    if not np.all(np.isfinite(M)):
        return False
    if np.max(np.abs(M - M.T), initial=0.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(0.5 * (M + M.T)).min() >= -tol)


def matrix_sqrt(M, tol: float = 1e-12) -> np.ndarray:
    """Return ``S`` with ``S @ S.T == M`` for a symmetric PSD ``M``.

    Cholesky is tried first. On failure a diagonal jitter of
    ``1e-12 * trace(M) / d`` is added (growing tenfold, three attempts)
    before falling back to the spectral square root. Column ``i`` of the
    result is the sigma-point offset direction ``A_i``.
    """
    M = as_matrix(M)
    sym_err = np.max(np.abs(M - M.T), initial=0.0)
    if sym_err > tol * max(1.0, np.max(np.abs(M), initial=0.0)):
        raise PSDError(f"matrix is not symmetric (max asymmetry {sym_err:.3e})")
    M = 0.5 * (M + M.T)
    d = M.shape[0]
    scale = max(np.max(np.abs(M), initial=0.0), np.finfo(float).tiny)
    evals = np.linalg.eigvalsh(M)
    if evals[0] < -tol * max(1.0, scale):
        raise PSDError(
            f"matrix is indefinite: eigenvalue {evals[0]:.6e} < 0", eigenvalue=float(evals[0])
        )

    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        pass
    jitter = 1e-12 * max(np.trace(M), 0.0) / d
    for _ in range(3):
        if jitter > 0.0:
            try:
                return np.linalg.cholesky(M + jitter * np.eye(d))
            except np.linalg.LinAlgError:
                pass
        jitter *= 10.0

    w, V = np.linalg.eigh(M)
    return V * np.sqrt(np.clip(w, 0.0, None))


def nearest_psd(M) -> np.ndarray:
    """Symmetrize and clip negative eigenvalues to zero."""
    M = as_matrix(M)
    M = 0.5 * (M + M.T)
    w, V = np.linalg.eigh(M)
    if w.min() >= 0.0:
        return M
    return (V * np.clip(w, 0.0, None)) @ V.T


@dataclass(frozen=True)
class NoiseSpec:
    """Zero-mean Gaussian noise with covariance ``covariance``."""

    covariance: np.ndarray

    def __post_init__(self):
        cov = as_matrix(self.covariance, "noise covariance")
        if not psd_validate(cov, 1e-12):
            raise PSDError("noise covariance must be symmetric positive semidefinite")
        object.__setattr__(self, "covariance", cov)

    @classmethod
    def isotropic(cls, variance: float, dim: int = 1) -> "NoiseSpec":
        return cls(float(variance) * np.eye(dim))

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]

    def scaled(self, sigma: float) -> "NoiseSpec":
        """Noise whose covariance is ``sigma**2 * I``."""
        return NoiseSpec.isotropic(sigma * sigma, self.dim)


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = as_state(self.mean, "belief mean")
        cov = as_matrix(self.covariance, "belief covariance")
        if cov.shape[0] != mean.shape[0]:
            raise DimensionError(
                f"covariance {cov.shape} does not match mean dimension {mean.shape[0]}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def marginal(self, index: int) -> tuple[float, float]:
        """(mean, variance) of one coordinate."""
        return float(self.mean[index]), float(self.covariance[index, index])


@dataclass
class EmpiricalDistribution:
    """Monte Carlo next-step samples; statistics cover live samples only."""

    samples: np.ndarray  # (n_live, d)
    n_total: int
    mean: np.ndarray = field(init=False)
    covariance: np.ndarray = field(init=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim == 1:
            self.samples = self.samples[:, None]
        n_live = self.samples.shape[0]
        if n_live > self.n_total:
            raise ValueError("more live samples than total draws")
        d = self.samples.shape[1]
        if n_live == 0:
            self.mean = np.full(d, np.nan)
            self.covariance = np.full((d, d), np.nan)
        else:
            # shift by the first sample: exact zero spread for constant columns
            ref = self.samples[0]
            dev = self.samples - ref
            shift = dev.mean(axis=0)
            self.mean = ref + shift
            if n_live > 1:
                dev = dev - shift
                self.covariance = dev.T @ dev / (n_live - 1)
            else:
                self.covariance = np.zeros((d, d))

    @property
    def n_live(self) -> int:
        return self.samples.shape[0]

    @property
    def absorbed_fraction(self) -> float:
        return (self.n_total - self.n_live) / self.n_total

    def standard_error(self) -> np.ndarray:
        """Standard error of the sample mean, per coordinate."""
        if self.n_live < 2:
            return np.full(self.samples.shape[1], np.nan)
        return np.sqrt(np.diag(self.covariance) / self.n_live)
