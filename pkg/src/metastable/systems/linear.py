from __future__ import annotations

import numpy as np

from .base import ABSORBED, ReturnMapSystem, StepOutcome


def linear_gaussian_map(a: float, bounds, x: float, w: float) -> StepOutcome:
    """x' = a*x + w, absorbed unless strictly inside ``bounds``."""
    lo, hi = bounds
    y = a * x + w
    if lo < y < hi:
        return StepOutcome(np.array([y]))
    return ABSORBED


class LinearGaussianSystem(ReturnMapSystem):
    """Scalar affine benchmark ``x' = a*x + b*w`` with an open survival interval."""

    name = "linear_gaussian"

    def __init__(self, a: float = 0.4, lo: float = -1.0, hi: float = 1.0, b: float = 1.0):
        if not lo < hi:
            raise ValueError(f"need lo < hi, got {lo}, {hi}")
        self.a = float(a)
        self.b = float(b)
        self.lo = float(lo)
        self.hi = float(hi)

    def step_batch(self, X, W):
        X, W = self._check_batch(X, W)
        Y = self.a * X + self.b * W
        absorbed = ~((Y[:, 0] > self.lo) & (Y[:, 0] < self.hi))
        Y[absorbed] = np.nan
        return Y, absorbed


class QuadraticSystem(ReturnMapSystem):
    """``x' = (x + w)**2``; the linearization of this map at 0 misses all noise."""

    name = "quadratic"

    def __init__(self, lo: float = -np.inf, hi: float = np.inf):
        self.lo = float(lo)
        self.hi = float(hi)

    def step_batch(self, X, W):
        X, W = self._check_batch(X, W)
        Y = (X + W) ** 2
        absorbed = ~((Y[:, 0] > self.lo) & (Y[:, 0] < self.hi))
        Y[absorbed] = np.nan
        return Y, absorbed


class FunctionSystem(ReturnMapSystem):
    """Wrap a plain ``f(x, w) -> array`` (never absorbs). Handy for tests."""

    def __init__(self, f, state_dim: int = 1, noise_dim: int = 1, name: str = "function"):
        self.f = f
        self.state_dim = state_dim
        self.noise_dim = noise_dim
        self.name = name

    def step_batch(self, X, W):
        X, W = self._check_batch(X, W)
        Y = np.array([np.atleast_1d(self.f(x, w)) for x, w in zip(X, W)], dtype=float)
        Y = Y.reshape(len(X), self.state_dim)
        return Y, np.zeros(len(X), dtype=bool)
