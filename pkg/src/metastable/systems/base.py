from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import DimensionError, as_state


@dataclass(frozen=True)
class StepOutcome:
    """Result of one return-map step: a next state, or absorption (``state is None``)."""

    state: np.ndarray | None

    @property
    def absorbed(self) -> bool:
        return self.state is None

    @property
    def alive(self) -> bool:
        return self.state is not None


ABSORBED = StepOutcome(None)


class ReturnMapSystem:
    """One noisy step ``x' = f(x, w)`` of a rhythmic system.

    Subclasses implement :meth:`step_batch`; all randomness enters through
    ``w`` so identical arguments always give identical outcomes.
    """

    name = "system"
    state_dim: int = 1
    noise_dim: int = 1
    indicator_index: int = 0

    def step_batch(self, X: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map rows of ``X`` (n, d) under noise rows ``W`` (n, m).

        Returns ``(Y, absorbed)``; rows of ``Y`` flagged absorbed are NaN.
        """
        raise NotImplementedError

    def step(self, x, w) -> StepOutcome:
        x = as_state(x)
        w = as_state(w, "noise")
        if x.shape[0] != self.state_dim or w.shape[0] != self.noise_dim:
            raise DimensionError(
                f"{self.name} expects state dim {self.state_dim} and noise dim "
                f"{self.noise_dim}, got {x.shape[0]} and {w.shape[0]}"
            )
        Y, absorbed = self.step_batch(x[None, :], w[None, :])
        if absorbed[0]:
            return ABSORBED
        return StepOutcome(Y[0])

    def nominal_state(self) -> np.ndarray:
        """State used for the non-indicator coordinates when discretizing."""
        return np.zeros(self.state_dim)

    def _check_batch(self, X, W):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        W = np.atleast_2d(np.asarray(W, dtype=float))
        if X.shape[1] != self.state_dim or W.shape[1] != self.noise_dim or len(X) != len(W):
            raise DimensionError(
                f"batch shapes {X.shape} / {W.shape} do not match "
                f"({self.state_dim}, {self.noise_dim})"
            )
        return X, W
