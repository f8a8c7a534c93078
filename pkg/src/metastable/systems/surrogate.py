"""Four-dimensional nonlinear stand-in for a multi-link walker.

``x' = A @ tanh(x) + B @ w`` with two noise channels. The coefficients
were drawn once by ``tools/generate_surrogate.py`` and are frozen here.
"""

from __future__ import annotations

import numpy as np

from .base import ABSORBED, ReturnMapSystem, StepOutcome

SURROGATE_A = np.array(
    [
        [0.527008315600115, -0.6177738079647943, 0.18890346598731989, 0.5321682725112759],
        [-0.0906641007620406, 0.004205564387140403, 0.2118083540930087, 0.20204975184938645],
        [-0.01823644200580503, 0.716686168683065, -0.2501276816602015, 0.2781773077490739],
        [0.27716134231328743, -0.04420170862348924, 0.29986617623118256, -0.7248493822806257],
    ]
)

SURROGATE_B = np.array(
    [
        [-0.2469196484420809, -0.30807797383935687],
        [0.19772861543474454, -0.1982780189746323],
        [0.649118296193416, 0.7162317968591483],
        [0.27030999232167874, -0.9600192620045436],
    ]
)

ABSORB_LIMIT = 5.0


def surrogate_multidim_map(x, w, A=SURROGATE_A, B=SURROGATE_B) -> StepOutcome:
    """One step of the surrogate; absorbed when any |x'_i| exceeds the limit."""
    y = A @ np.tanh(np.asarray(x, dtype=float)) + B @ np.asarray(w, dtype=float)
    if np.any(np.abs(y) > ABSORB_LIMIT):
        return ABSORBED
    return StepOutcome(y)


class SurrogateSystem(ReturnMapSystem):
    name = "surrogate"
    state_dim = 4
    noise_dim = 2

    def __init__(self, indicator_index: int = 3, A=None, B=None):
        self.A = SURROGATE_A if A is None else np.asarray(A, dtype=float)
        self.B = SURROGATE_B if B is None else np.asarray(B, dtype=float)
        self.indicator_index = int(indicator_index)

    def step_batch(self, X, W):
        X, W = self._check_batch(X, W)
        Y = np.tanh(X) @ self.A.T + W @ self.B.T
        absorbed = np.any(np.abs(Y) > ABSORB_LIMIT, axis=1)
        Y[absorbed] = np.nan
        return Y, absorbed
