"""Vertical F-SLIP hopper, apex-to-apex.

Stance dynamics (body height ``y`` while ``y < r0``)::

    m y'' = -m g + k (r0 - y) - c y' + F * [y' > 0]

The constant force ``F`` only acts while the leg extends; applied during
compression too it would do zero net work over a stance and the damped
hopper could never sustain a gait. Impact-velocity noise ``w`` is added
to the touchdown velocity.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .. import kernels
from .base import ABSORBED, ReturnMapSystem, StepOutcome


class DomainError(ValueError):
    pass


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class HopperParams:
    mass: float = 1.0
    rest_length: float = 0.3
    stiffness: float = 500.0
    damping: float = 1.5
    force: float = 10.0
    gravity: float = 9.81
    lo: float = 0.4
    hi: float = 1.5
    dt: float = 1e-4
    t_max: float = 10.0
    event_tol: float = 1e-10

    def __post_init__(self):
        for name in ("mass", "rest_length", "stiffness", "gravity", "dt", "t_max", "event_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.damping < 0 or self.force < 0:
            raise ValueError("damping and force must be nonnegative")
        if not self.lo < self.hi:
            raise ValueError("grid bounds need lo < hi")

    @property
    def n_bisect(self) -> int:
        return max(1, math.ceil(math.log2(self.dt / self.event_tol)))

    def kernel_args(self) -> tuple:
        return (
            self.mass,
            self.rest_length,
            self.stiffness,
            self.damping,
            self.force,
            self.gravity,
            self.dt,
            self.t_max,
            self.n_bisect,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _stance(params: HopperParams, v0: np.ndarray, backend: str | None = None):
    v_lo, status = kernels.get_stance_batch(backend)(*params.kernel_args(), v0)
    if not np.all(np.isfinite(v_lo)):
        raise IntegrationError("stance integration produced non-finite velocities")
    return v_lo, status


def integrate_stance(params: HopperParams, y0: float, v0: float, backend: str | None = None):
    """Liftoff velocity for a touchdown at ``(y0, v0)``, or ``None`` if the stance absorbs.

    Absorption means bottom-out (``y`` reaches 0) or no liftoff within
    ``params.t_max``.
    """
    if not math.isclose(y0, params.rest_length, rel_tol=0.0, abs_tol=1e-12):
        raise DomainError(f"touchdown height must equal the rest length {params.rest_length}")
    if v0 > 0:
        raise DomainError("touchdown velocity must be nonpositive")
    v_lo, status = _stance(params, np.array([v0]), backend)
    if status[0] != kernels.ST_LIFTOFF:
        return None
    return float(v_lo[0])


def apex_batch(params: HopperParams, y_apex, w, backend: str | None = None):
    """Vectorized apex map; returns ``(next_apex, absorbed)``."""
    y_apex = np.asarray(y_apex, dtype=float).ravel()
    w = np.broadcast_to(np.asarray(w, dtype=float).ravel(), y_apex.shape)
    drop = y_apex - params.rest_length
    if np.any(drop <= 0):
        raise DomainError("apex height must exceed the leg rest length")
    v_td = -np.sqrt(2.0 * params.gravity * drop) + w
    v_lo, status = _stance(params, v_td, backend)
    y_next = params.rest_length + v_lo * v_lo / (2.0 * params.gravity)
    # grid boundary values absorb
    absorbed = (status != kernels.ST_LIFTOFF) | ~((y_next > params.lo) & (y_next < params.hi))
    y_next = np.where(absorbed, np.nan, y_next)
    return y_next, absorbed


def hopper_apex_map(params: HopperParams, y_apex: float, w: float = 0.0) -> StepOutcome:
    y, absorbed = apex_batch(params, [y_apex], [w])
    if absorbed[0]:
        return ABSORBED
    return StepOutcome(y)


class HopperSystem(ReturnMapSystem):
    name = "hopper"
    state_dim = 1
    noise_dim = 1
    indicator_index = 0

    def __init__(self, params: HopperParams | None = None, backend: str | None = None):
        self.params = params or HopperParams()
        self.backend = backend

    def step_batch(self, X, W):
        X, W = self._check_batch(X, W)
        y, absorbed = apex_batch(self.params, X[:, 0], W[:, 0], self.backend)
        return y[:, None], absorbed

    def nominal_state(self):
        return np.array([find_fixed_point(self.params)])


def find_fixed_point(params: HopperParams, n_scan: int = 221, tol: float = 1e-13) -> float:
    """Stable fixed point of the noise-free apex map inside the grid.

    Scans ``n_scan`` apex heights for a sign change of ``f(y) - y`` from
    positive to negative, then bisects. Raises ``ValueError`` if none exists.
    """
    lo = max(params.lo, params.rest_length + 1e-9)
    ys = np.linspace(lo, params.hi, n_scan)
    f, absorbed = apex_batch(params, ys, 0.0)
    g = f - ys
    for i in range(n_scan - 1):
        if absorbed[i] or absorbed[i + 1]:
            continue
        if g[i] > 0 >= g[i + 1]:
            a, b = ys[i], ys[i + 1]
            while b - a > tol:
                mid = 0.5 * (a + b)
                out = hopper_apex_map(params, mid)
                if out.absorbed:
                    raise ValueError("apex map absorbs inside the fixed-point bracket")
                if out.state[0] - mid > 0:
                    a = mid
                else:
                    b = mid
            return 0.5 * (a + b)
    raise ValueError("apex map has no stable fixed point inside the grid")


def return_map_slope(params: HopperParams, y: float, h: float = 1e-5) -> float:
    up = hopper_apex_map(params, y + h)
    dn = hopper_apex_map(params, y - h)
    if up.absorbed or dn.absorbed:
        return float("nan")
    return float((up.state[0] - dn.state[0]) / (2 * h))


def calibrate_hopper(
    stiffness=(300.0, 500.0, 800.0),
    damping=(1.0, 1.5, 2.0),
    force=(6.0, 8.0, 10.0, 12.0),
    base: HopperParams | None = None,
) -> list[tuple[HopperParams, float, float]]:
    """Scan parameter combinations and keep those with a contracting fixed point.

    Returns ``(params, fixed_point, slope)`` for every accepted set, sorted
    by ``|slope|``. Sets with no fixed point in the grid, or with
    ``|slope| >= 1``, are rejected.
    """
    base = base or HopperParams()
    accepted = []
    for k in stiffness:
        for c in damping:
            for F in force:
                p = replace(base, stiffness=k, damping=c, force=F)
                try:
                    y_star = find_fixed_point(p)
                except ValueError:
                    continue
                slope = return_map_slope(p, y_star)
                if np.isfinite(slope) and abs(slope) < 1.0:
                    accepted.append((p, y_star, slope))
    accepted.sort(key=lambda t: abs(t[2]))
    return accepted
