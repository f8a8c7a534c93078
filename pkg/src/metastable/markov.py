"""Absorbing Markov chain over a discretized indicator coordinate.

State 0 is the absorbing state; states ``1..n_cells`` are equal slices of
``[lo, hi]``. Cell ``j`` covers ``(e_j, e_{j+1}]``; values at or beyond the
bounds absorb.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .core import GaussianBelief

UNRELIABLE_MFPT = 1e14
DENSE_LIMIT = 512


class NumericalError(RuntimeError):
    pass


class NonAbsorbingChainError(NumericalError):
    pass


class DegeneracyWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class GridSpec:
    lo: float
    hi: float
    n_cells: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if int(self.n_cells) < 1:
            raise ValueError(f"grid needs at least one cell, got {self.n_cells}")
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def n_states(self) -> int:
        return self.n_cells + 1

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.n_cells

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n_cells + 1)

    @property
    def midpoints(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[1:] + e[:-1])

    def cell_of(self, values) -> np.ndarray:
        """Chain state index for each value (0 = absorbed)."""
        values = np.asarray(values, dtype=float)
        idx = np.searchsorted(self.edges, values, side="left")
        inside = (values > self.lo) & (values < self.hi)
        return np.where(inside, idx, 0)


class TransitionMatrix:
    """Row-stochastic ``N x N`` matrix whose first state absorbs."""

    def __init__(self, T, grid: GridSpec | None = None, tol: float = 1e-9):
        T = np.array(T, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError(f"transition matrix must be square, got {T.shape}")
        if grid is not None and T.shape[0] != grid.n_states:
            raise ValueError(f"matrix size {T.shape[0]} does not match grid ({grid.n_states})")
        if np.any(T < -tol) or np.any(T > 1 + tol) or not np.all(np.isfinite(T)):
            raise ValueError("transition probabilities must lie in [0, 1]")
        err = np.abs(T.sum(axis=1) - 1.0)
        if err.max() > tol:
            bad = int(np.argmax(err))
            raise ValueError(f"row {bad} sums to {T[bad].sum():.15g}, not 1")
        if T[0, 0] != 1.0 or np.any(T[0, 1:] != 0.0):
            raise ValueError("first row must be the absorbing unit vector")
        self.T = T
        self.grid = grid

    @property
    def n(self) -> int:
        return self.T.shape[0]

    @property
    def bar(self) -> np.ndarray:
        """Transitions among the nonabsorbing states."""
        return self.T[1:, 1:]

    def __array__(self, dtype=None, copy=None):
        return self.T if dtype is None else self.T.astype(dtype)


def _absorbing_row(n_states: int) -> np.ndarray:
    row = np.zeros(n_states)
    row[0] = 1.0
    return row


def row_from_belief(
    belief: GaussianBelief | None,
    absorbed_mass: float,
    grid: GridSpec,
    index: int = 0,
) -> np.ndarray:
    """Transition row from a Gaussian over the next indicator value.

    Nonabsorbing entries are ``(1 - absorbed_mass)`` times the Gaussian
    mass of each cell; the absorbing entry collects whatever is left.
    A zero variance is treated as a point mass.
    """
    n = grid.n_states
    if belief is None or absorbed_mass >= 1.0:
        return _absorbing_row(n)
    mu, var = belief.marginal(index)
    live = 1.0 - min(max(absorbed_mass, 0.0), 1.0)
    row = np.zeros(n)
    if not var > 0.0:
        cell = int(grid.cell_of(mu))
        row[cell] += live
    else:
        z = (grid.edges - mu) / np.sqrt(var)
        lower = ndtr(z)
        upper = ndtr(-z)
        # difference whichever tail keeps precision
        p = np.where(z[:-1] >= 0.0, upper[:-1] - upper[1:], lower[1:] - lower[:-1])
        row[1:] = live * np.clip(p, 0.0, None)
    row[0] = max(0.0, 1.0 - row[1:].sum())
    return row


def row_from_samples(values, n_total: int, grid: GridSpec) -> np.ndarray:
    """Histogram row from live Monte Carlo indicator values; lost draws absorb."""
    values = np.asarray(values, dtype=float).ravel()
    cells = grid.cell_of(values)
    counts = np.bincount(cells, minlength=grid.n_states).astype(float)
    counts[0] += n_total - values.size
    return counts / n_total


def assemble_matrix(rows, grid: GridSpec) -> TransitionMatrix:
    rows = np.asarray(rows, dtype=float)
    if rows.shape != (grid.n_cells, grid.n_states):
        raise ValueError(
            f"expected {grid.n_cells} rows of length {grid.n_states}, got {rows.shape}"
        )
    T = np.empty((grid.n_states, grid.n_states))
    T[0] = _absorbing_row(grid.n_states)
    T[1:] = rows
    return TransitionMatrix(T, grid)


# --- eigen-analysis ---------------------------------------------------------


def _power_pairs(A: np.ndarray, k: int, tol: float = 1e-13, max_iter: int = 200_000):
    """Top ``k`` eigenpairs of ``A`` by power iteration with Hotelling deflation.

    Returns ``(values, right_vectors, left_vectors)``. Only real dominant
    eigenvalues can be resolved; anything else exhausts ``max_iter``.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    vals, rights, lefts = [], [], []
    for _ in range(min(k, n)):
        pair = []
        for M in (A, A.T):
            v = np.full(n, 1.0 / np.sqrt(n))
            lam = 0.0
            for it in range(1, max_iter + 1):
                Av = M @ v
                lam = float(v @ Av)
                res = np.linalg.norm(Av - lam * v)
                nrm = np.linalg.norm(Av)
                if nrm == 0.0:
                    break
                if res <= tol * max(abs(lam), 1e-300) or res <= tol:
                    break
                v = Av / nrm
            else:
                raise NumericalError(f"power iteration did not converge in {max_iter} iterations")
            pair.append((lam, v))
        (lam, v), (_, u) = pair
        vals.append(lam)
        rights.append(v)
        lefts.append(u)
        denom = u @ v
        if abs(denom) < 1e-300:
            break
        A = A - lam * np.outer(v, u) / denom
    return np.array(vals), rights, lefts


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray  # complex, sorted by descending magnitude; values[0] == 1
    complex_flags: np.ndarray

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __len__(self):
        return len(self.values)


def _bar_eigenvalues(Tbar: np.ndarray, k: int) -> np.ndarray:
    if Tbar.shape[0] == 0 or k <= 0:
        return np.zeros(0, dtype=complex)
    if Tbar.shape[0] <= DENSE_LIMIT:
        ev = np.linalg.eigvals(Tbar)
        order = np.lexsort((-ev.imag, -ev.real, -np.abs(ev)))
        return ev[order][:k].astype(complex)
    vals, _, _ = _power_pairs(Tbar, k)
    return vals.astype(complex)


def spectrum(T: TransitionMatrix, k: int = 4) -> Spectrum:
    """Eigenvalues of ``T`` with the largest magnitudes, ``lambda_1 = 1`` first."""
    others = _bar_eigenvalues(T.bar, k - 1)
    values = np.concatenate([[1.0 + 0.0j], others])
    return Spectrum(values, np.abs(values.imag) > 1e-10)


@dataclass(frozen=True)
class SystemMFPT:
    value: float
    reliable: bool
    lambda2: float

    def __float__(self):
        return self.value


def mfpt_system(lambda2) -> SystemMFPT:
    """``M = 1 / (1 - lambda2)``; complex inputs use their magnitude.

    ``lambda2 >= 1`` gives ``inf``; anything above 1e14 is flagged unreliable.
    """
    lam = float(abs(lambda2)) if np.iscomplexobj(lambda2) else float(lambda2)
    if lam >= 1.0:
        return SystemMFPT(float("inf"), False, lam)
    M = 1.0 / (1.0 - lam)
    return SystemMFPT(M, bool(M <= UNRELIABLE_MFPT), lam)


def mfpt_state(T: TransitionMatrix) -> np.ndarray:
    """Expected steps to absorption from every state, ``[0; (I - Tbar)^-1 1]``."""
    Tb = T.bar
    n = Tb.shape[0]
    A = np.eye(n) - Tb
    try:
        m = np.linalg.solve(A, np.ones(n))
    except np.linalg.LinAlgError as exc:
        raise NonAbsorbingChainError("I - Tbar is singular; some states never absorb") from exc
    if not np.all(np.isfinite(m)) or np.linalg.cond(A) > 1e16:
        raise NonAbsorbingChainError("I - Tbar is numerically singular; some states never absorb")
    return np.concatenate([[0.0], m])


def _dominant_left(Tb: np.ndarray) -> tuple[complex, np.ndarray, bool]:
    if Tb.shape[0] <= DENSE_LIMIT:
        w, V = np.linalg.eig(Tb.T)
        order = np.argsort(-np.abs(w), kind="stable")
        lam = w[order[0]]
        vec = V[:, order[0]]
        repeated = len(w) > 1 and np.isclose(abs(w[order[1]]), abs(lam), rtol=1e-10, atol=1e-14)
        return lam, vec, bool(repeated)
    vals, _, lefts = _power_pairs(Tb, 1)
    return complex(vals[0]), lefts[0], False


def metastable_distribution(T: TransitionMatrix) -> np.ndarray:
    """Quasi-stationary distribution: the left eigenvector of ``Tbar`` for ``lambda_2``.

    Padded with a zero for the absorbing state, sign-fixed to be
    nonnegative and normalized to sum to one. Complex or repeated
    ``lambda_2`` triggers a :class:`DegeneracyWarning`.
    """
    Tb = T.bar
    if Tb.shape[0] == 1:
        return np.array([0.0, 1.0])
    lam, vec, repeated = _dominant_left(Tb)
    if abs(np.imag(lam)) > 1e-10 or np.max(np.abs(np.imag(vec))) > 1e-10:
        warnings.warn("second eigenvalue is complex; using the real part", DegeneracyWarning)
    if repeated:
        warnings.warn("second eigenvalue is repeated", DegeneracyWarning)
    v = np.real(vec)
    if v.sum() < 0:
        v = -v
    v = np.clip(v, 0.0, None)
    total = v.sum()
    if total <= 0:
        raise NumericalError("metastable eigenvector has no positive mass")
    return np.concatenate([[0.0], v / total])


def metastable_neighborhood(T: TransitionMatrix, phi) -> np.ndarray:
    """Joint probability ``J[i, j] = phi_i T_ij`` of consecutive live states ``i -> j``.

    The absorbing column is zeroed, so ``J.sum()`` is the one-step survival
    probability under ``phi``.
    """
    phi = np.asarray(phi, dtype=float)
    J = phi[:, None] * T.T
    J[:, 0] = 0.0
    J[0, :] = 0.0
    return J


# --- chain simulation oracle --------------------------------------------------


@dataclass(frozen=True)
class Censored:
    max_steps: int


def simulate_chain(T: TransitionMatrix, start: int, seed, max_steps: int = 10**6):
    """Steps until absorption from ``start``, or :class:`Censored` after ``max_steps``."""
    if start == 0:
        raise ValueError("start must be a nonabsorbing state")
    rng = np.random.default_rng(seed)
    cum = np.cumsum(T.T, axis=1)
    state = start
    for step in range(1, max_steps + 1):
        state = min(int(np.searchsorted(cum[state], rng.random(), side="right")), T.n - 1)
        if state == 0:
            return step
    return Censored(max_steps)


def simulate_chains(T: TransitionMatrix, starts, seed, max_steps: int = 10**6, burn_in: int = 0):
    """Vectorized chain runs.

    Returns ``(times, occupancy)``: absorption times (``-1`` if censored)
    and, for each live state, the number of visits made after ``burn_in``
    steps by runs that had not yet absorbed.
    """
    rng = np.random.default_rng(seed)
    cum = np.cumsum(T.T, axis=1)
    cum[:, -1] = 1.0
    state = np.asarray(starts, dtype=np.int64).copy()
    if np.any(state == 0):
        raise ValueError("start states must be nonabsorbing")
    times = np.full(state.shape, -1, dtype=np.int64)
    occupancy = np.zeros(T.n, dtype=np.int64)
    alive = np.arange(state.size)
    for step in range(1, max_steps + 1):
        u = rng.random(alive.size)
        c = cum[state[alive]]
        nxt = (c <= u[:, None]).sum(axis=1)
        state[alive] = nxt
        dead = nxt == 0
        times[alive[dead]] = step
        alive = alive[~dead]
        if step > burn_in and alive.size:
            occupancy += np.bincount(state[alive], minlength=T.n)
        if alive.size == 0:
            break
    return times, occupancy


# --- report -----------------------------------------------------------------


@dataclass
class MetastableReport:
    spectrum: Spectrum
    mfpt: SystemMFPT
    mfpt_state: np.ndarray
    metastable: np.ndarray
    neighborhood: np.ndarray
    warnings: list[str] = field(default_factory=list)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.values


def analyze_matrix(T: TransitionMatrix, k: int = 4) -> MetastableReport:
    notes: list[str] = []
    spec = spectrum(T, k)
    lam2 = spec.values[1] if len(spec) > 1 else 0.0
    if len(spec) > 1 and spec.complex_flags[1]:
        notes.append("lambda_2 is complex; MFPT uses its magnitude")
    M = mfpt_system(lam2)
    if not M.reliable:
        notes.append(f"system-wide MFPT {M.value:.6g} is not reliable (lambda_2 = {M.lambda2:.17g})")
    try:
        m = mfpt_state(T)
    except NonAbsorbingChainError as exc:
        notes.append(str(exc))
        m = np.full(T.n, np.inf)
        m[0] = 0.0
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegeneracyWarning)
        phi = metastable_distribution(T)
    notes.extend(str(w.message) for w in caught if issubclass(w.category, DegeneracyWarning))
    J = metastable_neighborhood(T, phi)
    return MetastableReport(spec, M, m, phi, J, notes)
