import numpy as np
from hypothesis import given, strategies as st

from metastable import io
from metastable.core import GaussianBelief, NoiseSpec, matrix_sqrt, psd_validate
from metastable.estimators import (
    build_augmented,
    linearized_propagate,
    numerical_jacobians,
    sigma_points,
    unscented_estimate,
)
from metastable.markov import GridSpec, TransitionMatrix, analyze_matrix, assemble_matrix, row_from_belief
from metastable.reduction import TrajectoryDataset, indicator_state, pca
from metastable.systems import FunctionSystem

seeds = st.integers(0, 2**32 - 1)
w0s = st.floats(-0.95, 0.95)


def psd(rng, d, rank):
    G = rng.standard_normal((d, rank)) * rng.uniform(0.1, 3.0)
    return G @ G.T


@given(seeds, st.integers(1, 25), st.data())
def test_matrix_sqrt_multiply_back(seed, d, data):
    rank = data.draw(st.integers(1, d))
    M = psd(np.random.default_rng(seed), d, rank)
    S = matrix_sqrt(M)
    assert np.linalg.norm(S @ S.T - M) <= 1e-10 * np.linalg.norm(M)


@given(seeds, st.integers(1, 8))
def test_psd_validate_permutation_invariant(seed, d):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((d, d))
    M = M + M.T if rng.random() < 0.5 else psd(rng, d, d)
    p = rng.permutation(d)
    assert psd_validate(M) == psd_validate(M[np.ix_(p, p)])


@given(seeds, st.integers(1, 25), w0s)
def test_sigma_point_moments(seed, n, w0):
    rng = np.random.default_rng(seed)
    P = psd(rng, n, n)
    mu = rng.standard_normal(n)
    m, C = sigma_points(GaussianBelief(mu, P), w0).moments()
    assert np.allclose(m, mu, rtol=0, atol=1e-10 * max(1.0, np.abs(mu).max()))
    assert np.linalg.norm(C - P) <= 1e-10 * np.linalg.norm(P)


@given(seeds, st.integers(1, 4), st.integers(1, 3), w0s)
def test_ut_matches_linearized_on_affine(seed, d, m, w0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((d, d))
    B = rng.standard_normal((d, m))
    c = rng.standard_normal(d)
    s = FunctionSystem(lambda X, W: X @ A.T + W @ B.T + c, d, m)
    x0 = rng.standard_normal(d)
    noise = NoiseSpec(psd(rng, m, m))
    eps = 1e-300  # keep the state block out of the comparison
    ut = unscented_estimate(s, x0, noise, w0, eps).belief
    lin = linearized_propagate(numerical_jacobians(s, x0), noise).belief
    scale = max(1.0, np.abs(lin.mean).max())
    assert np.allclose(ut.mean, lin.mean, rtol=0, atol=1e-9 * scale)
    assert np.allclose(ut.covariance, lin.covariance, rtol=0, atol=1e-9 * max(1.0, np.abs(lin.covariance).max()))


@given(seeds, w0s)
def test_ut_mean_permutation_invariant(seed, w0):
    rng = np.random.default_rng(seed)
    s = FunctionSystem(lambda X, W: np.tanh(X) + W**2, 2, 2)
    sps = sigma_points(build_augmented(rng.standard_normal(2), NoiseSpec(psd(rng, 2, 2))), w0)
    Y, _ = s.step_batch(sps.points[:, :2], sps.points[:, 2:])
    p = rng.permutation(len(Y))
    assert np.allclose(sps.weights @ Y, sps.weights[p] @ Y[p], rtol=0, atol=1e-13)


@given(st.floats(-5, 5), st.floats(0, 4), st.floats(0, 1), st.integers(1, 60))
def test_row_is_probability_vector(mu, var, absorbed, n):
    g = GridSpec(-1.0, 1.0, n)
    row = row_from_belief(GaussianBelief(np.array([mu]), np.array([[var]])), absorbed, g)
    assert row.shape == (n + 1,)
    assert np.all(row >= 0) and np.all(row <= 1)
    assert abs(row.sum() - 1.0) <= 1e-12


@given(seeds, st.integers(1, 8))
def test_report_invariants(seed, n):
    rng = np.random.default_rng(seed)
    rows = rng.random((n, n + 1)) ** 3
    rows[:, 0] += rng.uniform(0.01, 0.5, n)
    rows /= rows.sum(axis=1, keepdims=True)
    T = assemble_matrix(rows, GridSpec(0.0, 1.0, n))
    assert np.all(np.abs(T.T.sum(axis=1) - 1) <= 1e-12)
    rep = analyze_matrix(T, k=min(4, n + 1))
    assert rep.spectrum.values[0] == 1.0
    assert np.all(np.abs(rep.spectrum.values) <= 1 + 1e-12)
    phi = rep.metastable
    assert phi[0] == 0 and np.all(phi >= 0) and abs(phi.sum() - 1) <= 1e-12
    assert rep.mfpt_state[0] == 0 and np.all(rep.mfpt_state[1:] >= 1 - 1e-9)
    assert np.all(rep.neighborhood >= 0) and rep.neighborhood.sum() <= 1 + 1e-12


@given(seeds, st.lists(st.floats(0.01, 100), min_size=3, max_size=3))
def test_indicator_invariant_under_positive_scaling(seed, scales):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(200)
    X = np.vstack([f + rng.uniform(0.2, 2) * rng.standard_normal(200) for _ in range(3)])
    a = indicator_state(pca(TrajectoryDataset(X, ())))
    b = indicator_state(pca(TrajectoryDataset(X * np.array(scales)[:, None], ())))
    if not a.tie:
        assert a.index == b.index


@given(seeds, st.floats(0, 2 * np.pi))
def test_pca_rotation_covariance(seed, theta):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((2, 300)) * np.array([[3.0], [1.0]])
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    a = pca(TrajectoryDataset(X, ()), standardize=False)
    b = pca(TrajectoryDataset(R @ X, ()), standardize=False)
    assert abs(b.explained_ratio.sum() - 1) <= 1e-12
    np.testing.assert_allclose(a.explained_ratio, b.explained_ratio, atol=1e-10)
    # loadings rotate with the data, up to the sign convention
    for k in range(2):
        rotated = R @ a.loadings[:, k]
        assert min(np.abs(rotated - b.loadings[:, k]).max(), np.abs(rotated + b.loadings[:, k]).max()) <= 1e-8


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=10))
def test_csv_float_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    io.write_table(path, ["v"], [[v] for v in values])
    _, header, data = io.read_csv(path)
    assert header == ["v"]
    assert [float(x) for x in data[:, 0]] == [float(v) for v in values]
