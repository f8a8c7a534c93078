import numpy as np
import pytest

from conftest import random_psd
from metastable.core import NoiseSpec, PSDError
from metastable.estimators import (
    DEFAULT_W0,
    LinearizationError,
    build_augmented,
    default_epsilon,
    linearized_propagate,
    monte_carlo_propagate,
    numerical_jacobians,
    sigma_points,
    unscented_estimate,
    ut_propagate,
)
from metastable.systems import FunctionSystem, LinearGaussianSystem, QuadraticSystem

WIDE = dict(lo=-1e9, hi=1e9)


def test_build_augmented_hopper_example():
    b = build_augmented([1.0], NoiseSpec.isotropic(0.05), 1e-12)
    np.testing.assert_array_equal(b.mean, [1.0, 0.0])
    np.testing.assert_array_equal(b.covariance, np.diag([1e-12, 0.05]))
    assert (b.state_dim, b.noise_dim) == (1, 1)


def test_build_augmented_dimension_and_point_count():
    b = build_augmented(np.ones(10), NoiseSpec.isotropic(0.01, 10))
    assert b.dim == 20
    assert sigma_points(b).points.shape == (41, 20)


def test_build_augmented_rejects_zero_eps():
    with pytest.raises(ValueError):
        build_augmented([1.0], NoiseSpec.isotropic(0.05), 0.0)


def test_build_augmented_rejects_bad_noise():
    with pytest.raises(PSDError):
        build_augmented([1.0], NoiseSpec(np.array([[-0.1]])))


def test_default_epsilon_scales():
    assert default_epsilon([0.5]) == 1e-12
    assert default_epsilon([10.0]) == pytest.approx(1e-10)
    assert DEFAULT_W0 == pytest.approx(1 / 3)


def test_sigma_points_scalar_example():
    from metastable.core import GaussianBelief

    s = sigma_points(GaussianBelief(np.zeros(1), np.eye(1)), 0.0)
    np.testing.assert_allclose(s.points[:, 0], [0.0, 1.0, -1.0])
    np.testing.assert_allclose(s.weights, [0.0, 0.5, 0.5])


@pytest.mark.parametrize("w0", [-1.0, 1.0, 1.5])
def test_sigma_points_bad_w0(w0):
    b = build_augmented([0.0], NoiseSpec.isotropic(1.0))
    with pytest.raises(ValueError):
        sigma_points(b, w0)


def test_sigma_points_moments():
    rng = np.random.default_rng(3)
    from metastable.core import GaussianBelief

    P = random_psd(rng, 7)
    mu = rng.standard_normal(7)
    s = sigma_points(GaussianBelief(mu, P), 0.2)
    m, C = s.moments()
    assert s.weights.sum() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_allclose(m, mu, atol=1e-10)
    assert np.linalg.norm(C - P) <= 1e-10 * np.linalg.norm(P)


@pytest.mark.parametrize("w0", [-0.5, 0.0, 1 / 3, 0.9])
def test_ut_linear_exact(w0):
    s = FunctionSystem(lambda x, w: 0.8 * x + 2.0 * w)
    r = unscented_estimate(s, [0.5], NoiseSpec.isotropic(0.05), w0)
    mu, var = r.belief.marginal(0)
    assert mu == pytest.approx(0.4, rel=1e-9)
    # the augmented state variance eps contributes 0.64 * eps
    assert var == pytest.approx(4 * 0.05, rel=1e-9)
    assert r.absorbed_mass == 0.0


def test_ut_quadratic_mean():
    for w0 in (-0.5, 0.0, 0.5):
        r = unscented_estimate(QuadraticSystem(), [0.0], NoiseSpec.isotropic(1.0), w0)
        assert r.belief.mean[0] == pytest.approx(1.0, abs=1e-9)


def test_ut_absorbed_points_renormalize():
    s = LinearGaussianSystem(a=1.0, lo=-1.0, hi=1.0)
    # wide noise: both outer noise sigma points leave the interval
    r = unscented_estimate(s, [0.0], NoiseSpec.isotropic(4.0), 1 / 3)
    n = 2
    outer = (1 - 1 / 3) / (2 * n)
    assert r.absorbed_mass == pytest.approx(2 * outer)
    assert r.belief.mean[0] == pytest.approx(0.0, abs=1e-12)


def test_ut_total_absorption():
    s = LinearGaussianSystem(a=1.0, lo=-1.0, hi=1.0)
    r = unscented_estimate(s, [5.0], NoiseSpec.isotropic(0.01))
    assert r.totally_absorbed and r.belief is None and r.absorbed_mass == 1.0


def test_ut_permutation_invariant_mean():
    s = FunctionSystem(lambda x, w: np.sin(x) + w**3, 1, 1)
    sps = sigma_points(build_augmented([0.3], NoiseSpec.isotropic(0.2)))
    a = ut_propagate(s, sps)
    perm = np.random.default_rng(0).permutation(sps.n * 2 + 1)
    from metastable.estimators import SigmaPointSet

    shuffled = SigmaPointSet(sps.points[perm], sps.weights[perm], sps.w0, sps.state_dim)
    b = ut_propagate(s, shuffled)
    assert b.belief.mean[0] == pytest.approx(a.belief.mean[0], abs=1e-14)


def test_jacobians_linear():
    m = numerical_jacobians(FunctionSystem(lambda x, w: 0.7 * x - 1.3 * w), [0.2])
    assert m.f_x[0, 0] == pytest.approx(0.7, abs=1e-10)
    assert m.f_w[0, 0] == pytest.approx(-1.3, abs=1e-10)


def test_jacobians_quadratic_vanish():
    m = numerical_jacobians(QuadraticSystem(), [0.0])
    assert abs(m.f_w[0, 0]) <= 1e-8


def test_jacobians_sine():
    m = numerical_jacobians(FunctionSystem(lambda x, w: np.sin(x) + w), [0.0])
    assert m.f_x[0, 0] == pytest.approx(1.0, abs=1e-8)
    assert m.f_w[0, 0] == pytest.approx(1.0, abs=1e-8)


def test_jacobians_multidimensional():
    A = np.array([[0.5, 0.1], [-0.2, 0.3]])
    B = np.array([[1.0], [2.0]])
    s = FunctionSystem(lambda x, w: x @ A.T + w @ B.T, 2, 1)
    m = numerical_jacobians(s, [0.1, -0.4])
    np.testing.assert_allclose(m.f_x, A, atol=1e-10)
    np.testing.assert_allclose(m.f_w, B, atol=1e-10)


def test_jacobians_boundary():
    s = LinearGaussianSystem(a=1.0, lo=-1.0, hi=1.0)
    x0 = [1.0 - 5e-6]
    with pytest.raises(LinearizationError):
        numerical_jacobians(s, x0)
    m = numerical_jacobians(s, x0, one_sided_fallback=True)
    assert m.f_x[0, 0] == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(LinearizationError):
        numerical_jacobians(s, [2.0])


def test_linearized_examples():
    s = LinearGaussianSystem(a=0.8, b=1.0, **WIDE)
    r = linearized_propagate(numerical_jacobians(s, [0.5]), NoiseSpec.isotropic(0.05))
    mu, var = r.belief.marginal(0)
    assert mu == pytest.approx(0.4, abs=1e-12)
    assert var == pytest.approx(0.05, rel=1e-9)
    assert r.absorbed_mass == 0.0

    q = linearized_propagate(numerical_jacobians(QuadraticSystem(), [0.0]), NoiseSpec.isotropic(0.05))
    assert q.belief.mean[0] == 0.0 and abs(q.belief.covariance[0, 0]) <= 1e-8


def test_mc_zero_noise():
    s = LinearGaussianSystem(a=0.5, **WIDE)
    e = monte_carlo_propagate(s, [0.4], NoiseSpec.isotropic(0.0), 100, 1)
    assert np.all(e.samples == 0.2)
    assert e.covariance[0, 0] == 0.0


def test_mc_clt_bound_and_determinism():
    s = LinearGaussianSystem(a=0.5, **WIDE)
    n, var = 10_000, 0.05
    e = monte_carlo_propagate(s, [0.4], NoiseSpec.isotropic(var), n, 7)
    assert abs(e.mean[0] - 0.2) <= 4 * np.sqrt(var / n)
    f = monte_carlo_propagate(s, [0.4], NoiseSpec.isotropic(var), n, 7)
    assert e.samples.tobytes() == f.samples.tobytes()


def test_mc_needs_two_samples():
    with pytest.raises(ValueError):
        monte_carlo_propagate(LinearGaussianSystem(), [0.0], NoiseSpec.isotropic(1.0), 1, 0)


def test_mc_variance_of_mean_scales():
    s = LinearGaussianSystem(a=0.5, **WIDE)
    noise = NoiseSpec.isotropic(1.0)
    var_of_mean = {}
    for n in (100, 1000, 10_000):
        means = [monte_carlo_propagate(s, [0.0], noise, n, [11, k]).mean[0] for k in range(200)]
        var_of_mean[n] = np.var(means, ddof=1) * n
    for v in var_of_mean.values():
        assert 0.5 <= v <= 2.0


def test_hopper_ut_vs_monte_carlo(hopper):
    noise = NoiseSpec.isotropic(0.05)
    x0 = [0.95]
    ut = unscented_estimate(hopper, x0, noise)
    mc = monte_carlo_propagate(hopper, x0, noise, 10_000, 3)
    assert ut.absorbed_mass == 0.0 and mc.absorbed_fraction == 0.0
    se_mean = np.sqrt(mc.covariance[0, 0] / mc.n_live)
    se_var = mc.covariance[0, 0] * np.sqrt(2 / (mc.n_live - 1))
    assert abs(ut.belief.mean[0] - mc.mean[0]) <= 3 * se_mean
    assert abs(ut.belief.covariance[0, 0] - mc.covariance[0, 0]) <= 3 * se_var


def test_hopper_linearized_near_ut(hopper, hopper_fixed_point):
    noise = NoiseSpec.isotropic(0.01)
    ut = unscented_estimate(hopper, [hopper_fixed_point], noise)
    lin = linearized_propagate(numerical_jacobians(hopper, [hopper_fixed_point]), noise)
    assert abs(ut.belief.mean[0] - lin.belief.mean[0]) <= 1e-3


def test_hopper_ut_captures_curvature_shift(hopper, hopper_fixed_point):
    # at variance 0.05 the mean moves ~2e-3 above the noise-free image; the
    # linearized mean cannot see that, the UT mean can
    noise = NoiseSpec.isotropic(0.05)
    x0 = [hopper_fixed_point]
    ut = unscented_estimate(hopper, x0, noise).belief.mean[0]
    lin = linearized_propagate(numerical_jacobians(hopper, x0), noise).belief.mean[0]
    mc = monte_carlo_propagate(hopper, x0, noise, 100_000, 2)
    se = np.sqrt(mc.covariance[0, 0] / mc.n_live)
    assert abs(ut - mc.mean[0]) <= 3 * se
    assert abs(lin - mc.mean[0]) > abs(ut - mc.mean[0])
