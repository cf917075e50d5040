import math

import numpy as np
import pytest
from scipy import integrate

from bayesic.exceptions import ConfigurationError, DomainError
from bayesic.models import (
    LOG_2PI,
    GeometricDGP,
    GeometricModel,
    LaplaceDGP,
    LaplaceModel,
    NormalDGP,
    NormalModel,
    ObservedSample,
    avg_loglik,
    expected_loglik,
    log_density,
    make_sample,
    true_theta0,
)


class TestObservedSample:
    def test_caches_summaries(self):
        s = ObservedSample([[1.0, 2.0], [3.0, -1.0]])
        np.testing.assert_allclose(s.mean, [2.0, 0.5])
        assert s.sum_sq == 1 + 4 + 9 + 1
        assert s.n == 2 and s.dim == 2

    def test_one_dimensional_input_is_a_column(self):
        s = ObservedSample([0.0, 3.0, 1.0])
        assert s.values.shape == (3, 1)
        np.testing.assert_allclose(s.xbar, 4.0 / 3.0)

    def test_values_are_read_only(self):
        s = ObservedSample([1.0, 2.0])
        with pytest.raises(ValueError):
            s.values[0, 0] = 5.0

    def test_geometric_rejects_negative_naming_row(self):
        with pytest.raises(DomainError, match="row 2"):
            ObservedSample.geometric([0, -1, 2])

    def test_geometric_rejects_fraction(self):
        with pytest.raises(DomainError):
            ObservedSample.geometric([0.5])

    def test_rejects_empty_and_nan(self):
        with pytest.raises(ValueError):
            ObservedSample(np.empty((0, 1)))
        with pytest.raises(ValueError):
            ObservedSample([1.0, math.nan])

    def test_mean_abs_dev_matches_brute_force(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=257)
        s = ObservedSample(x)
        mu = np.linspace(-4, 4, 101)
        brute = np.abs(x[None, :] - mu[:, None]).mean(axis=1)
        np.testing.assert_allclose(s.mean_abs_dev(mu), brute, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(s.mean_abs_dev(x[5]), np.abs(x - x[5]).mean(), rtol=1e-12)


class TestLogDensity:
    def test_geometric_zero(self):
        np.testing.assert_allclose(log_density(GeometricModel(), 0, 0.5), math.log(0.5))

    def test_normal_origin(self):
        np.testing.assert_allclose(log_density(NormalModel(), 0.0, 0.0), -0.5 * LOG_2PI)

    def test_laplace_at_location(self):
        np.testing.assert_allclose(log_density(LaplaceModel(), 0.0, (0.0, 1.0)), -math.log(2.0))

    @pytest.mark.parametrize("theta", [0.0, 1.0, -0.2, 1.5])
    def test_geometric_theta_outside_open_interval(self, theta):
        with pytest.raises(DomainError):
            log_density(GeometricModel(), 1, theta)

    @pytest.mark.parametrize("x", [-1, 1.5])
    def test_geometric_bad_observation(self, x):
        with pytest.raises(DomainError):
            log_density(GeometricModel(), x, 0.5)

    def test_laplace_theta_outside_box(self):
        with pytest.raises(DomainError):
            log_density(LaplaceModel(4, 8), 0.0, (5.0, 1.0))
        with pytest.raises(DomainError):
            log_density(LaplaceModel(4, 8), 0.0, (0.0, 0.1))


class TestAvgLoglik:
    def test_geometric_hand_sum(self):
        s = ObservedSample.geometric([1, 3])
        np.testing.assert_allclose(avg_loglik(GeometricModel(), s, 0.5), 3 * math.log(0.5), rtol=1e-15)

    def test_normal_single_point(self):
        np.testing.assert_allclose(avg_loglik(NormalModel(), ObservedSample([0.0]), 0.0), -0.5 * LOG_2PI)

    def test_laplace_two_zeros(self):
        s = ObservedSample([0.0, 0.0])
        np.testing.assert_allclose(avg_loglik(LaplaceModel(), s, (0.0, 1.0)), -math.log(2.0))

    def test_vectorized_over_points(self):
        s = ObservedSample.geometric([0, 2, 5])
        thetas = np.array([0.1, 0.4, 0.9])
        out = GeometricModel().avg_loglik(s, thetas)
        assert out.shape == (3,)
        np.testing.assert_allclose(out[1], GeometricModel().avg_loglik(s, 0.4))

    @pytest.mark.parametrize("kind", ["geometric", "normal2", "laplace"])
    def test_equals_brute_force_mean(self, kind):
        rng = np.random.default_rng({"geometric": 1, "normal2": 2, "laplace": 3}[kind])
        for _ in range(100):
            n = int(rng.integers(1, 40))
            if kind == "geometric":
                model = GeometricModel(*rng.uniform(0.5, 5, 2))
                x = rng.integers(0, 12, n).astype(float)
                theta = rng.uniform(0.01, 0.99)
                rows = x
            elif kind == "normal2":
                model = NormalModel(tuple(rng.normal(size=2)))
                rows = rng.normal(size=(n, 2)) * 3
                theta = rng.normal(size=2)
                x = rows
            else:
                model = LaplaceModel(4, 8)
                x = rng.laplace(size=n) * 2
                rows = x
                theta = (rng.uniform(-4, 4), rng.uniform(1 / 8, 8))
            sample = make_sample(model, x)
            brute = np.mean([model.log_density(r, theta) for r in rows])
            np.testing.assert_allclose(model.avg_loglik(sample, theta), brute, rtol=1e-12, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            make_sample(NormalModel((0.0, 0.0)), np.zeros((3, 3)))

    def test_geometric_concave(self):
        rng = np.random.default_rng(5)
        s = ObservedSample.geometric(rng.integers(0, 10, 50))
        m = GeometricModel()
        theta, tau, lam = rng.uniform(1e-6, 1 - 1e-6, (3, 1000))
        mix = m.avg_loglik(s, lam * theta + (1 - lam) * tau)
        chord = lam * m.avg_loglik(s, theta) + (1 - lam) * m.avg_loglik(s, tau)
        assert np.all(mix >= chord - 1e-10)


class TestExpectedLoglik:
    def test_geometric_at_half(self):
        v = expected_loglik(GeometricModel(), GeometricDGP(0.5), 0.5)
        np.testing.assert_allclose(v, -2 * math.log(2.0), rtol=1e-15)

    def test_normal(self):
        v = expected_loglik(NormalModel(), NormalDGP((1.0,)), 1.0)
        np.testing.assert_allclose(v, -0.5 * LOG_2PI - 0.5, rtol=1e-15)

    def test_laplace(self):
        v = expected_loglik(LaplaceModel(), LaplaceDGP(0.0, 1.0), (0.0, 1.0))
        np.testing.assert_allclose(v, -math.log(2.0) - 1.0, rtol=1e-15)

    @pytest.mark.parametrize("mu_star, b_star, mu", [(0.0, 1.0, 0.0), (-0.2, 1.5, 0.7), (1.0, 0.3, -2.0)])
    def test_laplace_abs_dev_against_quadrature(self, mu_star, b_star, mu):
        def integrand(x):
            return abs(x - mu) * math.exp(-abs(x - mu_star) / b_star) / (2 * b_star)

        lo, hi = mu_star - 40 * b_star, mu_star + 40 * b_star
        oracle = integrate.quad(integrand, lo, hi, points=sorted({mu_star, mu}), limit=200, epsabs=1e-13)[0]
        np.testing.assert_allclose(LaplaceDGP(mu_star, b_star).mean_abs_dev(mu), oracle, rtol=1e-10)

    def test_mismatched_family(self):
        with pytest.raises(ValueError):
            expected_loglik(GeometricModel(), NormalDGP((0.0,)), 0.5)

    def test_geometric_grid_argmax_at_theta0(self):
        m = GeometricModel()
        for t0 in (0.1, 0.37, 0.5, 0.9):
            dgp = GeometricDGP(t0)
            grid = np.linspace(1e-4, 1 - 1e-4, 10_000)
            best = grid[np.argmax(m.expected_loglik(dgp, grid))]
            nearest = grid[np.argmin(np.abs(grid - true_theta0(m, dgp)[0]))]
            assert best == nearest

    def test_laplace_grid_argmax_at_theta0(self):
        m = LaplaceModel(4, 8)
        dgp = LaplaceDGP(0.3, 1.7)
        mu = np.linspace(-4, 4, 200)
        gam = np.linspace(1 / 8, 8, 200)
        pts = np.stack([g.ravel() for g in np.meshgrid(mu, gam, indexing="ij")], axis=1)
        best = pts[np.argmax(m.expected_loglik(dgp, pts))]
        t0 = true_theta0(m, dgp)
        nearest = pts[np.argmin(np.sum((pts - t0) ** 2, axis=1))]
        np.testing.assert_array_equal(best, nearest)


class TestTrueTheta0:
    def test_geometric(self):
        np.testing.assert_allclose(true_theta0(GeometricModel(), GeometricDGP(0.5)), [0.5])

    def test_normal(self):
        np.testing.assert_allclose(true_theta0(NormalModel(), NormalDGP((1.0,))), [1.0])

    def test_laplace(self):
        np.testing.assert_allclose(true_theta0(LaplaceModel(), LaplaceDGP(0.0, 1.0)), [0.0, 1.0])

    def test_laplace_outside_box(self):
        with pytest.raises(ConfigurationError):
            true_theta0(LaplaceModel(4, 8), LaplaceDGP(0.0, 10.0))


class TestModelSpecs:
    @pytest.mark.parametrize("m, s", [(0.0, 8.0), (4.0, 1.0), (-1.0, 2.0)])
    def test_laplace_box_validation(self, m, s):
        with pytest.raises(ConfigurationError):
            LaplaceModel(m, s)

    def test_geometric_prior_is_a_density(self):
        m = GeometricModel(2.5, 4.0)
        t = (np.arange(200_000) + 0.5) / 200_000
        np.testing.assert_allclose(np.exp(m.log_prior(t)).mean(), 1.0, rtol=1e-6)

    def test_laplace_uniform_prior(self):
        m = LaplaceModel(4, 8)
        np.testing.assert_allclose(m.log_prior((0.0, 1.0)), -math.log(8 * (8 - 1 / 8)))

    def test_laplace_custom_prior(self):
        m = LaplaceModel(4, 8, log_prior_fn=lambda p: -p[:, 1])
        np.testing.assert_allclose(m.log_prior((0.0, 2.0)), -2.0)

    def test_models_are_immutable(self):
        m = GeometricModel()
        with pytest.raises(AttributeError):
            m.alpha = 3.0
