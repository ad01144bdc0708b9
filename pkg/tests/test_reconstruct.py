"""Spline and local polynomial reconstruction, guaranteed envelopes."""

import numpy as np
import pytest
from sklearn.base import clone

from sietlab import (
    GridFunction,
    InsufficientSamplesError,
    InvalidParameterError,
    KernelSpec,
    LocalPolynomialRegressor,
    SmoothnessClass,
    SplineReconstructor,
    local_poly_fit,
    lower_envelope,
    sample_regular,
    spline_interpolate,
)


def sine_member(order, k_bound=1.0, grid_size=2049):
    """0.9K sin(2 pi x)/(2 pi)^order, a certified interior member of the class."""
    amp = 0.9 * k_bound / (2 * np.pi) ** order
    return GridFunction.from_callable(
        lambda x: amp * np.sin(2 * np.pi * x), grid_size=grid_size)


class TestSplineReconstructor:
    def test_linear_data_recovered_exactly(self):
        x = np.linspace(0, 1, 7)
        est = SplineReconstructor(degree=1).fit(x, 2 * x + 1)
        q = np.array([0.15, 0.5, 0.83])
        assert np.allclose(est.predict(q), 2 * q + 1, atol=1e-12)

    def test_cubic_reproduces_cubics(self):
        x = np.linspace(0, 1, 9)
        y = x**3 - 0.5 * x
        est = SplineReconstructor(degree=3).fit(x, y)
        q = np.linspace(0, 1, 101)
        assert np.allclose(est.predict(q), q**3 - 0.5 * q, atol=1e-10)

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamplesError):
            SplineReconstructor(degree=3).fit([0.0, 0.5, 1.0], [0.0, 1.0, 0.0])

    def test_estimator_api_round_trip(self):
        est = SplineReconstructor(degree=2)
        assert clone(est).get_params() == {"degree": 2}
        est.set_params(degree=1)
        assert est.degree == 1

    def test_column_vector_design_accepted(self):
        x = np.linspace(0, 1, 5)[:, None]
        est = SplineReconstructor(degree=1).fit(x, np.ravel(2 * x))
        assert est.predict([[0.5]])[0] == pytest.approx(1.0)


class TestSplineInterpolate:
    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_sup_error_shrinks_with_m(self, order):
        cls = SmoothnessClass(order=order, k_bound=1.0)
        f = sine_member(order)
        errs = []
        for m in (9, 65):
            fit = spline_interpolate(sample_regular(f, m), cls)
            errs.append(np.max(np.abs(fit.values - f.values)))
        # one octave of m per unit of order buys at least a factor 4 here
        assert errs[1] < errs[0] / 4

    def test_interpolates_the_samples(self):
        f = sine_member(1)
        s = sample_regular(f, 17)
        fit = spline_interpolate(s, SmoothnessClass(order=1, k_bound=1.0))
        assert np.allclose(fit(s.xs), s.values, atol=1e-10)


class TestLocalPolynomialRegressor:
    def test_constant_recovered_from_noiseless_samples(self):
        x = np.linspace(0, 1, 25)
        est = LocalPolynomialRegressor(order=1).fit(x, np.full_like(x, 0.3))
        assert np.allclose(est.predict(np.linspace(0, 1, 11)), 0.3, atol=1e-10)

    def test_averaging_beats_raw_noise(self):
        rng = np.random.default_rng(0)
        f = sine_member(1)
        x = np.linspace(0, 1, 400)
        y = f(x) + 0.05 * rng.standard_normal(x.size)
        est = LocalPolynomialRegressor(order=1, bandwidth_alpha=0.5).fit(x, y)
        q = np.linspace(0, 1, 201)
        mse = np.mean((est.predict(q) - f(q)) ** 2)
        assert mse < 0.05**2 / 4

    def test_unknown_kernel_rejected(self):
        with pytest.raises(InvalidParameterError):
            KernelSpec(kind="sinc")

    def test_get_params_exposes_all_knobs(self):
        params = LocalPolynomialRegressor().get_params()
        assert {"order", "kernel", "bandwidth_alpha"} <= set(params)


class TestLocalPolyFit:
    def test_mse_improves_with_m(self):
        cls = SmoothnessClass(order=1, k_bound=1.0)
        f = sine_member(1)
        errs = []
        for m in (33, 513):
            fits = []
            for seed in range(8):
                s = sample_regular(f, m, noise_sigma=0.05, seed=seed)
                fits.append(np.max((local_poly_fit(s, cls).values - f.values) ** 2))
            errs.append(np.mean(fits))
        assert errs[1] < errs[0] / 2


class TestLowerEnvelope:
    @pytest.mark.parametrize("order", [1, 2])
    def test_brackets_the_truth(self, order):
        cls = SmoothnessClass(order=order, k_bound=1.0)
        f = sine_member(order)
        env = lower_envelope(sample_regular(f, 17), cls)
        assert np.all(env.lower.values <= f.values + 1e-9)
        assert np.all(env.upper.values >= f.values - 1e-9)

    def test_width_shrinks_with_m(self):
        cls = SmoothnessClass(order=1, k_bound=1.0)
        f = sine_member(1)
        widths = []
        for m in (9, 129):
            env = lower_envelope(sample_regular(f, m), cls)
            widths.append(np.max(env.upper.values - env.lower.values))
        assert widths[1] < widths[0] / 8

    def test_noiseless_envelope_is_exact_with_zero_margin(self):
        cls = SmoothnessClass(order=1, k_bound=1.0)
        env = lower_envelope(sample_regular(sine_member(1), 17), cls)
        assert env.exact
        assert env.margin == 0.0

    def test_noisy_samples_rejected(self):
        cls = SmoothnessClass(order=1, k_bound=1.0)
        s = sample_regular(sine_member(1), 17, noise_sigma=0.05)
        with pytest.raises(InvalidParameterError):
            lower_envelope(s, cls)
