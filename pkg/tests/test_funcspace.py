"""Grid functions, sampling, and the adversarial bump construction."""

import numpy as np
import pytest

from sietlab import (
    GridFunction,
    InvalidParameterError,
    SmoothnessClass,
    bump_function,
    lq_norm,
    membership_check,
    sample_regular,
)
from sietlab.funcspace import read_grid_csv, read_samples_csv, write_grid_csv, write_samples_csv


class TestGridFunction:
    def test_nodes_are_equispaced(self):
        f = GridFunction(np.array([0.0, 1.0, 4.0]))
        assert np.allclose(f.nodes(), [0.0, 0.5, 1.0])

    def test_call_interpolates_linearly(self):
        f = GridFunction(np.array([0.0, 2.0]))
        assert f(0.25) == pytest.approx(0.5)

    def test_call_rejects_points_outside_unit_interval(self):
        f = GridFunction(np.array([0.0, 1.0]))
        with pytest.raises(InvalidParameterError):
            f(1.5)

    def test_values_are_read_only(self):
        f = GridFunction(np.array([0.0, 1.0]))
        with pytest.raises(ValueError):
            f.values[0] = 3.0

    def test_constant_factory(self):
        f = GridFunction.constant(0.7)
        assert np.all(f.values == 0.7)

    def test_from_callable_matches_function(self):
        f = GridFunction.from_callable(np.sin, grid_size=65)
        assert f(0.5) == pytest.approx(np.sin(0.5), abs=1e-4)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidParameterError):
            GridFunction(np.array([0.0, np.nan]))

    def test_rejects_scalar(self):
        with pytest.raises(InvalidParameterError):
            GridFunction(np.array([1.0]))

    def test_digest_is_stable_and_content_addressed(self):
        a = GridFunction(np.array([0.0, 1.0, 2.0]))
        b = GridFunction(np.array([0.0, 1.0, 2.0]))
        c = GridFunction(np.array([0.0, 1.0, 2.5]))
        assert a.digest() == b.digest()
        assert a.digest() != c.digest()


class TestSampling:
    def test_noiseless_samples_hit_the_function(self):
        f = GridFunction.from_callable(lambda x: x**2, grid_size=513)
        s = sample_regular(f, 9, noise_sigma=0.0)
        assert np.allclose(s.values, s.xs**2, atol=1e-5)
        assert np.allclose(s.xs, np.linspace(0, 1, 9))

    def test_same_seed_reproduces_noise(self):
        f = GridFunction.constant(0.5)
        a = sample_regular(f, 17, noise_sigma=0.1, seed=42)
        b = sample_regular(f, 17, noise_sigma=0.1, seed=42)
        c = sample_regular(f, 17, noise_sigma=0.1, seed=43)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_uniform_noise_is_bounded(self):
        f = GridFunction.constant(0.0)
        s = sample_regular(f, 400, noise_sigma=0.05, seed=1, noise="uniform")
        # uniform on [-sigma*sqrt(3), sigma*sqrt(3)] keeps the variance at sigma^2
        assert np.max(np.abs(s.values)) <= 0.05 * np.sqrt(3.0) + 1e-12

    def test_rejects_single_sample(self):
        f = GridFunction.constant(0.0)
        with pytest.raises(InvalidParameterError):
            sample_regular(f, 1)

    def test_csv_round_trip(self, tmp_path):
        f = GridFunction.from_callable(lambda x: np.sin(x), grid_size=65)
        s = sample_regular(f, 9, noise_sigma=0.02, seed=7)
        p = tmp_path / "samples.csv"
        write_samples_csv(s, p)
        back = read_samples_csv(p, noise_sigma=0.02)
        assert np.allclose(back.xs, s.xs)
        assert np.allclose(back.values, s.values)

    def test_grid_csv_round_trip(self, tmp_path):
        f = GridFunction(np.array([0.1, 0.4, 0.2]))
        p = tmp_path / "grid.csv"
        write_grid_csv(f, p)
        assert np.allclose(read_grid_csv(p).values, f.values)


class TestLqNorm:
    def test_l1_of_constant(self):
        assert lq_norm(GridFunction.constant(2.0), 1.0) == pytest.approx(2.0)

    def test_l2_of_linear(self):
        f = GridFunction(np.linspace(0.0, 1.0, 2049))
        # integral of x^2 on [0,1] is 1/3
        assert lq_norm(f, 2.0) == pytest.approx(np.sqrt(1.0 / 3.0), abs=1e-4)

    def test_sup_norm(self):
        f = GridFunction(np.array([0.0, -3.0, 1.0]))
        assert lq_norm(f, np.inf) == pytest.approx(3.0)


class TestBumpFunction:
    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_vanishes_on_the_design_lattice(self, order):
        m = 9
        fn = bump_function(m, SmoothnessClass(order=order, k_bound=1.0)).fn
        assert np.max(np.abs(fn(np.linspace(0, 1, m)))) < 1e-12

    @pytest.mark.parametrize("order", [1, 2])
    def test_certified_class_member(self, order):
        cls = SmoothnessClass(order=order, k_bound=1.0)
        fn = bump_function(17, cls, amplitude_scale=0.5).fn
        assert membership_check(fn, cls)

    def test_amplitude_scales_like_minus_order(self):
        cls = SmoothnessClass(order=2, k_bound=1.0)
        a9 = bump_function(9, cls).amplitude
        a17 = bump_function(17, cls).amplitude
        # doubling the lattice divides the amplitude by 2^order
        assert a9 / a17 == pytest.approx(4.0, rel=0.05)

    def test_l1_mass_constant_is_positive(self):
        c = bump_function(33, SmoothnessClass(order=1, k_bound=1.0)).l1_constant
        assert c > 0

    def test_amplitude_scale_above_one_rejected(self):
        with pytest.raises(InvalidParameterError):
            bump_function(9, SmoothnessClass(order=1, k_bound=1.0), amplitude_scale=1.5)


class TestMembershipCheck:
    def test_accepts_smooth_sine_inside_bound(self):
        cls = SmoothnessClass(order=1, k_bound=1.0)
        f = GridFunction.from_callable(
            lambda x: 0.9 / (2 * np.pi) * np.sin(2 * np.pi * x), grid_size=2049)
        assert membership_check(f, cls)

    def test_rejects_steep_function(self):
        cls = SmoothnessClass(order=1, k_bound=1.0)
        f = GridFunction.from_callable(lambda x: 10.0 * x, grid_size=257)
        report = membership_check(f, cls)
        assert not report.ok
