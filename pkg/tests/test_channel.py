"""Discrete channels, input distributions, and the two channel factories."""

import numpy as np
import pytest

from sietlab import (
    DiscreteChannel,
    GridFunction,
    InputDistribution,
    InvalidParameterError,
    expected_energy,
    make_adversarial_mod,
    make_awgn_peak,
    mutual_information,
)


def bsc(eps=0.11):
    w = np.array([[1 - eps, eps], [eps, 1 - eps]])
    return DiscreteChannel(np.array([0.0, 1.0]), (0.0, 1.0), w)


def h2(p):
    return -p * np.log2(p) - (1 - p) * np.log2(1 - p)


class TestDiscreteChannel:
    def test_rejects_non_stochastic_rows(self):
        w = np.array([[0.5, 0.4], [0.1, 0.9]])
        with pytest.raises(InvalidParameterError):
            DiscreteChannel(np.array([0.0, 1.0]), (0, 1), w)

    def test_rejects_input_output_mismatch(self):
        w = np.array([[0.5, 0.5]])
        with pytest.raises(InvalidParameterError):
            DiscreteChannel(np.array([0.0, 0.5, 1.0]), (0, 1), w)

    def test_json_round_trip(self, tmp_path):
        ch = bsc()
        p = tmp_path / "ch.json"
        ch.to_json(p)
        back = DiscreteChannel.from_json(p)
        assert np.allclose(back.w, ch.w)
        assert np.allclose(back.inputs, ch.inputs)

    def test_digest_distinguishes_channels(self):
        assert bsc(0.11).digest() != bsc(0.12).digest()
        assert bsc(0.11).digest() == bsc(0.11).digest()


class TestInputDistribution:
    def test_tiny_drift_renormalized(self):
        p = InputDistribution(np.array([0.5, 0.5 + 1e-12]))
        assert p.p.sum() == pytest.approx(1.0, abs=1e-15)

    def test_rejects_badly_scaled_vector(self):
        with pytest.raises(InvalidParameterError):
            InputDistribution(np.array([2.0, 2.0]))

    def test_rejects_negative_mass(self):
        with pytest.raises(InvalidParameterError):
            InputDistribution(np.array([1.2, -0.2]))


class TestMutualInformation:
    def test_bsc_uniform_matches_closed_form(self):
        eps = 0.11
        p = InputDistribution(np.array([0.5, 0.5]))
        assert mutual_information(p, bsc(eps)) == pytest.approx(1 - h2(eps), abs=1e-12)

    def test_skewed_input_matches_direct_formula(self):
        eps, a = 0.2, 0.3
        p = InputDistribution(np.array([a, 1 - a]))
        out1 = a * (1 - eps) + (1 - a) * eps
        expected = h2(out1) - h2(eps)
        assert mutual_information(p, bsc(eps)) == pytest.approx(expected, abs=1e-12)

    def test_point_mass_gives_zero(self):
        p = InputDistribution(np.array([1.0, 0.0]))
        assert mutual_information(p, bsc()) == pytest.approx(0.0, abs=1e-12)

    def test_noiseless_channel_gives_entropy(self):
        w = np.eye(3)
        ch = DiscreteChannel(np.array([0.0, 0.5, 1.0]), (0, 1, 2), w)
        p = InputDistribution(np.array([0.5, 0.25, 0.25]))
        assert mutual_information(p, ch) == pytest.approx(1.5, abs=1e-12)


class TestExpectedEnergy:
    def test_linear_harvester_on_bsc(self):
        ch = bsc()
        p = InputDistribution(np.array([0.25, 0.75]), ch.inputs)
        f = GridFunction(np.array([0.0, 1.0]))  # f(x) = x
        assert expected_energy(p, f) == pytest.approx(0.75)

    def test_letterless_distribution_rejected(self):
        p = InputDistribution(np.array([0.25, 0.75]))
        with pytest.raises(InvalidParameterError):
            expected_energy(p, GridFunction(np.array([0.0, 1.0])))


class TestAwgnPeak:
    def test_rows_are_stochastic_and_shift_with_input(self):
        ch = make_awgn_peak(8, 16, 0.1)
        assert ch.w.shape == (8, 16)
        assert np.allclose(ch.w.sum(axis=1), 1.0)
        # the output mode tracks the transmitted amplitude
        assert np.argmax(ch.w[0]) < np.argmax(ch.w[-1])

    def test_inputs_span_the_unit_interval(self):
        ch = make_awgn_peak(5, 10, 0.2)
        assert ch.inputs[0] == 0.0 and ch.inputs[-1] == 1.0

    def test_smaller_noise_concentrates_rows(self):
        sharp = make_awgn_peak(6, 24, 0.02)
        blunt = make_awgn_peak(6, 24, 0.3)
        assert sharp.w.max() > blunt.w.max()


class TestAdversarialMod:
    def test_lattice_inputs_have_uniform_rows(self):
        m = 9
        ch = make_adversarial_mod(m, 2 * (m - 1) + 1, 12)
        lattice = np.isin(ch.inputs, np.linspace(0, 1, m))
        rows = ch.w[lattice]
        assert np.allclose(rows, 1.0 / ch.w.shape[1], atol=1e-12)

    def test_off_lattice_inputs_are_informative(self):
        m = 9
        ch = make_adversarial_mod(m, 2 * (m - 1) + 1, 12)
        off = ~np.isin(ch.inputs, np.linspace(0, 1, m))
        assert np.max(ch.w[off]) > 2.0 / ch.w.shape[1]

    def test_requires_refining_grid(self):
        with pytest.raises(InvalidParameterError):
            make_adversarial_mod(9, 9, 12)  # n_in must refine the lattice
