import numpy as np
import pytest

from immocz import SystemParams, add_awgn, convolve, find_roots, noise_variance, sample_channel, zeros_to_coefficients
from immocz.channel import NoiseSpec, complex_normal, convolve_batch
from immocz.errors import ParameterError

from test_codebook import match_error


def test_single_tap_unit_energy():
    p = SystemParams(3, 3, 1)
    g = np.random.default_rng(0)
    energy = np.mean([abs(sample_channel(p, g)[0]) ** 2 for _ in range(20000)])
    assert energy == pytest.approx(1, rel=0.03)


def test_tap_energy_monte_carlo():
    # 1e6 draws of a 3-tap channel, drawn in bulk with the same recipe
    g = np.random.default_rng(1)
    taps = complex_normal(g, (10**6, 3), 1 / 3)
    total = np.sum(np.abs(taps) ** 2, axis=1)
    assert total.mean() == pytest.approx(1.0, rel=0.01)
    assert np.var(taps.real) == pytest.approx(1 / 6, rel=0.01)
    assert np.var(taps.imag) == pytest.approx(1 / 6, rel=0.01)


def test_channel_seeded():
    p = SystemParams(5, 3, 3)
    a = sample_channel(p, np.random.default_rng(7))
    b = sample_channel(p, np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)
    assert len(a) == 3


def test_per_realization_normalization():
    p = SystemParams(5, 3, 4)
    h = sample_channel(p, np.random.default_rng(2), "per-realization")
    assert np.sum(np.abs(h) ** 2) == pytest.approx(1, rel=1e-14)
    with pytest.raises(ParameterError):
        sample_channel(p, np.random.default_rng(2), "bogus")


def test_convolve_examples():
    x = np.array([1 + 2j, -0.5, 3j])
    np.testing.assert_array_equal(convolve(x, [1]), x)
    np.testing.assert_array_equal(convolve([1, 1], [1, 1]), [1, 2, 1])


def test_convolve_root_union(rng):
    tx = np.exp(1j * rng.uniform(0, 2 * np.pi, 4)) * rng.uniform(0.8, 1.2, 4)
    ch = rng.uniform(0.3, 2, 2) * np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
    y = convolve(zeros_to_coefficients(tx), 0.7j * zeros_to_coefficients(ch))
    assert len(y) == 7
    assert match_error(find_roots(y).roots, np.concatenate([tx, ch])) < 1e-8


def test_convolve_linearity(rng):
    x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    c = 0.3 - 1.7j
    np.testing.assert_allclose(convolve(c * x, h), c * convolve(x, h), atol=1e-12)


def test_convolve_batch_matches(rng):
    x = rng.standard_normal((20, 7)) + 1j * rng.standard_normal((20, 7))
    h = rng.standard_normal((20, 3)) + 1j * rng.standard_normal((20, 3))
    out = convolve_batch(x, h)
    for row, (a, b) in enumerate(zip(x, h)):
        np.testing.assert_allclose(out[row], convolve(a, b), atol=1e-13)


def test_noise_variance_formula():
    p = SystemParams(10, 6, 3)
    spec = noise_variance(p, "im-mocz", 10)
    assert spec.sigma2 == pytest.approx(13 / 60, rel=1e-14)
    assert noise_variance(p, "im-mocz", 10, "per-information-bit").sigma2 == pytest.approx(13 / 100)
    assert noise_variance(SystemParams(10, 10, 3), "mocz", 10).sigma2 == pytest.approx(13 / 100)


def test_noise_variance_degenerate_and_monotone():
    p = SystemParams(8, 8, 3)
    assert noise_variance(p, "mocz", 7).sigma2 == noise_variance(p, "im-mocz", 7).sigma2
    values = [noise_variance(p, "im-mocz", e).sigma2 for e in range(-10, 200, 10)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-15
    with pytest.raises(ParameterError):
        noise_variance(p, "mocz", float("inf"))
    with pytest.raises(ParameterError):
        noise_variance(p, "ofdm", 3)


def test_awgn_zero_variance():
    y = np.array([1 + 1j, 2, -3j])
    np.testing.assert_array_equal(add_awgn(y, NoiseSpec(0, 0.0), np.random.default_rng(0)), y)
    with pytest.raises(ParameterError):
        add_awgn(y, -1.0, np.random.default_rng(0))


def test_awgn_variance_monte_carlo():
    y = np.zeros(10**6, dtype=complex)
    out = add_awgn(y, 0.25, np.random.default_rng(5))
    assert np.mean(np.abs(out) ** 2) == pytest.approx(0.25, rel=0.01)
    assert abs(np.mean(out**2)) < 0.01 * 0.25


def test_awgn_seeded():
    y = np.ones(6, dtype=complex)
    a = add_awgn(y, 0.1, np.random.default_rng(11))
    b = add_awgn(y, 0.1, np.random.default_rng(11))
    np.testing.assert_array_equal(a, b)
