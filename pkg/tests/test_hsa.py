import numpy as np
import pytest
import scipy.signal
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_walk
from hhtlab.ceemd import EnsembleConfig, ceemd
from hhtlab.emd import Decomposition, emd
from hhtlab.hsa import (LowessConfig, analytic_mode, analytic_modes, hilbert,
                        hilbert_spectrum, instantaneous_frequency,
                        mode_spectrum_means, robust_lowess,
                        spectral_reconstruction, write_means_csv)
from hhtlab.series import interior

T = np.arange(2000, dtype=float)


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.integers(4, 300),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_hilbert_matches_scipy(x):
    ref = np.imag(scipy.signal.hilbert(x))
    np.testing.assert_allclose(hilbert(x), ref, atol=1e-9 * (1 + np.abs(x).max()))


def test_hilbert_of_cosine_is_sine():
    s = interior(T.size)
    dev = hilbert(np.cos(2 * np.pi * 0.05 * T)) - np.sin(2 * np.pi * 0.05 * T)
    assert np.max(np.abs(dev[s])) < 0.02


def test_hilbert_constant_is_zero():
    np.testing.assert_allclose(hilbert(np.full(33, 7.0)), 0.0, atol=1e-12)


def test_hilbert_twice_negates():
    x = random_walk(3, 1024)
    x = x - x.mean()
    s = interior(x.size)
    hh = hilbert(hilbert(x))
    # H^2 = -I for signals without a DC or Nyquist component
    err = np.linalg.norm((hh + x)[s]) / np.linalg.norm(x[s])
    assert err < 0.02


def test_hilbert_too_short():
    with pytest.raises(ValueError):
        hilbert([1.0, 2.0, 3.0])


def test_hilbert_energy_bounded_by_signal_energy():
    x = random_walk(9, 500)
    x = x - x.mean()
    assert np.sum(hilbert(x) ** 2) <= np.sum(x ** 2) * (1 + 1e-12)
    tone = np.cos(2 * np.pi * 0.05 * T)
    s = interior(T.size)
    ratio = np.sum(hilbert(tone)[s] ** 2) / np.sum(tone[s] ** 2)
    assert abs(ratio - 1) < 0.05


def test_pure_tone_amplitude_phase_frequency():
    m = analytic_mode(2 * np.cos(2 * np.pi * 0.05 * T))
    s = interior(T.size)
    assert abs(np.median(m.amplitude[s]) - 2.0) < 0.04
    assert abs(np.median(m.frequency[s]) - 0.05) < 0.001
    assert np.all(np.diff(m.phase[s]) >= 0)
    np.testing.assert_allclose(m.amplitude ** 2, m.real_part ** 2 + m.imag_part ** 2,
                               rtol=4e-16)


@settings(max_examples=30, deadline=None)
@given(arrays(float, st.integers(8, 200),
              elements=st.floats(-100, 100, allow_nan=False)))
def test_amplitude_identity(x):
    m = analytic_mode(x, lowess=None)
    np.testing.assert_allclose(m.amplitude ** 2, m.real_part ** 2 + m.imag_part ** 2,
                               rtol=1e-12, atol=1e-12)
    assert np.all(m.amplitude >= 0)


def test_linear_phase_gives_constant_frequency():
    f = instantaneous_frequency(2 * np.pi * 0.05 * T)
    assert np.max(np.abs(f - 0.05)) < 1e-8


def test_centered_difference_without_smoothing():
    theta = np.array([0.0, 1.0, 4.0, 9.0])
    f = instantaneous_frequency(theta, lowess=None)
    np.testing.assert_allclose(f * 2 * np.pi, [1.0, 2.0, 4.0, 5.0])


def test_negative_frequency_not_clamped():
    f = instantaneous_frequency(-0.3 * T[:100], lowess=None)
    assert np.all(f < 0)


def test_chirp_frequency_tracking():
    t = T[:1000]
    m = analytic_mode(np.cos(2 * np.pi * (0.01 * t + 0.00005 * t ** 2)))
    truth = 0.01 + 0.0001 * 500
    assert abs(m.frequency[500] - truth) / truth < 0.1


def test_lowess_reproduces_lines():
    y = 3 * np.arange(1, 301) + 1.0
    for it in (0, 5):
        out = robust_lowess(y, LowessConfig(span=0.1, robust_iterations=it))
        assert np.max(np.abs(out - y)) < 1e-8


@settings(max_examples=30, deadline=None)
@given(st.floats(-50, 50), st.floats(-5, 5), st.integers(40, 200),
       st.floats(0.05, 1.0))
def test_lowess_linear_property(a, b, n, span):
    y = a + b * np.arange(n)
    out = robust_lowess(y, LowessConfig(span=span))
    assert np.max(np.abs(out - y)) < 1e-8 * (1 + np.abs(y).max())


def test_lowess_ignores_spike():
    y = np.r_[np.ones(50), 100.0, np.ones(50)]
    out = robust_lowess(y, LowessConfig(span=0.2, robust_iterations=5))
    assert out[50] < 2


def test_lowess_smooth_signal_fidelity():
    y = np.sin(2 * np.pi * T / 1000)
    out = robust_lowess(y, LowessConfig(span=0.05, robust_iterations=0))
    assert np.max(np.abs(out - y)) < 0.01


def test_lowess_config_errors():
    with pytest.raises(ValueError, match="lowess.span"):
        LowessConfig(span=1.5)
    with pytest.raises(ValueError, match="lowess.span"):
        LowessConfig(span=0)
    with pytest.raises(ValueError, match="robust_iterations"):
        LowessConfig(robust_iterations=-1)
    with pytest.raises(ValueError):
        robust_lowess(np.arange(30.0), LowessConfig(span=0.01))


def test_spectrum_energy_of_pure_tone():
    x = 2 * np.cos(2 * np.pi * 0.05 * T)
    d = Decomposition(x[None, :], np.zeros_like(x))
    spectrum = hilbert_spectrum(d)
    assert len(spectrum) == T.size
    e = spectrum.energy[0, interior(T.size)]
    assert np.all(np.abs(e - 4.0) < 0.2)
    points = list(spectrum)
    assert len(points) == T.size and points[10].mode_index == 1
    assert points[10].time == 11


def test_spectrum_of_monotonic_input_is_empty():
    spectrum = hilbert_spectrum(emd(np.linspace(0, 1, 100)))
    assert len(spectrum) == 0 and list(spectrum) == []
    with pytest.raises(ValueError):
        mode_spectrum_means(spectrum)


def test_point_count_is_modes_times_length():
    d = emd(random_walk(1, 400))
    assert len(hilbert_spectrum(d)) == d.n_modes * 400


def test_two_tone_mean_frequencies(two_tone):
    _, fast, slow = two_tone
    means = mode_spectrum_means(hilbert_spectrum(emd(fast + slow)))
    assert abs(means[0][0] - 0.2) < 0.02
    assert abs(means[1][0] - 0.02) < 0.002


@pytest.mark.parametrize("seed", range(3))
def test_mean_frequencies_decrease(seed):
    d = ceemd(random_walk(seed, 512), EnsembleConfig(seed=seed, trials=10))
    f = [m[0] for m in mode_spectrum_means(hilbert_spectrum(d))]
    assert all(a > b for a, b in zip(f, f[1:]))


def test_spectral_reconstruction():
    x = random_walk(6, 1000)
    d = emd(x)
    y = spectral_reconstruction(analytic_modes(d), d.residue)
    s = interior(x.size)
    rel = np.sqrt(np.mean((y - x)[s] ** 2)) / np.std(x[s])
    assert rel < 0.05


def test_means_csv(tmp_path):
    p = tmp_path / "m.csv"
    write_means_csv([(0.2, 1.0), (0.02, 0.5)], p, ["note"])
    assert p.read_text().splitlines() == [
        "# note", "mode,mean_frequency,mean_energy", "1,0.2,1.0", "2,0.02,0.5"]


def test_spectrum_csv(tmp_path):
    d = emd(random_walk(1, 64))
    p = tmp_path / "s.csv"
    hilbert_spectrum(d).to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "mode,t,frequency,energy,amplitude"
    assert len(lines) == 1 + d.n_modes * 64
