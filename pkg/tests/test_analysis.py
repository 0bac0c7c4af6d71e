import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mrpfg.analysis import cps, welch_psd
from mrpfg.errors import InvalidInputError


def test_white_noise_level(rng):
    fs = 100.0
    x = rng.standard_normal(2**16)
    res = welch_psd(x, fs, segment_len=1024)
    # one-sided density of unit-variance noise
    assert np.median(res.psd[1:-1]) == pytest.approx(2 / fs, rel=0.05)
    assert res.f_r == pytest.approx(fs / 1024)


def test_sine_power_and_cps_step():
    fs, n = 240.0, 10800
    a, f0 = 1.5, 60.0
    x = a * np.cos(2 * np.pi * f0 * np.arange(n) / fs)
    res = welch_psd(x, fs)
    c = cps(res.psd, res.f_r)
    assert c[-1] == pytest.approx(a**2 / 2, rel=1e-3)
    k = np.searchsorted(res.freq_hz, f0)
    assert c[k - 4] < 1e-2 * c[-1] and c[k + 4] > 0.99 * c[-1]


def test_complex_input_two_sided():
    fs, n = 10.0, 800
    x = np.exp(2j * np.pi * 2.5 * np.arange(n) / fs)
    res = welch_psd(x, fs)
    assert np.all(np.diff(res.freq_hz) > 0) and res.freq_hz[0] == 0.0
    assert res.freq_hz[np.argmax(res.psd)] == pytest.approx(2.5)
    assert cps(res.psd, res.f_r)[-1] == pytest.approx(1.0, rel=1e-9)


def test_zero_signal_zero_curve():
    res = welch_psd(np.zeros(256), 1.0)
    np.testing.assert_array_equal(cps(res.psd, res.f_r), 0.0)


@given(arrays(float, st.integers(16, 200), elements=st.floats(-10, 10)))
def test_cps_monotone_and_matches_sum(x):
    res = welch_psd(x, 1.0, segment_len=8)
    c = cps(res.psd, res.f_r)
    assert np.all(np.diff(c) >= 0)
    assert c[-1] == pytest.approx(np.sum(res.psd) * res.f_r, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("kw", [dict(segment_len=1), dict(segment_len=500), dict(overlap_frac=1.0)])
def test_bad_settings(kw):
    with pytest.raises(InvalidInputError):
        welch_psd(np.ones(100), 1.0, **kw)


def test_empty_signal():
    with pytest.raises(InvalidInputError):
        welch_psd(np.array([]), 1.0)
