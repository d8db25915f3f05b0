import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import welch

from nvsinglet.lockin import (
    DemodConfig,
    FMConfig,
    LockIn,
    NoCrossingError,
    TimeSeries,
    demodulate,
    dispersive_scan,
    filter_response,
    fit_zero_crossing,
    synth_fm_response,
)
from nvsinglet.odmr import Spectrum

FS = 1e6


def line_model(depth=0.016, fwhm=700e3, center=17e6):
    hw2 = (fwhm / 2) ** 2
    return lambda f: 1.0 - depth * hw2 / ((np.asarray(f) - center) ** 2 + hw2)


def alpha_of(depth, fwhm, f_dev):
    fm = FMConfig(5.6e3, f_dev, 17e6)
    carriers = 17e6 + np.linspace(-fwhm / 8, fwhm / 8, 21)
    curve = dispersive_scan(line_model(depth, fwhm), fm, DemodConfig(), carriers, rate=FS)
    return fit_zero_crossing(curve, fwhm / 8, near=17e6, fwhm=fwhm)


def test_cascade_cutoff_is_minus_3db():
    for order in (1, 2, 4):
        d = DemodConfig(lowpass_cutoff=1e3, lowpass_order=order)
        assert filter_response(1e3, d, FS) == pytest.approx(1 / np.sqrt(2), rel=2e-3)
        assert filter_response(0.0, d, FS) == pytest.approx(1.0)


def test_demod_config_validation():
    with pytest.raises(ValueError):
        DemodConfig(lowpass_order=0)
    with pytest.raises(ValueError):
        DemodConfig(reference_freq=1e3, lowpass_cutoff=2e3)
    with pytest.raises(ValueError):
        LockIn(DemodConfig(reference_freq=6e5), FS)


def test_in_phase_sine_demodulates_to_amplitude():
    t = np.arange(int(0.05 * FS)) / FS
    x = 0.3 * np.sin(2 * np.pi * 5.6e3 * t)
    y = demodulate(TimeSeries(FS, x), DemodConfig()).values
    assert y[-5000:].mean() == pytest.approx(0.3, rel=1e-3)
    q = demodulate(TimeSeries(FS, x), DemodConfig(reference_phase=np.pi / 2)).values
    assert abs(q[-5000:].mean()) < 1e-3


@settings(max_examples=20, deadline=None)
@given(cuts=st.lists(st.integers(1, 4999), min_size=1, max_size=6, unique=True))
def test_streaming_matches_single_shot(cuts):
    rng = np.random.default_rng(1)
    x = rng.normal(size=5000)
    whole = LockIn(DemodConfig(), FS).process(x)
    lock = LockIn(DemodConfig(), FS)
    parts = [lock.process(c) for c in np.split(x, sorted(cuts))]
    np.testing.assert_allclose(np.concatenate(parts), whole, rtol=0, atol=1e-14)


def test_white_noise_output_density():
    # in-phase output of white input with one-sided density s is sqrt(2) s |H(f)|
    sigma = 1.0
    rng = np.random.default_rng(7)
    x = rng.normal(0.0, sigma, int(4 * FS))
    y = demodulate(TimeSeries(FS, x), DemodConfig()).values
    f, p = welch(y, fs=FS, nperseg=2 ** 16)
    s_in = sigma * np.sqrt(2 / FS)
    sel = (f > 20) & (f < 300)
    ratio = np.sqrt(p[sel]) / (np.sqrt(2) * s_in * filter_response(f[sel], DemodConfig(), FS))
    assert np.median(ratio) == pytest.approx(1.0, rel=0.1)


def test_synth_fm_response():
    fm = FMConfig()
    ts = synth_fm_response(line_model(), fm, 1e-3, FS)
    assert ts.values.size == 1000
    assert ts.values.min() >= 1 - 0.016 - 1e-12
    with pytest.raises(ValueError):
        synth_fm_response(line_model(), fm, 1e-3, 1e4)
    a = synth_fm_response(line_model(), fm, 1e-3, FS, noise_lsd=1e-3, seed=3)
    b = synth_fm_response(line_model(), fm, 1e-3, FS, noise_lsd=1e-3, seed=3)
    np.testing.assert_array_equal(a.values, b.values)


def test_zero_crossing_at_line_center():
    fit = alpha_of(0.016, 700e3, 330e3)
    assert abs(fit.f_res - 17e6) < 7e3
    assert fit.alpha != 0


def test_alpha_scales_with_depth_and_width():
    base = alpha_of(0.016, 700e3, 330e3).alpha
    assert alpha_of(0.032, 700e3, 330e3).alpha / base == pytest.approx(2.0, rel=0.02)
    assert alpha_of(0.016, 1400e3, 660e3).alpha / base == pytest.approx(0.5, rel=0.05)


def test_dispersive_curve_is_odd():
    fm = FMConfig()
    c = 17e6 + np.linspace(-2e6, 2e6, 41)
    curve = dispersive_scan(line_model(), fm, DemodConfig(), c, rate=FS)
    np.testing.assert_allclose(curve.values, -curve.values[::-1], atol=1e-9)


def test_zero_crossing_errors():
    s = Spectrum(np.arange(10.0), np.ones(10))
    with pytest.raises(NoCrossingError):
        fit_zero_crossing(s, 2.0)
    s = Spectrum(np.arange(10.0), np.arange(10.0) - 4.5)
    with pytest.raises(ValueError):
        fit_zero_crossing(s, 5.0, fwhm=8.0)
    assert fit_zero_crossing(s, 2.0).f_res == pytest.approx(4.5)
