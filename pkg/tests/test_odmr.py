import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import find_peaks

from nvsinglet.config import ScenarioConfig
from nvsinglet.odmr import (
    LineShape,
    MWConfig,
    Spectrum,
    coincidence_classes,
    cw_response,
    drive_tones,
    lorentzian,
    mw_tones,
    synth_cw_spectrum,
)
from nvsinglet.spin import MagneticFieldVec, SpinParams, all_resonances


def _n_peaks(spec, rel=0.1):
    idx, _ = find_peaks(spec.values, prominence=rel * spec.values.max())
    return idx


def test_fig3a_six_dips():
    cfg = ScenarioConfig.load("fig3a")
    res = cfg.resonances()
    m = cfg.mw_config("single")
    spec = synth_cw_spectrum(res, m, cfg.lineshape.fwhm_hz, cfg.lineshape.depth_per_line,
                             cfg.lineshape.axis_weights)
    idx = _n_peaks(spec)
    assert idx.size == 6
    assert coincidence_classes(spec.axis, res, m, cfg.lineshape.fwhm_hz, cfg.lineshape.axis_weights) == 6
    a, shift = 2.16e6, 17e6
    expect = np.sort([2.870e9 + s * shift + k * a for s in (-1, 1) for k in (-1, 0, 1)])
    step = spec.axis[1] - spec.axis[0]
    np.testing.assert_allclose(spec.axis[idx], expect, atol=step)


def test_all_axes_read_out_gives_extra_central_group():
    cfg = ScenarioConfig.load("fig3a")
    m = cfg.mw_config("single")
    spec = synth_cw_spectrum(cfg.resonances(), m, 700e3, 0.016)
    assert _n_peaks(spec).size == 9


def test_zero_bias_single_dip():
    res = all_resonances(MagneticFieldVec((0.0, 0.0, 0.0)), SpinParams(hyperfine_a=0.0))
    spec = synth_cw_spectrum(res, MWConfig(mixing_enabled=False), 700e3, 0.016)
    idx = _n_peaks(spec)
    assert idx.size == 1
    assert spec.axis[idx[0]] == pytest.approx(2.870e9, abs=spec.axis[1] - spec.axis[0])


def test_fig3b_mixed_comb():
    cfg = ScenarioConfig.load("fig3b")
    m = cfg.mw_config("mixed")
    spec = synth_cw_spectrum(cfg.resonances(), m, cfg.lineshape.fwhm_hz, cfg.lineshape.depth_per_line,
                             cfg.lineshape.axis_weights)
    idx = _n_peaks(spec)
    np.testing.assert_allclose(spec.axis[idx], 17e6 + 2.16e6 * np.arange(-2, 3), atol=30e3)
    # tone/line coincidences stack 2:4:6:4:2
    h = spec.values[idx]
    np.testing.assert_allclose(h / h[2], [1 / 3, 2 / 3, 1, 2 / 3, 1 / 3], atol=0.03)
    assert cfg.spectrum_model("mixed")(np.array([17e6]))[0] == pytest.approx(0.016, rel=1e-3)


def test_mixing_tones():
    m = MWConfig(f_sg1=2.87e9, f_sg2_tones=(1e6, 2e6))
    np.testing.assert_allclose(mw_tones(m), [2.868e9, 2.869e9, 2.871e9, 2.872e9])
    assert mw_tones(MWConfig(mixing_enabled=False)).tolist() == [2.87e9]
    t = drive_tones([17e6], MWConfig(scan_target="sg2"))
    np.testing.assert_allclose(np.sort(t[0]), np.sort(np.r_[2.87e9 - np.r_[14.84, 17, 19.16] * 1e6,
                                                           2.87e9 + np.r_[14.84, 17, 19.16] * 1e6]))


def test_mwconfig_validation():
    with pytest.raises(ValueError):
        MWConfig(f_sg2_tones=(1e6, 1e6))
    with pytest.raises(ValueError):
        MWConfig(scan_target="sg2", mixing_enabled=False)
    with pytest.raises(ValueError):
        MWConfig(scan_points=1)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        Spectrum([1.0, 1.0, 2.0], [0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        Spectrum([1.0, 2.0], [0.0, np.nan])
    s = Spectrum.sorted([3.0, 1.0, 2.0], [30.0, 10.0, 20.0])
    assert s.values.tolist() == [10.0, 20.0, 30.0]


def test_lorentzian_half_width():
    line = LineShape(0.0, 2.0, 0.5)
    assert lorentzian(0.0, line) == pytest.approx(0.5)
    assert lorentzian(1.0, line) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        LineShape(0.0, 0.0, 0.1)


@settings(max_examples=30, deadline=None)
@given(b=st.floats(0.0, 3e-3), depth=st.floats(1e-4, 0.05), fwhm=st.floats(100e3, 3e6))
def test_response_linear_in_depth_and_bounded(b, depth, fwhm):
    res = all_resonances(MagneticFieldVec.along((1, 1, 0), b))
    m = MWConfig(mixing_enabled=False, scan_points=401)
    x = m.scan_axis
    one = cw_response(x, res, m, fwhm, 1.0)
    v = cw_response(x, res, m, fwhm, depth)
    np.testing.assert_allclose(v, depth * one, rtol=1e-12)
    _, w = res.lines_with_weights()
    assert np.all(v >= 0) and v.max() <= depth * w.sum() * (1 + 1e-12)
