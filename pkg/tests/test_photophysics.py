import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvsinglet.photophysics import (
    LEVELS,
    SM,
    DegenerateInputError,
    OpticalConfig,
    RateConfig,
    SquareWave,
    StepSizeError,
    UndefinedContrastError,
    background_transmission,
    contrast_report,
    contrasts,
    periodic_steady_state,
    pulsed_optical_contrast,
    rate_matrix,
    slowest_relaxation_rate,
    spin_contrast,
    steady_state,
    transient,
)

WAVE = SquareWave(300e3, 0.3)


def test_contrast_arithmetic():
    rep = contrast_report(0.12, 0.08)
    assert math.isclose(rep.spin_contrast, 0.20, rel_tol=1e-14)
    assert math.isclose(rep.effective_spin_contrast, 0.016, rel_tol=1e-14)


def test_undefined_contrast():
    with pytest.raises(UndefinedContrastError):
        spin_contrast(0.0, 0.0)


def test_default_rates_reproduce_pulsed_contrasts():
    rep = contrasts(RateConfig(mw_mixing_rate=1e7), RateConfig(), OpticalConfig(), WAVE)
    assert rep.c_no_mw == pytest.approx(0.08, rel=0.02)
    assert rep.c_mw == pytest.approx(0.12, rel=0.02)
    assert rep.spin_contrast == pytest.approx(0.20, rel=0.02)
    assert rep.effective_spin_contrast == pytest.approx(0.016, rel=0.03)


def test_contrasts_rejects_mismatched_configs():
    with pytest.raises(ValueError):
        contrasts(RateConfig(mw_mixing_rate=1e7), RateConfig(k_isc0=2e7), OpticalConfig(), WAVE)


def test_generator_columns_conserve_probability():
    q = rate_matrix(RateConfig(mw_mixing_rate=3e6))
    np.testing.assert_allclose(q.sum(axis=0), 0.0, atol=1e-6)
    off = q - np.diag(np.diag(q))
    assert np.all(off >= 0)


def test_lifetimes_equivalent_to_rates():
    a = RateConfig.from_lifetimes(tau_radiative=10e-9, tau_metastable=200e-9, tau_singlet_relax=100e-12)
    assert a.k_radiative == pytest.approx(1e8)
    assert a.k_metastable == pytest.approx(5e6)
    with pytest.raises(ValueError):
        RateConfig.from_lifetimes(tau_metastable=200e-9, k_metastable=5e6)


def test_negative_rate_rejected():
    with pytest.raises(ValueError):
        RateConfig(k_isc0=-1.0)


def test_all_zero_rates_degenerate():
    zero = RateConfig(pump_rate=0, k_radiative=0, k_isc0=0, k_isc1=0, k_singlet_relax=0, k_metastable=0)
    with pytest.raises(DegenerateInputError):
        steady_state(zero)


def test_dark_steady_state_is_ground_manifold():
    p = steady_state(RateConfig(pump_rate=0.0)).to_array()
    assert p[:2].sum() == pytest.approx(1.0)
    np.testing.assert_allclose(p[2:], 0.0, atol=1e-12)


def test_step_size_check_names_rate():
    with pytest.raises(StepSizeError, match="k_singlet_relax"):
        transient(RateConfig(), WAVE, 1e-6, 1e-9)


def test_population_conserved_over_100us():
    tr = transient(RateConfig(mw_mixing_rate=1e7), WAVE, 100e-6, 1e-11, record_every=1000)
    assert tr.t[-1] == pytest.approx(100e-6)
    assert np.max(np.abs(tr.populations.sum(axis=1) - 1.0)) < 1e-6
    assert np.all(tr.populations > -1e-9)


def test_metastable_decay_time():
    r = RateConfig()
    # 1 us pump pulse, then a long dark interval
    wave = SquareWave(10e3, 0.01)
    tr = transient(r, wave, 6e-6, 1e-11, record_every=100)
    t_off = wave.duty * wave.period
    sel = (tr.t > t_off + 0.2e-6) & (tr.t < t_off + 4.5e-6)
    slope = np.polyfit(tr.t[sel], np.log(tr.level("s_meta")[sel]), 1)[0]
    assert -1 / slope == pytest.approx(1 / r.k_metastable, rel=0.01)


def test_steady_state_matches_long_transient():
    r = RateConfig(mw_mixing_rate=1e7)
    cw = SquareWave(300e3, 1.0)
    duration = 30 / slowest_relaxation_rate(r)
    tr = transient(r, cw, duration, 1e-11, record_every=10000)
    np.testing.assert_allclose(tr.populations[-1], steady_state(r).to_array(), atol=1e-6)


def test_periodic_steady_state_is_fixed_point():
    r = RateConfig(mw_mixing_rate=1e7)
    # period of 400000 steps so the last record lands exactly on the period
    wave = SquareWave(250e3, 0.3)
    start = periodic_steady_state(r, wave)
    tr = transient(r, wave, wave.period, 1e-11, initial=start, record_every=1000)
    np.testing.assert_allclose(tr.populations[-1], start.to_array(), atol=1e-9)


def test_zero_pump_trace_is_flat():
    r = RateConfig(pump_rate=0.0)
    tr = transient(r, WAVE, 2 * WAVE.period, 1e-11, record_every=500, optics=OpticalConfig())
    assert np.ptp(tr.populations, axis=0).max() < 1e-12
    assert np.ptp(tr.transmission) < 1e-12
    assert pulsed_optical_contrast(r, OpticalConfig(), WAVE) < 1e-12


def test_contrast_linear_in_pump_power():
    powers = np.array([0.025, 0.05, 0.1, 0.15, 0.2])
    c = np.array([pulsed_optical_contrast(RateConfig().with_pump_power(p), OpticalConfig(), WAVE)
                  for p in powers])
    # linear through the origin to within the onset of saturation at the top power
    slope = c[0] / powers[0]
    np.testing.assert_allclose(c, slope * powers, rtol=0.08)
    assert np.corrcoef(powers, c)[0, 1] > 0.999
    assert np.all(np.diff(c) > 0)


def test_transient_columns_and_transmission():
    tr = transient(RateConfig(), WAVE, WAVE.period, 1e-11, record_every=100, optics=OpticalConfig())
    assert tr.populations.shape[1] == len(LEVELS) == 6
    np.testing.assert_allclose(tr.transmission, np.exp(-3.0 * tr.populations[:, SM]), rtol=1e-12)
    dt = tr.delta_t_over_t()
    assert dt.min() < 0 and dt.max() == pytest.approx(0.0, abs=1e-15)


def test_background_bleach_saturates():
    o = OpticalConfig(background_bleach_depth=0.2, background_bleach_sat_power=0.5)
    assert background_transmission(o, 0.0) == pytest.approx(0.8)
    assert background_transmission(o, 0.5) == pytest.approx(0.9)
    assert background_transmission(o, 1e6) == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(k_isc0=st.floats(2e6, 4e7), ratio=st.floats(1.01, 10.0), frac=st.floats(0.5, 1.0),
       mw=st.floats(1e6, 1e8))
def test_isc_ordering_gives_positive_spin_contrast(k_isc0, ratio, frac, mw):
    base = RateConfig(k_isc0=k_isc0, k_isc1=k_isc0 * ratio, meta_to_ms0=frac)
    rep = contrasts(replace(base, mw_mixing_rate=mw), base, OpticalConfig(), WAVE)
    assert rep.c_mw > rep.c_no_mw > 0


@settings(max_examples=20, deadline=None)
@given(pump=st.floats(0.0, 1e7), mw=st.floats(0.0, 1e8))
def test_steady_state_is_distribution(pump, mw):
    p = steady_state(RateConfig(pump_rate=pump, mw_mixing_rate=mw)).to_array()
    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(p > -1e-12)
