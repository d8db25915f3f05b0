"""Frequency-modulated MW drive, probe-signal synthesis and digital lock-in detection.

The lock-in low-pass is a cascade of identical first-order exponential stages.
``lowpass_cutoff`` is the -3 dB frequency of the whole cascade, so each stage
has time constant ``tau = sqrt(2**(1/n) - 1) / (2 pi f_c)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .odmr import Spectrum


class NoCrossingError(ValueError):
    pass


@dataclass(frozen=True)
class FMConfig:
    f_mod: float = 5.6e3
    f_dev: float = 330e3
    carrier_center: float = 17.0e6

    def __post_init__(self):
        if self.f_mod <= 0 or self.f_dev <= 0:
            raise ValueError("f_mod and f_dev must be positive")


@dataclass(frozen=True)
class DemodConfig:
    reference_freq: float = 5.6e3
    reference_phase: float = 0.0
    lowpass_cutoff: float = 1e3
    lowpass_order: int = 4

    def __post_init__(self):
        if self.lowpass_order < 1:
            raise ValueError("lowpass_order must be >= 1")
        if not 0 < self.lowpass_cutoff < self.reference_freq:
            raise ValueError("lowpass_cutoff must be positive and below reference_freq")

    @property
    def time_constant(self) -> float:
        """Per-stage RC time constant (s)."""
        n = self.lowpass_order
        return np.sqrt(2.0 ** (1.0 / n) - 1.0) / (2 * np.pi * self.lowpass_cutoff)


@dataclass
class TimeSeries:
    sample_rate: float
    values: np.ndarray
    start_time: float = 0.0
    unit: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("time series contains non-finite values")

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.values.size) / self.sample_rate

    @property
    def duration(self) -> float:
        return self.values.size / self.sample_rate


def fm_frequency(t, fm: FMConfig):
    return fm.carrier_center + fm.f_dev * np.sin(2 * np.pi * fm.f_mod * np.asarray(t))


def synth_fm_response(spectrum_model, fm: FMConfig, duration: float, rate: float,
                      noise_lsd: float = 0.0, seed=None, unit: str = "") -> TimeSeries:
    """Probe signal while the MW frequency is swept sinusoidally.

    ``noise_lsd`` adds white noise with that one-sided density (signal units/sqrt(Hz)).
    """
    if rate <= 2 * fm.f_mod:
        raise ValueError(f"sample rate {rate} Hz must exceed 2*f_mod = {2 * fm.f_mod} Hz")
    t = np.arange(int(round(duration * rate))) / rate
    values = np.asarray(spectrum_model(fm_frequency(t, fm)), dtype=float)
    if noise_lsd > 0:
        rng = np.random.default_rng(seed)
        values = values + rng.normal(0.0, noise_lsd * np.sqrt(rate / 2), t.size)
    return TimeSeries(rate, values, unit=unit)


def _stage_coeff(d: DemodConfig, sample_rate: float) -> float:
    return 1.0 - np.exp(-1.0 / (sample_rate * d.time_constant))


def filter_response(f, d: DemodConfig, sample_rate: float) -> np.ndarray:
    """|H(f)| of the discrete cascaded low-pass as implemented."""
    a = _stage_coeff(d, sample_rate)
    z = np.exp(-2j * np.pi * np.asarray(f, dtype=float) / sample_rate)
    return np.abs(a / (1.0 - (1.0 - a) * z)) ** d.lowpass_order


class LockIn:
    """Streaming demodulator; keeps reference phase and filter memory across chunks."""

    def __init__(self, d: DemodConfig, sample_rate: float):
        if d.reference_freq >= sample_rate / 2:
            raise ValueError("reference frequency must be below Nyquist")
        self.config = d
        self.sample_rate = sample_rate
        self._a = _stage_coeff(d, sample_rate)
        self._n = 0
        self._zi = np.zeros((2, d.lowpass_order, 1))

    def _lowpass(self, x: np.ndarray, channel: int) -> np.ndarray:
        b, a = [self._a], [1.0, -(1.0 - self._a)]
        for k in range(self.config.lowpass_order):
            x, zf = lfilter(b, a, x, zi=self._zi[channel, k])
            self._zi[channel, k] = zf
        return x

    def process_iq(self, chunk) -> tuple[np.ndarray, np.ndarray]:
        chunk = np.asarray(chunk, dtype=float)
        n = self._n + np.arange(chunk.size)
        arg = 2 * np.pi * self.config.reference_freq * n / self.sample_rate + self.config.reference_phase
        self._n += chunk.size
        x = self._lowpass(2.0 * chunk * np.sin(arg), 0)
        y = self._lowpass(2.0 * chunk * np.cos(arg), 1)
        return x, y

    def process(self, chunk) -> np.ndarray:
        chunk = np.asarray(chunk, dtype=float)
        n = self._n + np.arange(chunk.size)
        arg = 2 * np.pi * self.config.reference_freq * n / self.sample_rate + self.config.reference_phase
        self._n += chunk.size
        return self._lowpass(2.0 * chunk * np.sin(arg), 0)


def demodulate(ts: TimeSeries, d: DemodConfig) -> TimeSeries:
    """In-phase lock-in output: low-pass of 2 x(t) sin(2 pi f_ref t + phase)."""
    out = LockIn(d, ts.sample_rate).process(ts.values)
    return TimeSeries(ts.sample_rate, out, ts.start_time, ts.unit)


def _steady_outputs(spectrum_model, fm: FMConfig, d: DemodConfig, carriers, rate: float):
    """Settled (X, Y) lock-in outputs for each carrier, averaged over whole modulation periods."""
    carriers = np.asarray(carriers, dtype=float)
    tau = d.time_constant
    n_settle = int(np.ceil(40 * tau * rate))
    period = rate / fm.f_mod
    # whole number of modulation periods closest to an integer sample count
    ks = np.arange(max(1, int(np.ceil(0.5e-3 * fm.f_mod))), 64)
    k = ks[np.argmin(np.abs(ks * period - np.round(ks * period)) / ks)]
    n_avg = int(round(k * period))
    n = n_settle + n_avg
    t = np.arange(n) / rate
    sweep = fm.f_dev * np.sin(2 * np.pi * fm.f_mod * t)
    arg = 2 * np.pi * d.reference_freq * t + d.reference_phase
    b, a = [_stage_coeff(d, rate)], [1.0, -(1.0 - _stage_coeff(d, rate))]
    xs, ys = [], []
    for chunk in np.array_split(carriers, max(1, carriers.size // 64)):
        sig = np.asarray(spectrum_model(chunk[:, None] + sweep[None, :]), dtype=float)
        out = []
        for ref in (np.sin(arg), np.cos(arg)):
            v = 2.0 * sig * ref
            for _ in range(d.lowpass_order):
                v = lfilter(b, a, v, axis=1)
            out.append(v[:, -n_avg:].mean(axis=1))
        xs.append(out[0])
        ys.append(out[1])
    return np.concatenate(xs), np.concatenate(ys)


def dispersive_scan(spectrum_model, fm: FMConfig, d: DemodConfig, carriers,
                    rate: float = 1e6) -> Spectrum:
    """Settled in-phase lock-in output versus carrier center frequency."""
    carriers = np.asarray(carriers, dtype=float)
    x, _ = _steady_outputs(spectrum_model, fm, d, carriers, rate)
    return Spectrum.sorted(carriers, x, {"f_mod_hz": fm.f_mod, "f_dev_hz": fm.f_dev,
                                         "reference_phase": d.reference_phase})


def calibrate_phase(spectrum_model, fm: FMConfig, d: DemodConfig, f_res: float,
                    delta: float, rate: float = 1e6) -> float:
    """Reference phase that puts the whole zero-crossing slope at ``f_res`` into the X channel.

    Emulates the manual phase adjustment on a lock-in amplifier.
    """
    x, y = _steady_outputs(spectrum_model, fm, d, [f_res - delta, f_res + delta], rate)
    dx, dy = x[1] - x[0], y[1] - y[0]
    return float(d.reference_phase + np.arctan2(dy, dx))


@dataclass(frozen=True)
class DispersiveFit:
    alpha: float
    f_res: float
    linear_range: float


def fit_zero_crossing(curve: Spectrum, window: float, near: float | None = None,
                      fwhm: float | None = None) -> DispersiveFit:
    """Least-squares line through the points within ``window`` of a zero crossing.

    Picks the crossing closest to ``near`` if given, otherwise the steepest one.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    if fwhm is not None and window >= fwhm / 2:
        raise ValueError(f"window {window} Hz must be below fwhm/2 = {fwhm / 2} Hz")
    f, v = curve.axis, curve.values
    idx = np.nonzero(np.signbit(v[:-1]) != np.signbit(v[1:]))[0]
    idx = idx[(v[idx] != 0) | (v[idx + 1] != 0)]
    if idx.size == 0:
        raise NoCrossingError("curve never changes sign")
    roots = f[idx] - v[idx] * (f[idx + 1] - f[idx]) / (v[idx + 1] - v[idx])
    if near is not None:
        k = int(np.argmin(np.abs(roots - near)))
    else:
        slopes = np.abs((v[idx + 1] - v[idx]) / (f[idx + 1] - f[idx]))
        k = int(np.argmax(slopes))
    f0 = roots[k]
    sel = np.abs(f - f0) <= window
    if sel.sum() < 2:
        raise NoCrossingError(f"fewer than 2 samples within {window} Hz of the crossing at {f0} Hz")
    slope, intercept = np.polyfit(f[sel] - f0, v[sel], 1)
    return DispersiveFit(alpha=float(slope), f_res=float(f0 - intercept / slope),
                         linear_range=float(window))
