"""Field conversion, noise synthesis and linear-spectral-density sensitivity analysis.

LSD normalization (rectangular window, N samples at rate fs)::

    LSD_k = sqrt(2 |X_k|^2 / (fs N))   interior bins
    LSD_k = sqrt(|X_k|^2 / (fs N))     DC and Nyquist

Segment spectra are averaged in power before the square root, so that the sum
of LSD^2 times the bin width equals the mean square of the record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import median_filter
from scipy.signal import welch

from .lockin import (DemodConfig, FMConfig, LockIn, TimeSeries, calibrate_phase,
                     dispersive_scan, filter_response, fit_zero_crossing)
from .spin import PhysicalConstants

PROBE_WAVELENGTH = 1042e-9
SPEED_OF_LIGHT = 299792458.0


class CalibrationError(ValueError):
    pass


class RecordTooShortError(ValueError):
    pass


@dataclass(frozen=True)
class MagnetometerGeometry:
    theta: float = np.deg2rad(35.3)

    def __post_init__(self):
        if not np.cos(self.theta) > 0:
            raise ValueError("cos(theta) must be positive")


def field_from_lia(s_lia, alpha: float, g: MagnetometerGeometry | None = None,
                   c: PhysicalConstants | None = None):
    """Field change (T) from lock-in output and zero-crossing slope ``alpha`` (signal/Hz)."""
    if alpha == 0:
        raise CalibrationError("zero-crossing slope is zero; magnetometer is uncalibrated")
    g = g or MagnetometerGeometry()
    c = c or PhysicalConstants()
    return np.asarray(s_lia) * c.planck_h / (c.electron_g * c.bohr_magneton * alpha * np.cos(g.theta))


@dataclass(frozen=True)
class NoiseModel:
    """Noise sources as field-equivalent densities (T/sqrt(Hz)) plus mains pickup.

    ``technical_floor`` covers laser and other non-magnetic noise, ``shot_floor``
    the photon shot noise and ``electronic_floor`` the detector chain with the
    light blocked. ``mains`` lists (frequency Hz, amplitude T) tones.
    """

    technical_floor: float = 0.0
    shot_floor: float = 0.0
    electronic_floor: float = 0.0
    mains: tuple[tuple[float, float], ...] = ()
    seed: int = 0

    def __post_init__(self):
        if min(self.technical_floor, self.shot_floor, self.electronic_floor) < 0:
            raise ValueError("noise floors must be >= 0")
        if any(a < 0 or f <= 0 for f, a in self.mains):
            raise ValueError("mains tones need f > 0 and amplitude >= 0")

    @property
    def light_floor(self) -> float:
        """White floor with the probe on: quadrature sum of all sources."""
        return float(np.sqrt(self.technical_floor ** 2 + self.shot_floor ** 2 + self.electronic_floor ** 2))

    @staticmethod
    def technical_for(total_floor: float, shot_floor: float, electronic_floor: float) -> float:
        """Technical floor that makes the light-on white floor equal ``total_floor``."""
        rest = total_floor ** 2 - shot_floor ** 2 - electronic_floor ** 2
        if rest < 0:
            raise ValueError("shot + electronic noise already exceed the requested total")
        return float(np.sqrt(rest))


def mains_harmonics(fundamental_amp: float, base: float = 50.0, max_freq: float = 450.0,
                    rolloff: float = 1.0) -> tuple[tuple[float, float], ...]:
    """Mains tones at n*base up to ``max_freq`` with amplitude fundamental_amp / n**rolloff."""
    n = np.arange(1, int(max_freq // base) + 1)
    return tuple((float(k * base), float(fundamental_amp / k ** rolloff)) for k in n)


def synth_noise(n: NoiseModel, duration: float, rate: float, light: bool = True) -> TimeSeries:
    """Field-equivalent noise record in tesla."""
    if n.mains and rate <= 2 * max(f for f, _ in n.mains):
        raise ValueError("sample rate must exceed twice the highest mains frequency")
    size = int(round(duration * rate))
    t = np.arange(size) / rate
    floor = n.light_floor if light else n.electronic_floor
    values = np.zeros(size)
    if floor > 0:
        rng = np.random.default_rng(n.seed)
        values += rng.normal(0.0, floor * np.sqrt(rate / 2), size)
    for f, a in n.mains:
        values += a * np.sin(2 * np.pi * f * t)
    return TimeSeries(rate, values, unit="T")


@dataclass(frozen=True)
class LSDConfig:
    segment_length: float = 1.0
    n_segments: int = 60
    window: str = "rectangular"
    smoothing_window: int = 0

    def __post_init__(self):
        if self.segment_length <= 0 or self.n_segments < 1:
            raise ValueError("segment_length must be > 0 and n_segments >= 1")
        if self.window not in ("rectangular", "hann"):
            raise ValueError("window must be 'rectangular' or 'hann'")
        if self.smoothing_window < 0:
            raise ValueError("smoothing_window must be >= 0")


@dataclass
class SensitivityReport:
    freqs: np.ndarray
    lsd: np.ndarray
    noise_floor: float
    band: tuple[float, float]
    bandwidth: float
    smoothed: np.ndarray | None = None
    label: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def bin_width(self) -> float:
        return float(self.freqs[1] - self.freqs[0])

    def value_at(self, freq: float) -> float:
        return float(self.lsd[np.argmin(np.abs(self.freqs - freq))])

    def summary(self) -> dict:
        return {"label": self.label, "floor": self.noise_floor, "band": list(self.band),
                "bandwidth_hz": self.bandwidth, **self.metadata}


def lsd(ts: TimeSeries, cfg: LSDConfig | None = None, band=(1.0, 900.0),
        bandwidth: float | None = None) -> SensitivityReport:
    """Segment-averaged one-sided linear spectral density of ``ts``."""
    cfg = cfg or LSDConfig()
    nper = int(round(cfg.segment_length * ts.sample_rate))
    need = nper * cfg.n_segments
    if ts.values.size < need:
        raise RecordTooShortError(
            f"record has {ts.values.size} samples, need {need} for {cfg.n_segments} x {cfg.segment_length} s")
    x = ts.values[:need]
    window = "boxcar" if cfg.window == "rectangular" else "hann"
    f, psd = welch(x, fs=ts.sample_rate, window=window, nperseg=nper, noverlap=0,
                   detrend=False, scaling="density", average="mean")
    amp = np.sqrt(psd)
    smoothed = median_filter(amp, size=cfg.smoothing_window, mode="nearest") if cfg.smoothing_window > 1 else None
    band = (max(band[0], f[0]), min(band[1], f[-1]))
    report = SensitivityReport(f, amp, float("nan"), band,
                               bandwidth if bandwidth is not None else ts.sample_rate / 2, smoothed)
    report.noise_floor = noise_floor(report, band)
    return report


def noise_floor(report: SensitivityReport, band, exclude_mains: float | None = None) -> float:
    """Median LSD over ``band``; optionally drop bins within one bin of multiples of ``exclude_mains`` Hz."""
    lo, hi = band
    f = report.freqs
    sel = (f >= lo) & (f <= hi)
    if exclude_mains:
        harmonic = np.abs(f - exclude_mains * np.round(f / exclude_mains))
        sel &= (harmonic > report.bin_width) | (f < exclude_mains / 2)
    if not np.any(sel):
        raise ValueError(f"band {band} contains no frequency bins")
    return float(np.median(report.lsd[sel]))


LORENTZIAN_PREFACTOR = 4 / (3 * np.sqrt(3))


def photon_rate_from_power(power: float, wavelength: float = PROBE_WAVELENGTH,
                           c: PhysicalConstants | None = None) -> float:
    c = c or PhysicalConstants()
    return power * wavelength / (c.planck_h * SPEED_OF_LIGHT)


def shot_noise_sensitivity(photon_rate: float, effective_contrast: float, fwhm: float,
                           g: MagnetometerGeometry | None = None, c: PhysicalConstants | None = None,
                           cap: float = 1e-6) -> float:
    """Photon-shot-noise-limited sensitivity (T/sqrt(Hz)) of CW ODMR with a Lorentzian line.

    eta = 4/(3 sqrt 3) * h/(g mu_B cos theta) * fwhm / (C sqrt(R)); the prefactor
    is the maximum-slope point of a Lorentzian. Raises if eta exceeds ``cap``.
    """
    if photon_rate <= 0 or effective_contrast <= 0 or fwhm <= 0:
        raise ValueError("photon_rate, effective_contrast and fwhm must be positive")
    g = g or MagnetometerGeometry()
    c = c or PhysicalConstants()
    eta = (LORENTZIAN_PREFACTOR * fwhm / (c.gyromagnetic_ratio * np.cos(g.theta))
           / (effective_contrast * np.sqrt(photon_rate)))
    if eta > cap:
        raise ValueError(f"shot-noise sensitivity {eta:.3g} T/sqrt(Hz) exceeds cap {cap:.3g}")
    return float(eta)


# --- end-to-end pipeline ---------------------------------------------------------


@dataclass
class SensitivityScenario:
    """Everything the three-scenario sensitivity run needs.

    ``spectrum_model`` maps the swept MW coordinate to ODMR contrast; the probe
    voltage is ``probe_voltage * (1 - contrast)``.
    """

    spectrum_model: object
    fwhm: float
    fm: FMConfig
    lia: DemodConfig
    noise: NoiseModel
    lsd: LSDConfig = field(default_factory=LSDConfig)
    geometry: MagnetometerGeometry = field(default_factory=MagnetometerGeometry)
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    sample_rate: float = 100e3
    output_rate: float = 10e3
    probe_voltage: float = 1.0
    insensitive_detuning: float = 40e6
    band: tuple[float, float] = (1.0, 900.0)
    warmup: float = 0.05
    test_tone: tuple[float, float] | None = None
    chunk: float = 1.0
    correct_response: bool = True


def calibrate_slope(sc: SensitivityScenario) -> tuple[float, float, float]:
    """(alpha, f_res, reference_phase) from a noiseless dispersive scan around the carrier."""
    model = _voltage_model(sc)
    guess = sc.fm.carrier_center
    carriers = guess + np.linspace(-sc.fwhm, sc.fwhm, 201)
    scan = dispersive_scan(model, sc.fm, sc.lia, carriers, rate=sc.sample_rate)
    first = fit_zero_crossing(scan, sc.fwhm / 8, near=guess, fwhm=sc.fwhm)
    phase = calibrate_phase(model, sc.fm, sc.lia, first.f_res, sc.fwhm / 20, rate=sc.sample_rate)
    lia = DemodConfig(sc.lia.reference_freq, phase, sc.lia.lowpass_cutoff, sc.lia.lowpass_order)
    fine = first.f_res + np.linspace(-sc.fwhm / 8, sc.fwhm / 8, 41)
    fit = fit_zero_crossing(dispersive_scan(model, sc.fm, lia, fine, rate=sc.sample_rate),
                            sc.fwhm / 8, near=first.f_res, fwhm=sc.fwhm)
    return fit.alpha, fit.f_res, phase


def _voltage_model(sc: SensitivityScenario):
    return lambda x: sc.probe_voltage * (1.0 - sc.spectrum_model(x))


def _input_lsd(field_floor: float, alpha: float, sc: SensitivityScenario) -> float:
    # in-phase output density is sqrt(2) x the input density at f_ref
    gamma = sc.constants.gyromagnetic_ratio * np.cos(sc.geometry.theta)
    return field_floor * abs(alpha) * gamma / np.sqrt(2)


def _run_scenario(sc: SensitivityScenario, lia: DemodConfig, alpha: float, carrier: float,
                  light: bool, magnetic: bool, seed: int, label: str) -> SensitivityReport:
    fs = sc.sample_rate
    q = int(round(fs / sc.output_rate))
    if q < 1 or abs(fs / q - sc.output_rate) > 1e-9 * fs:
        raise ValueError("output_rate must divide sample_rate")
    gamma = sc.constants.gyromagnetic_ratio * np.cos(sc.geometry.theta)
    n_floor = sc.noise.light_floor if light else sc.noise.electronic_floor
    sigma = _input_lsd(n_floor, alpha, sc) * np.sqrt(fs / 2)
    tones = list(sc.noise.mains) if magnetic else []
    if magnetic and sc.test_tone is not None:
        tones.append(sc.test_tone)

    # tabulate the probe signal over the swept range; the field shifts are tiny
    span = sc.fm.f_dev + 10 * sc.fwhm
    grid = np.arange(carrier - span, carrier + span, sc.fwhm / 2000)
    table = _voltage_model(sc)(grid) if light else np.zeros_like(grid)

    rng = np.random.default_rng(seed)
    lock = LockIn(lia, fs)
    n_warm = int(round(sc.warmup * fs))
    n_keep = int(round(sc.lsd.segment_length * sc.lsd.n_segments * fs))
    n_chunk = int(round(sc.chunk * fs))
    n_chunk -= n_chunk % q
    out = []
    start = 0
    total = n_warm + n_keep
    total += (q - (total - n_warm) % q) % q
    while start < total:
        n = min(n_chunk, total - start)
        t = (start + np.arange(n)) / fs
        x = carrier + sc.fm.f_dev * np.sin(2 * np.pi * sc.fm.f_mod * t)
        for f, a in tones:
            x -= gamma * a * np.sin(2 * np.pi * f * t)
        v = np.interp(x, grid, table) + rng.normal(0.0, sigma, n)
        y = lock.process(v)
        out.append(y)
        start += n
    y = np.concatenate(out)[n_warm::q]
    b_field = field_from_lia(y, alpha, sc.geometry, sc.constants)
    ts = TimeSeries(fs / q, b_field, unit="T")
    report = lsd(ts, sc.lsd, sc.band, bandwidth=lia.lowpass_cutoff)
    if sc.correct_response:
        report.lsd = report.lsd / filter_response(report.freqs, lia, fs)
        if report.smoothed is not None:
            report.smoothed = median_filter(report.lsd, size=sc.lsd.smoothing_window, mode="nearest")
        report.noise_floor = noise_floor(report, report.band)
    report.label = label
    report.metadata.update({"carrier_hz": carrier, "alpha": alpha,
                            "response_corrected": sc.correct_response})
    return report


def end_to_end_sensitivity(sc: SensitivityScenario) -> dict[str, SensitivityReport]:
    """Magnetically sensitive, insensitive and no-light LSD reports.

    The zero-crossing slope is calibrated once on the noiseless dispersive
    curve and reused for all three scenarios, as on the real instrument.
    """
    alpha, f_res, phase = calibrate_slope(sc)
    lia = DemodConfig(sc.lia.reference_freq, phase, sc.lia.lowpass_cutoff, sc.lia.lowpass_order)
    seed = sc.noise.seed
    return {
        "sensitive": _run_scenario(sc, lia, alpha, f_res, True, True, seed, "sensitive"),
        "insensitive": _run_scenario(sc, lia, alpha, f_res + sc.insensitive_detuning, True, True,
                                     seed + 1, "insensitive"),
        "no_light": _run_scenario(sc, lia, alpha, f_res, False, True, seed + 2, "no_light"),
    }
