"""Scenario configuration: strict JSON schema shared by the CLI and the demos.

Units are carried in key suffixes (``_hz``, ``_s``, ``_t`` for tesla, ``_w``).
Unknown keys are rejected with their full dotted path.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from . import lockin, magnetometry, odmr, photophysics, spin


class ConfigError(ValueError):
    pass


@dataclass
class SpinSection:
    zfs_hz: float = 2.870e9
    hyperfine_hz: float = 2.16e6
    n_hyperfine: int = 3
    g_factor: float = 2.0028
    bias_field_tesla: float = 1e-3
    bias_direction_miller: list = field(default_factory=lambda: [1, 1, 0])
    theta_deg: float = 35.3


@dataclass
class RatesSection:
    pump_rate: float | None = None
    pump_power_w: float | None = None
    pump_rate_per_watt: float = 5.0e6
    k_radiative: float | None = None
    tau_radiative: float | None = None
    k_isc0: float | None = None
    tau_isc0: float | None = None
    k_isc1: float | None = None
    tau_isc1: float | None = None
    k_singlet_relax: float | None = None
    tau_singlet_relax: float | None = None
    k_metastable: float | None = None
    tau_metastable: float | None = None
    meta_to_ms0: float = 0.5
    mw_on_mixing_rate: float = 1.0e7


@dataclass
class OpticsSection:
    nv_areal_absorbance: float = 3.0
    background_bleach_depth: float = 0.0
    background_bleach_sat_power_w: float = 0.5
    background_time_const_s: float = 1e-3


@dataclass
class TransientSection:
    pulse_freq_hz: float = 300e3
    duty: float = 0.3
    periods: int = 2
    dt_s: float = 1e-11
    record_every: int = 100
    pump_sweep_w: list = field(default_factory=lambda: [0.025, 0.05, 0.1, 0.15, 0.2])


@dataclass
class MWSection:
    f_sg1_hz: float = 2.870e9
    f_sg2_tones_hz: list = field(default_factory=lambda: [14.84e6, 17.0e6, 19.16e6])
    scans: list = field(default_factory=lambda: ["single", "mixed"])
    single_scan_hz: list = field(default_factory=lambda: [2.84e9, 2.90e9])
    single_points: int = 3001
    mixed_scan_hz: list = field(default_factory=lambda: [10e6, 24e6])
    mixed_points: int = 1401


@dataclass
class LineshapeSection:
    fwhm_hz: float = 700e3
    depth_per_line: float = 0.016
    axis_weights: list = field(default_factory=lambda: [1.0, 1.0, 1.0, 1.0])


@dataclass
class FMSection:
    f_mod_hz: float = 5.6e3
    f_dev_hz: float = 330e3
    carrier_center_hz: float = 17.0e6
    sample_rate_hz: float = 1e6
    sweep_span_hz: float = 14e6
    sweep_points: int = 701
    duration_s: float = 5e-3


@dataclass
class LIASection:
    reference_phase_rad: float = 0.0
    lowpass_cutoff_hz: float = 1e3
    lowpass_order: int = 4
    output_rate_hz: float = 10e3
    zero_crossing_window_hz: float = 87.5e3


@dataclass
class NoiseSection:
    technical_floor_t: float = 0.0
    shot_floor_t: float = 0.0
    electronic_floor_t: float = 0.0
    mains_fundamental_t: float = 0.0
    mains_base_hz: float = 50.0
    mains_max_hz: float = 450.0
    mains_rolloff: float = 1.0
    test_tone_hz: float | None = None
    test_tone_t: float = 0.0
    insensitive_detuning_hz: float = 40e6
    sample_rate_hz: float = 100e3
    signal_lsd: float = 0.0


@dataclass
class LSDSection:
    segment_length_s: float = 1.0
    n_segments: int = 60
    window: str = "rectangular"
    smoothing_window: int = 0
    band_hz: list = field(default_factory=lambda: [1.0, 900.0])


@dataclass
class FitSection:
    n_peaks_single: int = 6
    n_peaks_mixed: int = 5
    shared_fwhm: bool = False


@dataclass
class ShotNoiseSection:
    photon_rate: float | None = None
    probe_power_w: float | None = 0.01
    wavelength_m: float = 1042e-9
    effective_contrast: float = 0.016
    fwhm_hz: float = 700e3
    cap_t: float = 1e-6


SECTIONS = {
    "spin": SpinSection,
    "rates": RatesSection,
    "optics": OpticsSection,
    "transient": TransientSection,
    "mw": MWSection,
    "lineshape": LineshapeSection,
    "fm": FMSection,
    "lia": LIASection,
    "noise": NoiseSection,
    "lsd": LSDSection,
    "fit": FitSection,
    "shotnoise": ShotNoiseSection,
}


@dataclass
class ScenarioConfig:
    spin: SpinSection = field(default_factory=SpinSection)
    rates: RatesSection = field(default_factory=RatesSection)
    optics: OpticsSection = field(default_factory=OpticsSection)
    transient: TransientSection = field(default_factory=TransientSection)
    mw: MWSection = field(default_factory=MWSection)
    lineshape: LineshapeSection = field(default_factory=LineshapeSection)
    fm: FMSection = field(default_factory=FMSection)
    lia: LIASection = field(default_factory=LIASection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    lsd: LSDSection = field(default_factory=LSDSection)
    fit: FitSection = field(default_factory=FitSection)
    shotnoise: ShotNoiseSection = field(default_factory=ShotNoiseSection)
    seed: int = 0
    output_dir: str = "out"

    # --- (de)serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def sha256(self) -> str:
        """Hash of the physics content; the output location is not part of it."""
        d = self.to_dict()
        d.pop("output_dir")
        canonical = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise ConfigError("config root must be a JSON object")
        kw = {}
        for key, val in d.items():
            if key in SECTIONS:
                kw[key] = _section_from_dict(SECTIONS[key], val, key)
            elif key == "seed":
                kw[key] = _check_type(val, int, "seed")
            elif key == "output_dir":
                kw[key] = _check_type(val, str, "output_dir")
            else:
                raise ConfigError(f"unknown key '{key}'")
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON: {e}") from e
        return cls.from_dict(data)

    @classmethod
    def load(cls, path_or_preset: str) -> "ScenarioConfig":
        """Load a JSON file, or a shipped preset by name (``fig3a``, ``fig4``, ...)."""
        p = Path(path_or_preset)
        if p.suffix == ".json" and p.exists():
            return cls.from_json(p.read_text())
        name = p.stem if p.suffix == ".json" else path_or_preset
        if name in preset_names():
            return cls.from_json(resources.files("nvsinglet.presets").joinpath(f"{name}.json").read_text())
        raise ConfigError(f"no config file or preset named '{path_or_preset}'")

    def validate(self) -> None:
        r = self.rates
        if r.pump_rate is not None and r.pump_power_w is not None:
            raise ConfigError("rates.pump_rate and rates.pump_power_w are mutually exclusive")
        for name in ("radiative", "isc0", "isc1", "singlet_relax", "metastable"):
            k, tau = getattr(r, f"k_{name}"), getattr(r, f"tau_{name}")
            if k is not None and tau is not None:
                raise ConfigError(f"rates.k_{name} and rates.tau_{name} are mutually exclusive")
            if tau is not None and tau <= 0:
                raise ConfigError(f"rates.tau_{name} must be positive")
        if len(self.spin.bias_direction_miller) != 3:
            raise ConfigError("spin.bias_direction_miller must have 3 entries")
        if len(self.lineshape.axis_weights) != 4:
            raise ConfigError("lineshape.axis_weights must have 4 entries")
        for s in self.mw.scans:
            if s not in ("single", "mixed"):
                raise ConfigError(f"mw.scans entry '{s}' must be 'single' or 'mixed'")
        sn = self.shotnoise
        if (sn.photon_rate is None) == (sn.probe_power_w is None):
            raise ConfigError("set exactly one of shotnoise.photon_rate and shotnoise.probe_power_w")
        # constructing the model objects runs their own invariant checks
        try:
            self.spin_params()
            self.rate_config()
            self.optical_config()
            self.mw_config("single")
            self.fm_config()
            self.demod_config()
            self.noise_model()
            self.lsd_config()
            self.geometry()
        except (ValueError, TypeError) as e:
            raise ConfigError(str(e)) from e

    # --- builders ----------------------------------------------------------------

    def constants(self) -> spin.PhysicalConstants:
        return spin.PhysicalConstants(electron_g=self.spin.g_factor)

    def spin_params(self) -> spin.SpinParams:
        return spin.SpinParams(self.spin.zfs_hz, self.spin.hyperfine_hz, self.spin.n_hyperfine)

    def bias_field(self) -> spin.MagneticFieldVec:
        return spin.MagneticFieldVec.along(self.spin.bias_direction_miller, self.spin.bias_field_tesla)

    def resonances(self) -> spin.ResonanceSet:
        return spin.all_resonances(self.bias_field(), self.spin_params(), self.constants())

    def geometry(self) -> magnetometry.MagnetometerGeometry:
        return magnetometry.MagnetometerGeometry(np.deg2rad(self.spin.theta_deg))

    def rate_config(self, mw_on: bool = False) -> photophysics.RateConfig:
        r = self.rates
        kw = {"meta_to_ms0": r.meta_to_ms0, "pump_rate_per_watt": r.pump_rate_per_watt,
              "mw_mixing_rate": r.mw_on_mixing_rate if mw_on else 0.0}
        if r.pump_rate is not None:
            kw["pump_rate"] = r.pump_rate
        elif r.pump_power_w is not None:
            kw["pump_rate"] = r.pump_power_w * r.pump_rate_per_watt
        for name in ("radiative", "isc0", "isc1", "singlet_relax", "metastable"):
            k, tau = getattr(r, f"k_{name}"), getattr(r, f"tau_{name}")
            if k is not None:
                kw[f"k_{name}"] = k
            elif tau is not None:
                kw[f"tau_{name}"] = tau
        return photophysics.RateConfig.from_lifetimes(**kw)

    def optical_config(self) -> photophysics.OpticalConfig:
        o = self.optics
        return photophysics.OpticalConfig(o.nv_areal_absorbance, o.background_bleach_depth,
                                          o.background_bleach_sat_power_w, o.background_time_const_s)

    def pulse(self) -> photophysics.SquareWave:
        return photophysics.SquareWave(self.transient.pulse_freq_hz, self.transient.duty)

    def mw_config(self, kind: str) -> odmr.MWConfig:
        m = self.mw
        if kind == "single":
            return odmr.MWConfig(m.f_sg1_hz, tuple(m.f_sg2_tones_hz), False,
                                 m.single_scan_hz[0], m.single_scan_hz[1], m.single_points, "sg1")
        return odmr.MWConfig(m.f_sg1_hz, tuple(m.f_sg2_tones_hz), True,
                             m.mixed_scan_hz[0], m.mixed_scan_hz[1], m.mixed_points, "sg2")

    def spectrum_model(self, kind: str = "mixed"):
        ls = self.lineshape
        return odmr.cw_model(self.resonances(), self.mw_config(kind), ls.fwhm_hz,
                             ls.depth_per_line, ls.axis_weights)

    def fm_config(self) -> lockin.FMConfig:
        return lockin.FMConfig(self.fm.f_mod_hz, self.fm.f_dev_hz, self.fm.carrier_center_hz)

    def demod_config(self) -> lockin.DemodConfig:
        return lockin.DemodConfig(self.fm.f_mod_hz, self.lia.reference_phase_rad,
                                  self.lia.lowpass_cutoff_hz, self.lia.lowpass_order)

    def noise_model(self) -> magnetometry.NoiseModel:
        n = self.noise
        mains = ()
        if n.mains_fundamental_t > 0:
            mains = magnetometry.mains_harmonics(n.mains_fundamental_t, n.mains_base_hz,
                                                 n.mains_max_hz, n.mains_rolloff)
        return magnetometry.NoiseModel(n.technical_floor_t, n.shot_floor_t, n.electronic_floor_t,
                                       mains, self.seed)

    def lsd_config(self) -> magnetometry.LSDConfig:
        s = self.lsd
        return magnetometry.LSDConfig(s.segment_length_s, s.n_segments, s.window, s.smoothing_window)

    def sensitivity_scenario(self) -> magnetometry.SensitivityScenario:
        n = self.noise
        tone = (n.test_tone_hz, n.test_tone_t) if n.test_tone_hz else None
        return magnetometry.SensitivityScenario(
            spectrum_model=self.spectrum_model("mixed"),
            fwhm=self.lineshape.fwhm_hz,
            fm=self.fm_config(),
            lia=self.demod_config(),
            noise=self.noise_model(),
            lsd=self.lsd_config(),
            geometry=self.geometry(),
            constants=self.constants(),
            sample_rate=n.sample_rate_hz,
            output_rate=self.lia.output_rate_hz,
            insensitive_detuning=n.insensitive_detuning_hz,
            band=tuple(self.lsd.band_hz),
            test_tone=tone,
        )


def _check_type(val, typ, path):
    if typ is float:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"'{path}' must be a number, got {val!r}")
        return float(val)
    if typ is int:
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"'{path}' must be an integer, got {val!r}")
        return val
    if typ is bool:
        if not isinstance(val, bool):
            raise ConfigError(f"'{path}' must be true or false, got {val!r}")
        return val
    if typ is str:
        if not isinstance(val, str):
            raise ConfigError(f"'{path}' must be a string, got {val!r}")
        return val
    if typ is list:
        if not isinstance(val, list):
            raise ConfigError(f"'{path}' must be a list, got {val!r}")
        return val
    raise TypeError(typ)


_TYPES = {"float": float, "int": int, "bool": bool, "str": str, "list": list,
          "float | None": float}


def _section_from_dict(cls, d, path):
    if not isinstance(d, dict):
        raise ConfigError(f"'{path}' must be an object")
    known = {f.name: f for f in fields(cls)}
    kw = {}
    for key, val in d.items():
        if key not in known:
            raise ConfigError(f"unknown key '{path}.{key}'")
        tname = known[key].type
        if val is None and "None" in tname:
            kw[key] = None
            continue
        kw[key] = _check_type(val, _TYPES[tname], f"{path}.{key}")
    return cls(**kw)


def preset_names() -> list[str]:
    files = resources.files("nvsinglet.presets").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".json"))
