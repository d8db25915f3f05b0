"""Digital twin of a cavity-free NV-diamond magnetometer read out by singlet infrared absorption."""

__version__ = "0.1.0"

from .spin import (  # noqa: E402
    NV_AXES,
    MagneticFieldVec,
    PhysicalConstants,
    SpinParams,
    all_resonances,
)
from .photophysics import (  # noqa: E402
    OpticalConfig,
    RateConfig,
    SquareWave,
    contrast_report,
    contrasts,
    periodic_steady_state,
    steady_state,
    transient,
)
from .odmr import MWConfig, Spectrum, cw_model, synth_cw_spectrum  # noqa: E402
from .lockin import (  # noqa: E402
    DemodConfig,
    FMConfig,
    LockIn,
    TimeSeries,
    demodulate,
    dispersive_scan,
    fit_zero_crossing,
)
from .fitting import FitResult, auto_init, fit_lorentzians  # noqa: E402
from .magnetometry import (  # noqa: E402
    LSDConfig,
    NoiseModel,
    SensitivityScenario,
    end_to_end_sensitivity,
    lsd,
    shot_noise_sensitivity,
)
from .config import ConfigError, ScenarioConfig  # noqa: E402
