"""Six-level rate model of the NV- optical pumping cycle and singlet IR probe absorption.

Levels, in state-vector order::

    0 g0       3A2, m_s = 0
    1 g1       3A2, m_s = +/-1 (lumped)
    2 e0       3E,  m_s = 0
    3 e1       3E,  m_s = +/-1 (lumped)
    4 s_upper  1A1
    5 s_meta   1E (metastable, absorbs the 1042 nm probe)

Vibrational relaxation inside 3E is taken as instantaneous, so the pump moves
population straight from g to e with spin conserved. The system is linear, so
transients are propagated with exact matrix exponentials on a fixed grid.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

LEVELS = ("g0", "g1", "e0", "e1", "s_upper", "s_meta")
G0, G1, E0, E1, SU, SM = range(6)


class DegenerateInputError(ValueError):
    """Raised when the rate system has no well-defined steady state."""


class StepSizeError(ValueError):
    pass


class UndefinedContrastError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class RateConfig:
    """Transition rates in 1/s.

    Defaults for the lifetimes follow the level scheme: 10 ns radiative decay,
    100 ps 1A1 -> 1E relaxation and 200 ns 1E lifetime. The ISC rates, the
    1E branching and the pump rate are fitted defaults that put the pulsed
    contrasts near 8 % (MW off) and 12 % (MW on).
    """

    pump_rate: float = 1.0e6
    k_radiative: float = 1.0e8
    k_isc0: float = 1.0e7
    k_isc1: float = 5.66e7
    k_singlet_relax: float = 1.0e10
    k_metastable: float = 5.0e6
    mw_mixing_rate: float = 0.0
    # fraction of 1E decay returning to m_s = 0; MW-on >= MW-off ordering needs >= 0.5
    meta_to_ms0: float = 0.5
    # converts pump power (W) to pump_rate
    pump_rate_per_watt: float = 5.0e6

    def __post_init__(self):
        for name in ("pump_rate", "k_radiative", "k_isc0", "k_isc1", "k_singlet_relax",
                     "k_metastable", "mw_mixing_rate", "pump_rate_per_watt"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"rate {name} must be finite and >= 0, got {v}")
        if not 0.0 <= self.meta_to_ms0 <= 1.0:
            raise ValueError("meta_to_ms0 must lie in [0, 1]")

    @classmethod
    def from_lifetimes(cls, **kw) -> "RateConfig":
        """Build from ``tau_*`` lifetimes (s) in place of the matching ``k_*`` rates."""
        out = {}
        for key, val in kw.items():
            if key.startswith("tau_"):
                rate_key = "k_" + key[4:]
                if rate_key in kw:
                    raise ValueError(f"give either {key} or {rate_key}, not both")
                out[rate_key] = 1.0 / val
            else:
                out[key] = val
        return cls(**out)

    @property
    def pump_power(self) -> float:
        if self.pump_rate_per_watt == 0:
            return 0.0
        return self.pump_rate / self.pump_rate_per_watt

    def with_pump_power(self, watts: float) -> "RateConfig":
        return replace(self, pump_rate=watts * self.pump_rate_per_watt)

    def named_rates(self) -> dict[str, float]:
        return {
            "pump_rate": self.pump_rate,
            "k_radiative": self.k_radiative,
            "k_isc0": self.k_isc0,
            "k_isc1": self.k_isc1,
            "k_singlet_relax": self.k_singlet_relax,
            "k_metastable": self.k_metastable,
            "mw_mixing_rate": self.mw_mixing_rate,
        }


@dataclass(frozen=True)
class LevelPopulations:
    g0: float
    g1: float
    e0: float
    e1: float
    s_upper: float
    s_meta: float

    @classmethod
    def from_array(cls, p) -> "LevelPopulations":
        return cls(*(float(x) for x in p))

    def to_array(self) -> np.ndarray:
        return np.array([self.g0, self.g1, self.e0, self.e1, self.s_upper, self.s_meta])


@dataclass(frozen=True)
class OpticalConfig:
    """Probe-absorption parameters.

    ``nv_areal_absorbance`` is the single-pass absorbance of the singlet line
    if every NV sat in 1E; it lumps density, cross-section and the 2.6 mm path.
    The background term models a pump-bleachable defect absorbing at the probe
    wavelength: transmission ``1 - depth`` unpumped, rising towards 1 as the
    pump saturates it.
    """

    nv_areal_absorbance: float = 3.0
    background_bleach_depth: float = 0.0
    background_bleach_sat_power: float = 0.5
    background_time_const: float = 1e-3

    def __post_init__(self):
        if self.nv_areal_absorbance < 0:
            raise ValueError("absorbance must be >= 0")
        if not 0.0 <= self.background_bleach_depth < 1.0:
            raise ValueError("background_bleach_depth must lie in [0, 1)")
        if self.background_bleach_sat_power <= 0 or self.background_time_const <= 0:
            raise ValueError("saturation power and time constant must be positive")


@dataclass(frozen=True)
class ContrastReport:
    c_no_mw: float
    c_mw: float
    spin_contrast: float
    effective_spin_contrast: float


@dataclass(frozen=True)
class SquareWave:
    frequency: float
    duty: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.frequency <= 0 or not 0.0 < self.duty <= 1.0:
            raise ValueError("square wave needs frequency > 0 and duty in (0, 1]")

    @property
    def period(self) -> float:
        return 1.0 / self.frequency


def rate_matrix(r: RateConfig, pump_scale: float = 1.0) -> np.ndarray:
    """Generator Q with dp/dt = Q p (columns are source levels)."""
    q = np.zeros((6, 6))

    def flow(src, dst, k):
        q[dst, src] += k
        q[src, src] -= k

    pump = r.pump_rate * pump_scale
    flow(G0, E0, pump)
    flow(G1, E1, pump)
    flow(E0, G0, r.k_radiative)
    flow(E1, G1, r.k_radiative)
    flow(E0, SU, r.k_isc0)
    flow(E1, SU, r.k_isc1)
    flow(SU, SM, r.k_singlet_relax)
    flow(SM, G0, r.k_metastable * r.meta_to_ms0)
    flow(SM, G1, r.k_metastable * (1.0 - r.meta_to_ms0))
    flow(G0, G1, r.mw_mixing_rate)
    flow(G1, G0, r.mw_mixing_rate)
    return q


def _stationary(m: np.ndarray, what: str) -> np.ndarray:
    """Normalized null vector of ``m`` (a generator or ``P - I``)."""
    scale = np.abs(m).max()
    a = np.vstack([m / scale if scale > 0 else m, np.ones((1, 6))])
    rhs = np.zeros(7)
    rhs[-1] = 1.0
    p, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    if np.abs(a @ p - rhs).max() > 1e-9:
        raise DegenerateInputError(f"no consistent {what} steady state")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def steady_state(r: RateConfig) -> LevelPopulations:
    """Stationary populations under constant pumping.

    With the pump off and no MW the ground sublevels decouple; the minimum-norm
    solution (equal g0 and g1) is returned in that case.
    """
    if all(v == 0 for v in r.named_rates().values()):
        raise DegenerateInputError("all rates are zero; steady state undefined")
    return LevelPopulations.from_array(_stationary(rate_matrix(r), "continuous-pump"))


def periodic_steady_state(r: RateConfig, wave: SquareWave) -> LevelPopulations:
    """Populations at the pump-on edge once the pulsed cycle has become periodic."""
    t_on = wave.duty * wave.period
    q_on = rate_matrix(r, wave.amplitude)
    q_off = rate_matrix(r, 0.0)
    cycle = expm(q_off * (wave.period - t_on)) @ expm(q_on * t_on)
    return LevelPopulations.from_array(_stationary(cycle - np.eye(6), "periodic"))


def _check_step(r: RateConfig, wave: SquareWave | None, dt: float) -> None:
    rates = r.named_rates()
    if wave is not None:
        rates["pump_rate"] *= wave.amplitude
    name, k = max(rates.items(), key=lambda kv: kv[1])
    if k > 0 and dt > 0.1 / k:
        raise StepSizeError(
            f"dt={dt:.3g} s does not resolve {name}={k:.3g} 1/s (need dt <= {0.1 / k:.3g} s)"
        )


@dataclass(frozen=True)
class Transient:
    t: np.ndarray
    populations: np.ndarray  # shape (n, 6), columns in LEVELS order
    pump_on: np.ndarray
    transmission: np.ndarray | None = None

    def level(self, name: str) -> np.ndarray:
        return self.populations[:, LEVELS.index(name)]

    def delta_t_over_t(self) -> np.ndarray:
        """Pump-induced transmission change relative to the least-excited recorded point."""
        if self.transmission is None:
            raise ValueError("trace was computed without optics")
        ref = self.transmission[np.argmin(self.level("s_meta"))]
        return self.transmission / ref - 1.0


def transient(
    r: RateConfig,
    wave: SquareWave,
    duration: float,
    dt: float,
    *,
    initial: LevelPopulations | None = None,
    record_every: int = 1,
    optics: OpticalConfig | None = None,
) -> Transient:
    """Integrate the rate equations under a square-wave pump.

    The pump state is sampled at the start of each ``dt`` step. Every step is
    propagated exactly with ``expm(Q dt)``; ``record_every`` thins the output.
    With ``optics`` the slow background bleach is integrated alongside (as a
    first-order lag of the pump power) and a transmission column is produced.
    """
    if dt <= 0 or duration <= 0 or record_every < 1:
        raise ValueError("duration, dt and record_every must be positive")
    _check_step(r, wave, dt)
    n_steps = int(round(duration / dt))

    if initial is None:
        initial = steady_state(replace(r, pump_rate=0.0))
    tau_bg = optics.background_time_const if optics else 1.0
    p_on_watts = r.pump_power * wave.amplitude

    # augmented state [p(6), bleach drive b (W), 1]; db/dt = (P(t) - b)/tau
    def generator(on: bool) -> np.ndarray:
        q = np.zeros((8, 8))
        q[:6, :6] = rate_matrix(r, wave.amplitude if on else 0.0)
        q[6, 6] = -1.0 / tau_bg
        q[6, 7] = (p_on_watts if on else 0.0) / tau_bg
        return q

    gens = {True: generator(True), False: generator(False)}

    @lru_cache(maxsize=None)
    def prop(on: bool, n: int) -> np.ndarray:
        return expm(gens[on] * (n * dt))

    state = np.concatenate([initial.to_array(), [0.0, 1.0]])
    if optics is not None:
        # start the slow bleach at its duty-cycle average
        state[6] = p_on_watts * min(wave.duty, 1.0)

    records, rec_on = [], []
    for k0, k1, on in _pump_runs(wave, dt, n_steps):
        first = -(-k0 // record_every) * record_every
        pos = k0
        if first < k1:
            state = prop(on, first - pos) @ state if first > pos else state
            pos = first
            step = prop(on, record_every)
            while True:
                records.append(state.copy())
                rec_on.append(on)
                if pos + record_every >= k1:
                    break
                state = step @ state
                pos += record_every
        if k1 > pos:
            state = prop(on, k1 - pos) @ state
    if n_steps % record_every == 0:
        records.append(state.copy())
        rec_on.append(_pump_is_on(wave, n_steps * dt))

    arr = np.array(records)
    t = np.arange(len(arr)) * record_every * dt
    pops = arr[:, :6]
    trans = None
    if optics is not None:
        trans = ir_transmission_array(pops[:, SM], optics, arr[:, 6])
    return Transient(t=t, populations=pops, pump_on=np.array(rec_on), transmission=trans)


def _pump_is_on(wave: SquareWave, t: float) -> bool:
    if wave.duty >= 1.0:
        return True
    return (t * wave.frequency) % 1.0 < wave.duty


def _pump_runs(wave: SquareWave, dt: float, n_steps: int):
    """Yield (k_start, k_stop, on) runs of constant pump state over step indices."""
    if wave.duty >= 1.0 or wave.amplitude == 0:
        yield 0, n_steps, True
        return
    edges = []  # (first step index in new state, new state)
    m = 0
    while m * wave.period < n_steps * dt:
        edges.append((int(np.ceil(m * wave.period / dt - 1e-9)), True))
        edges.append((int(np.ceil((m + wave.duty) * wave.period / dt - 1e-9)), False))
        m += 1
    for (a, on), (b, _) in zip(edges, edges[1:] + [(n_steps, None)]):
        b = min(b, n_steps)
        if b > a:
            yield a, b, on


def background_transmission(optics: OpticalConfig, pump_power) -> np.ndarray | float:
    """Transmission of the bleachable defect background at a given (effective) pump power."""
    p = np.asarray(pump_power, dtype=float)
    sat = p / (p + optics.background_bleach_sat_power)
    out = 1.0 - optics.background_bleach_depth * (1.0 - sat)
    return float(out) if out.ndim == 0 else out


def ir_transmission_array(s_meta, optics: OpticalConfig, pump_power) -> np.ndarray:
    s_meta = np.asarray(s_meta, dtype=float)
    return np.exp(-optics.nv_areal_absorbance * s_meta) * background_transmission(optics, pump_power)


def ir_transmission(pop: LevelPopulations, o: OpticalConfig, pump_power: float) -> float:
    """Probe transmission: singlet Beer-Lambert loss times the defect background."""
    return float(ir_transmission_array(pop.s_meta, o, pump_power))


def pulsed_optical_contrast(
    r: RateConfig, o: OpticalConfig, wave: SquareWave | None = None, samples: int = 2000
) -> float:
    """Maximum |dT/T| over one period of the periodic pulsed-pump cycle.

    The background bleach responds far slower than the pulse period, so it is
    common to the pumped and unpumped parts of the cycle and drops out.
    """
    wave = wave or SquareWave(300e3, 0.3)
    start = periodic_steady_state(r, wave)
    t_on = wave.duty * wave.period
    q_on = rate_matrix(r, wave.amplitude)
    q_off = rate_matrix(r, 0.0)
    n_on = max(2, int(round(samples * wave.duty)))
    n_off = max(2, samples - n_on)
    p = start.to_array()
    s = [p[SM]]
    step_on = expm(q_on * (t_on / n_on))
    for _ in range(n_on):
        p = step_on @ p
        s.append(p[SM])
    step_off = expm(q_off * ((wave.period - t_on) / n_off))
    for _ in range(n_off):
        p = step_off @ p
        s.append(p[SM])
    s = np.array(s)
    trans = np.exp(-o.nv_areal_absorbance * s)
    return float(np.max(np.abs(trans / trans[0] - 1.0)))


# optical contrasts below this are round-off, e.g. with the pump switched off
CONTRAST_RESOLUTION = 1e-12


def spin_contrast(c_mw: float, c_no_mw: float) -> float:
    denom = c_mw + c_no_mw
    if abs(denom) < CONTRAST_RESOLUTION:
        raise UndefinedContrastError("c_mw + c_no_mw is zero to numerical precision; spin contrast undefined")
    return (c_mw - c_no_mw) / denom


def contrast_report(c_mw: float, c_no_mw: float) -> ContrastReport:
    """Contrast figures from the two optical contrasts.

    The effective spin contrast uses the MW-off optical contrast as its basis:
    0.08 * 0.20 = 0.016.
    """
    sc = spin_contrast(c_mw, c_no_mw)
    return ContrastReport(c_no_mw=c_no_mw, c_mw=c_mw, spin_contrast=sc,
                          effective_spin_contrast=c_no_mw * sc)


def contrasts(
    r_mw_on: RateConfig,
    r_mw_off: RateConfig,
    o: OpticalConfig,
    wave: SquareWave | None = None,
) -> ContrastReport:
    if replace(r_mw_on, mw_mixing_rate=0.0) != replace(r_mw_off, mw_mixing_rate=0.0):
        raise ValueError("MW-on and MW-off configs may differ only in mw_mixing_rate")
    c_mw = pulsed_optical_contrast(r_mw_on, o, wave)
    c_no_mw = pulsed_optical_contrast(r_mw_off, o, wave)
    return contrast_report(c_mw, c_no_mw)


def slowest_relaxation_rate(r: RateConfig) -> float:
    """Magnitude of the smallest nonzero eigenvalue of the generator (1/s)."""
    ev = np.linalg.eigvals(rate_matrix(r))
    mags = np.sort(np.abs(ev.real))
    nonzero = mags[mags > 1e-9 * mags.max()]
    return float(nonzero[0])
