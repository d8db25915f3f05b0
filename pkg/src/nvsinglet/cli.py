"""Command-line front end: one reproducible experiment per invocation.

    nvsinglet odmr --config fig3a --out out/
    nvsinglet sensitivity --config fig4 --seed 3

Exit codes: 0 success, 2 invalid config or input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import __version__, fitting, lockin, magnetometry, odmr, photophysics
from .config import ConfigError, ScenarioConfig, preset_names
from .io import read_csv, write_csv, write_json

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

NUMERICAL_ERRORS = (
    photophysics.DegenerateInputError,
    photophysics.UndefinedContrastError,
    lockin.NoCrossingError,
    fitting.PeakSearchError,
    magnetometry.CalibrationError,
    np.linalg.LinAlgError,
    FloatingPointError,
)


class NumericalFailure(RuntimeError):
    pass


class Run:
    """Resolved config plus output location shared by the subcommands."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.hash = cfg.sha256()
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def csv(self, name, columns, **extra):
        self.written.append(write_csv(self.out / name, columns, self.hash, extra))

    def json(self, name, payload):
        self.written.append(write_json(self.out / name, payload, self.hash))


# --- subcommands -------------------------------------------------------------------


def cmd_odmr(run: Run, args) -> None:
    cfg = run.cfg
    res = cfg.resonances()
    ls = cfg.lineshape
    failed = []
    for kind in cfg.mw.scans:
        spec = odmr.synth_cw_spectrum(res, cfg.mw_config(kind), ls.fwhm_hz, ls.depth_per_line,
                                      ls.axis_weights)
        run.csv(f"odmr_{kind}.csv", {"frequency_hz": spec.axis, "value": spec.values},
                scan=kind, quantity="odmr_contrast")
        n = cfg.fit.n_peaks_single if kind == "single" else cfg.fit.n_peaks_mixed
        fit = fitting.fit_lorentzians(spec, n, shared_fwhm=cfg.fit.shared_fwhm)
        run.json(f"odmr_{kind}_fit.json", {
            "scan": kind,
            "fit": fit.to_dict(),
            "axes": [{"axis": a.axis.label, "b_projection_t": a.b_projection,
                      "f_minus_hz": a.f_minus, "f_plus_hz": a.f_plus} for a in res.axes],
            "degenerate_groups": [list(g) for g in res.degenerate_groups],
        })
        if not fit.converged:
            failed.append(f"{kind}: {fit.message}")
    if failed:
        raise NumericalFailure("fit did not converge (" + "; ".join(failed) + ")")


def _trace_columns(tr: photophysics.Transient) -> dict:
    cols = {"t_s": tr.t}
    for i, name in enumerate(photophysics.LEVELS):
        cols[name] = tr.populations[:, i]
    cols["transmission"] = tr.transmission
    return cols


def cmd_transient(run: Run, args) -> None:
    cfg = run.cfg
    wave, optics = cfg.pulse(), cfg.optical_config()
    r_off, r_on = cfg.rate_config(False), cfg.rate_config(True)
    duration = cfg.transient.periods * wave.period
    for label, r in (("mw_off", r_off), ("mw_on", r_on)):
        start = photophysics.periodic_steady_state(r, wave)
        tr = photophysics.transient(r, wave, duration, cfg.transient.dt_s, initial=start,
                                    record_every=cfg.transient.record_every, optics=optics)
        cols = _trace_columns(tr)
        cols["delta_t_over_t"] = tr.delta_t_over_t()
        run.csv(f"transient_{label}.csv", cols, mw=label)

    c_mw = photophysics.pulsed_optical_contrast(r_on, optics, wave)
    c_no = photophysics.pulsed_optical_contrast(r_off, optics, wave)
    try:
        report = dataclasses.asdict(photophysics.contrast_report(c_mw, c_no))
    except photophysics.UndefinedContrastError:
        # no pump: both contrasts vanish and the ratio is undefined
        report = {"c_mw": c_mw, "c_no_mw": c_no, "spin_contrast": None,
                  "effective_spin_contrast": None}
    report.update({"pump_power_w": r_off.pump_power, "pulse_freq_hz": wave.frequency,
                   "duty": wave.duty, "rates": r_off.named_rates(),
                   "mw_on_mixing_rate": r_on.mw_mixing_rate})
    run.json("contrast.json", report)

    powers = np.asarray(cfg.transient.pump_sweep_w, dtype=float)
    if powers.size:
        c_off = [photophysics.pulsed_optical_contrast(r_off.with_pump_power(p), optics, wave) for p in powers]
        c_on = [photophysics.pulsed_optical_contrast(r_on.with_pump_power(p), optics, wave) for p in powers]
        run.csv("pump_sweep.csv", {"pump_power_w": powers, "c_no_mw": c_off, "c_mw": c_on})


def cmd_sensitivity(run: Run, args) -> None:
    cfg = run.cfg
    sc = cfg.sensitivity_scenario()
    reports = magnetometry.end_to_end_sensitivity(sc)
    summary = {}
    for label, rep in reports.items():
        cols = {"freq_hz": rep.freqs, "lsd_tesla_per_sqrthz": rep.lsd}
        if rep.smoothed is not None:
            cols["smoothed"] = rep.smoothed
        run.csv(f"lsd_{label}.csv", cols, scenario=label)
        s = rep.summary()
        s[f"lsd_at_{cfg.noise.mains_base_hz:g}hz"] = rep.value_at(cfg.noise.mains_base_hz)
        if cfg.noise.test_tone_hz:
            s["lsd_at_test_tone"] = rep.value_at(cfg.noise.test_tone_hz)
        summary[label] = s
    run.json("sensitivity_summary.json", {
        "scenarios": summary,
        "floors": {k: v.noise_floor for k, v in reports.items()},
        "band_hz": list(sc.band),
        "bandwidth_hz": sc.lia.lowpass_cutoff,
    })


def _read_timeseries(path) -> lockin.TimeSeries:
    cols = read_csv(path)
    if not {"t_s", "value"} <= cols.keys():
        raise ValueError(f"{path}: time series needs columns t_s,value")
    t = cols["t_s"]
    if t.size < 2:
        raise ValueError(f"{path}: need at least 2 samples")
    dt = np.diff(t)
    if np.any(dt <= 0) or np.ptp(dt) > 1e-6 * dt.mean():
        raise ValueError(f"{path}: t_s must be uniformly increasing")
    return lockin.TimeSeries(1.0 / dt.mean(), cols["value"], start_time=float(t[0]))


def cmd_demod(run: Run, args) -> None:
    cfg = run.cfg
    d = cfg.demod_config()
    if args.input:
        ts = _read_timeseries(args.input)
        out = lockin.demodulate(ts, d)
        run.csv("demod.csv", {"t_s": out.times, "value": out.values}, channel="in_phase")
        return

    fm = cfg.fm_config()
    model = cfg.spectrum_model("mixed")
    ts = lockin.synth_fm_response(model, fm, cfg.fm.duration_s, cfg.fm.sample_rate_hz,
                                  noise_lsd=cfg.noise.signal_lsd, seed=cfg.seed)
    run.csv("fm_response.csv", {"t_s": ts.times, "value": ts.values}, quantity="odmr_contrast")
    out = lockin.demodulate(ts, d)
    run.csv("demod.csv", {"t_s": out.times, "value": out.values}, channel="in_phase")

    half = 0.5 * cfg.fm.sweep_span_hz
    carriers = np.linspace(fm.carrier_center - half, fm.carrier_center + half, cfg.fm.sweep_points)
    curve = lockin.dispersive_scan(model, fm, d, carriers, rate=cfg.fm.sample_rate_hz)
    run.csv("dispersive.csv", {"frequency_hz": curve.axis, "value": curve.values},
            channel="in_phase")
    zc = lockin.fit_zero_crossing(curve, cfg.lia.zero_crossing_window_hz, near=fm.carrier_center,
                                  fwhm=cfg.lineshape.fwhm_hz)
    run.json("zero_crossing.json", {"alpha_per_hz": zc.alpha, "f_res_hz": zc.f_res,
                                    "linear_range_hz": zc.linear_range,
                                    "f_mod_hz": fm.f_mod, "f_dev_hz": fm.f_dev,
                                    "lowpass_cutoff_hz": d.lowpass_cutoff})


def cmd_fit(run: Run, args) -> None:
    cfg = run.cfg
    if args.input:
        cols = read_csv(args.input)
        if not {"frequency_hz", "value"} <= cols.keys():
            raise ValueError(f"{args.input}: spectrum needs columns frequency_hz,value")
        spec = odmr.Spectrum(cols["frequency_hz"], cols["value"])
    else:
        ls = cfg.lineshape
        spec = odmr.synth_cw_spectrum(cfg.resonances(), cfg.mw_config("single"), ls.fwhm_hz,
                                      ls.depth_per_line, ls.axis_weights)
    n = args.peaks or cfg.fit.n_peaks_single
    fit = fitting.fit_lorentzians(spec, n, shared_fwhm=cfg.fit.shared_fwhm)
    run.json("fit.json", {"n_peaks": n, "shared_fwhm": cfg.fit.shared_fwhm, **fit.to_dict()})
    run.csv("fit_residuals.csv", {"frequency_hz": spec.axis, "residual": fit.residuals})
    if not fit.converged:
        raise NumericalFailure(f"fit did not converge: {fit.message}")


def cmd_shotnoise(run: Run, args) -> None:
    cfg = run.cfg
    sn = cfg.shotnoise
    if sn.photon_rate is not None:
        rate = sn.photon_rate
    else:
        rate = magnetometry.photon_rate_from_power(sn.probe_power_w, sn.wavelength_m, cfg.constants())
    eta = magnetometry.shot_noise_sensitivity(rate, sn.effective_contrast, sn.fwhm_hz,
                                              cfg.geometry(), cfg.constants(), cap=sn.cap_t)
    run.json("shotnoise.json", {
        "sensitivity_t_per_sqrthz": eta,
        "inputs": {"photon_rate_per_s": rate, "probe_power_w": sn.probe_power_w,
                   "wavelength_m": sn.wavelength_m, "effective_contrast": sn.effective_contrast,
                   "fwhm_hz": sn.fwhm_hz, "theta_deg": cfg.spin.theta_deg,
                   "g_factor": cfg.spin.g_factor, "cap_t": sn.cap_t},
    })


COMMANDS = {
    "odmr": (cmd_odmr, "synthesize single-generator and mixed-drive ODMR spectra and fit them"),
    "transient": (cmd_transient, "pulsed-pump transients, contrast report and pump-power sweep"),
    "sensitivity": (cmd_sensitivity, "end-to-end noise spectra for the three readout scenarios"),
    "demod": (cmd_demod, "lock-in demodulation of a time series, or the synthetic dispersive curve"),
    "fit": (cmd_fit, "multi-Lorentzian fit of a spectrum CSV"),
    "shotnoise": (cmd_shotnoise, "photon-shot-noise-limited sensitivity"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nvsinglet", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"nvsinglet {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", default=None,
                        help=f"JSON config path or preset name ({', '.join(preset_names())}); "
                             "defaults are used when omitted")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", default=None, help="output directory (overrides output_dir)")
        if name in ("demod", "fit"):
            sp.add_argument("--input", default=None, help="input CSV")
        if name == "fit":
            sp.add_argument("--peaks", type=int, default=None, help="number of Lorentzians")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["output_dir"] = args.out
        cfg = dataclasses.replace(cfg, **overrides)
        run = Run(cfg)
        func(run, args)
    except ConfigError as e:
        print(f"nvsinglet: config error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except NUMERICAL_ERRORS as e:
        print(f"nvsinglet: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NumericalFailure as e:
        for path in run.written:
            print(path)
        print(f"nvsinglet: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError) as e:
        print(f"nvsinglet: invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    for path in run.written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
