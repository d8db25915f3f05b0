"""CW absorption-ODMR spectra and the two-generator tone-mixing drive.

Spectra are returned as ODMR contrast (fractional drop of probe transmission),
so resonances appear as positive Lorentzian peaks. Overlapping (tone, line)
pairs add linearly, which is fine at the percent-level contrasts involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spin import ResonanceSet


@dataclass(frozen=True)
class MWConfig:
    f_sg1: float = 2.870e9
    f_sg2_tones: tuple[float, ...] = (14.84e6, 17.0e6, 19.16e6)
    mixing_enabled: bool = True
    scan_start: float = 2.84e9
    scan_stop: float = 2.90e9
    scan_points: int = 2001
    # "sg1": sweep the carrier itself; "sg2": sweep the center of the SG2 tone comb
    scan_target: str = "sg1"

    def __post_init__(self):
        tones = np.asarray(self.f_sg2_tones, dtype=float)
        if np.any(tones <= 0) or len(np.unique(tones)) != len(tones):
            raise ValueError("SG2 tones must be positive and distinct")
        if self.scan_points < 2:
            raise ValueError("scan needs at least 2 points")
        if self.scan_target not in ("sg1", "sg2"):
            raise ValueError("scan_target must be 'sg1' or 'sg2'")
        if self.scan_target == "sg2" and not self.mixing_enabled:
            raise ValueError("scanning SG2 requires mixing_enabled")

    @property
    def scan_axis(self) -> np.ndarray:
        return np.linspace(self.scan_start, self.scan_stop, self.scan_points)

    @property
    def tone_offsets(self) -> np.ndarray:
        """SG2 tones relative to the middle tone, which is the one being scanned."""
        tones = np.sort(np.asarray(self.f_sg2_tones, dtype=float))
        return tones - tones[len(tones) // 2]


@dataclass(frozen=True)
class LineShape:
    center: float
    fwhm: float
    depth: float

    def __post_init__(self):
        if self.fwhm <= 0:
            raise ValueError("fwhm must be positive")
        if not 0.0 <= self.depth < 1.0:
            raise ValueError("depth must lie in [0, 1)")


@dataclass
class Spectrum:
    axis: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.axis.shape != self.values.shape or self.axis.ndim != 1:
            raise ValueError("axis and values must be 1-D arrays of equal length")
        if np.any(np.diff(self.axis) <= 0):
            raise ValueError("spectrum axis must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectrum values must be finite")

    @classmethod
    def sorted(cls, axis, values, metadata=None) -> "Spectrum":
        order = np.argsort(axis)
        return cls(np.asarray(axis)[order], np.asarray(values)[order], metadata or {})


def mw_tones(m: MWConfig) -> np.ndarray:
    """Frequencies leaving the mixer: f_sg1 +/- each SG2 tone, or f_sg1 alone when bypassed."""
    if not m.mixing_enabled:
        return np.array([m.f_sg1])
    tones = np.asarray(m.f_sg2_tones, dtype=float)
    if tones.size == 0:
        raise ValueError("mixing enabled but no SG2 tones configured")
    return np.sort(np.concatenate([m.f_sg1 - tones, m.f_sg1 + tones]))


def lorentzian(f, line: LineShape):
    hw2 = (0.5 * line.fwhm) ** 2
    return line.depth * hw2 / ((np.asarray(f) - line.center) ** 2 + hw2)


def drive_tones(x, m: MWConfig) -> np.ndarray:
    """Tones applied to the sample at scan coordinate(s) ``x``; shape (len(x), n_tones)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))[:, None]
    if m.scan_target == "sg1":
        if not m.mixing_enabled:
            return x
        tones = np.asarray(m.f_sg2_tones, dtype=float)[None, :]
        return np.concatenate([x - tones, x + tones], axis=1)
    offs = m.tone_offsets[None, :]
    return np.concatenate([m.f_sg1 - (x + offs), m.f_sg1 + (x + offs)], axis=1)


def cw_response(x, resonances: ResonanceSet, m: MWConfig, fwhm: float,
                depth_per_line: float, axis_weights=None) -> np.ndarray:
    """ODMR contrast at scan coordinate(s) ``x``.

    Every driven tone contributes a Lorentzian of depth ``depth_per_line``
    (times the line's hyperfine/axis weight) for every resonance line.
    """
    if fwhm <= 0:
        raise ValueError("fwhm must be positive")
    centers, weights = resonances.lines_with_weights(axis_weights)
    keep = weights != 0
    centers, weights = centers[keep], weights[keep]
    tones = drive_tones(x, m)
    hw2 = (0.5 * fwhm) ** 2
    d = tones[:, :, None] - centers[None, None, :]
    out = (weights * hw2 / (d * d + hw2)).sum(axis=(1, 2))
    return depth_per_line * out


def cw_model(resonances: ResonanceSet, m: MWConfig, fwhm: float, depth_per_line: float,
             axis_weights=None):
    """Frequency -> contrast callable, for the FM and lock-in stages."""
    def model(x):
        x = np.asarray(x, dtype=float)
        return cw_response(x.ravel(), resonances, m, fwhm, depth_per_line, axis_weights).reshape(x.shape)
    return model


def synth_cw_spectrum(resonances: ResonanceSet, m: MWConfig, fwhm: float = 700e3,
                      depth_per_line: float = 0.016, axis_weights=None) -> Spectrum:
    axis = m.scan_axis
    values = cw_response(axis, resonances, m, fwhm, depth_per_line, axis_weights)
    meta = {
        "scan_target": m.scan_target,
        "mixing_enabled": m.mixing_enabled,
        "fwhm_hz": fwhm,
        "depth_per_line": depth_per_line,
    }
    return Spectrum(axis, values, meta)


def coincidence_classes(x_grid, resonances: ResonanceSet, m: MWConfig, fwhm: float,
                        axis_weights=None) -> int:
    """Count distinct scan positions where at least one tone hits a line exactly.

    Brute-force companion to the synthesized spectrum: positions closer than
    ``fwhm`` are merged into one class.
    """
    centers, weights = resonances.lines_with_weights(axis_weights)
    centers = centers[weights != 0]
    x_grid = np.asarray(x_grid, dtype=float)
    hits = []
    if m.scan_target == "sg1":
        base = np.array([0.0]) if not m.mixing_enabled else np.concatenate(
            [-np.asarray(m.f_sg2_tones), np.asarray(m.f_sg2_tones)])
        for c in centers:
            hits.extend(c - base)
    else:
        for c in centers:
            for o in m.tone_offsets:
                hits.append(c - m.f_sg1 - o)
                hits.append(m.f_sg1 - c - o)
    hits = np.sort([h for h in hits if x_grid[0] <= h <= x_grid[-1]])
    if hits.size == 0:
        return 0
    return int(1 + np.sum(np.diff(hits) > fwhm))
