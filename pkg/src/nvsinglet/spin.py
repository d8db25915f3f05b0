"""NV ground-state spin resonances for the four crystallographic orientations.

Only the linear Zeeman term is kept: each m_s=0 <-> m_s=+/-1 transition sits at
``D +/- gamma * |B_nv|`` with ``gamma = g * mu_B / h``. This is adequate for bias
fields around 1 mT, where the transverse field component shifts the lines by
well under a kHz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Two projections count as degenerate when the resulting lines differ by less than this.
DEGENERACY_TOL_HZ = 1e3


@dataclass(frozen=True)
class PhysicalConstants:
    planck_h: float = 6.62607015e-34  # J s
    bohr_magneton: float = 9.2740100783e-24  # J/T
    electron_g: float = 2.0028
    electron_charge: float = 1.602176634e-19  # C

    def __post_init__(self):
        for name in ("planck_h", "bohr_magneton", "electron_g", "electron_charge"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def gyromagnetic_ratio(self) -> float:
        """g * mu_B / h in Hz/T (about 28.03 GHz/T for the NV ground state)."""
        return self.electron_g * self.bohr_magneton / self.planck_h


@dataclass(frozen=True)
class SpinParams:
    zfs_d: float = 2.870e9
    # 14N default, not a measured property of any particular sample
    hyperfine_a: float = 2.16e6
    n_hyperfine: int = 3
    amplitudes: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.zfs_d > 0:
            raise ValueError("zfs_d must be positive")
        if self.hyperfine_a < 0:
            raise ValueError("hyperfine_a must be non-negative")
        if self.n_hyperfine < 1 or self.n_hyperfine % 2 == 0:
            raise ValueError("n_hyperfine must be a positive odd integer")
        if self.amplitudes is not None:
            amps = np.asarray(self.amplitudes, dtype=float)
            if amps.shape != (self.n_hyperfine,) or np.any(amps < 0):
                raise ValueError("amplitudes must be n_hyperfine non-negative numbers")
            if not np.isclose(amps.sum(), 1.0, rtol=0, atol=1e-12):
                raise ValueError("hyperfine amplitudes must sum to 1")

    def line_amplitudes(self) -> np.ndarray:
        if self.amplitudes is None:
            return np.full(self.n_hyperfine, 1.0 / self.n_hyperfine)
        return np.asarray(self.amplitudes, dtype=float)


@dataclass(frozen=True)
class NVAxis:
    label: str
    unit_vector: tuple[float, float, float]

    @classmethod
    def from_miller(cls, h: int, k: int, l: int) -> "NVAxis":
        v = np.array([h, k, l], dtype=float)
        v /= np.linalg.norm(v)
        label = "[" + "".join(f"{i}" if i >= 0 else f"-{abs(i)}" for i in (h, k, l)) + "]"
        return cls(label, tuple(float(c) for c in v))

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.unit_vector)


NV_AXES: tuple[NVAxis, ...] = (
    NVAxis.from_miller(1, 1, 1),
    NVAxis.from_miller(1, -1, -1),
    NVAxis.from_miller(-1, -1, 1),
    NVAxis.from_miller(-1, 1, -1),
)


@dataclass(frozen=True)
class MagneticFieldVec:
    """Field in tesla, expressed in the cubic crystal frame of a [100]-cut sample."""

    components: tuple[float, float, float]

    def __post_init__(self):
        c = np.asarray(self.components, dtype=float)
        if c.shape != (3,) or not np.all(np.isfinite(c)):
            raise ValueError("field must be a finite 3-vector")

    @classmethod
    def along(cls, miller, magnitude: float) -> "MagneticFieldVec":
        """Field of ``magnitude`` tesla along a Miller-index direction such as (1, 1, 0)."""
        d = np.asarray(miller, dtype=float)
        norm = np.linalg.norm(d)
        if norm == 0:
            if magnitude != 0:
                raise ValueError("zero direction with nonzero magnitude")
            return cls((0.0, 0.0, 0.0))
        return cls(tuple(float(c) for c in magnitude * d / norm))

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.components, dtype=float)

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.vector))

    def __neg__(self) -> "MagneticFieldVec":
        return MagneticFieldVec(tuple(-c for c in self.components))


def project_field(b: MagneticFieldVec, axis: NVAxis) -> float:
    """Signed projection of ``b`` onto an NV axis, in tesla."""
    return float(np.dot(b.vector, axis.vector))


def transition_frequencies(p: SpinParams, c: PhysicalConstants, b_nv: float) -> tuple[float, float]:
    shift = c.gyromagnetic_ratio * abs(b_nv)
    return p.zfs_d - shift, p.zfs_d + shift


def hyperfine_lines(f_center: float, p: SpinParams) -> np.ndarray:
    half = (p.n_hyperfine - 1) // 2
    k = np.arange(-half, half + 1)
    return f_center + k * p.hyperfine_a


@dataclass(frozen=True)
class AxisResonance:
    axis: NVAxis
    b_projection: float
    f_minus: float
    f_plus: float
    lines_minus: np.ndarray = field(repr=False)
    lines_plus: np.ndarray = field(repr=False)
    amplitudes: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ResonanceSet:
    axes: tuple[AxisResonance, ...]
    # indices into ``axes``; axes in one group share their line positions
    degenerate_groups: tuple[tuple[int, ...], ...]

    def line_centers(self) -> np.ndarray:
        """All hyperfine line centers (both transitions, every axis), sorted."""
        lines = [np.concatenate([a.lines_minus, a.lines_plus]) for a in self.axes]
        return np.sort(np.concatenate(lines))

    def lines_with_weights(self, axis_weights=None) -> tuple[np.ndarray, np.ndarray]:
        """Line centers and relative weights, one entry per (axis, transition, hyperfine line).

        Weights are normalized so that every line of an equal-amplitude multiplet
        has weight 1, times the per-axis readout weight.
        """
        if axis_weights is None:
            axis_weights = np.ones(len(self.axes))
        axis_weights = np.asarray(axis_weights, dtype=float)
        if axis_weights.shape != (len(self.axes),):
            raise ValueError(f"need {len(self.axes)} axis weights, got {axis_weights.shape}")
        centers, weights = [], []
        for a, w in zip(self.axes, axis_weights):
            amp = a.amplitudes * len(a.amplitudes)
            for lines in (a.lines_minus, a.lines_plus):
                centers.append(lines)
                weights.append(w * amp)
        return np.concatenate(centers), np.concatenate(weights)


def all_resonances(
    b: MagneticFieldVec,
    p: SpinParams | None = None,
    c: PhysicalConstants | None = None,
    axes: tuple[NVAxis, ...] = NV_AXES,
) -> ResonanceSet:
    p = p or SpinParams()
    c = c or PhysicalConstants()
    amps = p.line_amplitudes()
    out = []
    for axis in axes:
        b_nv = project_field(b, axis)
        f_minus, f_plus = transition_frequencies(p, c, b_nv)
        out.append(
            AxisResonance(
                axis=axis,
                b_projection=b_nv,
                f_minus=f_minus,
                f_plus=f_plus,
                lines_minus=hyperfine_lines(f_minus, p),
                lines_plus=hyperfine_lines(f_plus, p),
                amplitudes=amps,
            )
        )
    return ResonanceSet(tuple(out), _group_degenerate(out))


def _group_degenerate(axes: list[AxisResonance]) -> tuple[tuple[int, ...], ...]:
    groups: list[list[int]] = []
    for i, a in enumerate(axes):
        for g in groups:
            if abs(axes[g[0]].f_plus - a.f_plus) < DEGENERACY_TOL_HZ:
                g.append(i)
                break
        else:
            groups.append([i])
    return tuple(tuple(g) for g in groups)
