"""Multi-Lorentzian least-squares fits of ODMR spectra.

The solver is a plain Levenberg-Marquardt loop with Marquardt (diagonal)
scaling. Widths and depths are fitted as logarithms so they stay positive;
steps leaving a loose feasible box are rejected like any uphill step. The
frequency axis and the data are rescaled to O(1) before fitting.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks, peak_widths

from .odmr import Spectrum

MAX_ITER = 200
RTOL_COST = 1e-10
GTOL = 1e-8


class PeakSearchError(ValueError):
    pass


@dataclass
class FitResult:
    centers: np.ndarray
    fwhms: np.ndarray
    depths: np.ndarray
    baseline: float
    residual_rms: float
    stderr_centers: np.ndarray
    stderr_fwhms: np.ndarray
    stderr_depths: np.ndarray
    stderr_baseline: float
    converged: bool
    iterations: int
    message: str = ""
    residuals: np.ndarray = field(default=None, repr=False)

    @property
    def n_peaks(self) -> int:
        return len(self.centers)

    def model(self, f) -> np.ndarray:
        return multi_lorentzian(f, self.centers, self.fwhms, self.depths, self.baseline)

    def to_dict(self) -> dict:
        lines = [
            {"center_hz": float(c), "fwhm_hz": float(w), "depth": float(d),
             "stderr": {"center_hz": float(sc), "fwhm_hz": float(sw), "depth": float(sd)}}
            for c, w, d, sc, sw, sd in zip(self.centers, self.fwhms, self.depths,
                                           self.stderr_centers, self.stderr_fwhms, self.stderr_depths)
        ]
        return {
            "lines": lines,
            "baseline": float(self.baseline),
            "baseline_stderr": float(self.stderr_baseline),
            "residual_rms": float(self.residual_rms),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "message": self.message,
        }


def multi_lorentzian(f, centers, fwhms, depths, baseline=0.0) -> np.ndarray:
    f = np.asarray(f, dtype=float)[:, None]
    hw2 = (0.5 * np.asarray(fwhms, dtype=float)) ** 2
    u = f - np.asarray(centers, dtype=float)
    return baseline + (np.asarray(depths) * hw2 / (u * u + hw2)).sum(axis=1)


# --- internal parametrization --------------------------------------------------
# theta = [c_1..c_n, log w (1 or n), log d_1..d_n, b]; all in scaled units


def _unpack(theta, n, shared):
    c = theta[:n]
    nw = 1 if shared else n
    lw = theta[n:n + nw]
    ld = theta[n + nw:n + nw + n]
    b = theta[-1]
    w = np.exp(lw) if not shared else np.full(n, np.exp(lw[0]))
    return c, w, np.exp(ld), b


def _model_and_jac(theta, x, n, shared):
    c, w, d, b = _unpack(theta, n, shared)
    h2 = (0.5 * w) ** 2
    u = x[:, None] - c[None, :]
    den = u * u + h2
    lor = d * h2 / den
    y = b + lor.sum(axis=1)
    dc = d * h2 * 2 * u / den ** 2
    dlw = 2 * d * h2 * u * u / den ** 2
    if shared:
        dlw = dlw.sum(axis=1, keepdims=True)
    jac = np.hstack([dc, dlw, lor, np.ones((x.size, 1))])
    return y, jac


def numeric_jacobian(theta, x, n, shared=False, eps=1e-6):
    """Central-difference Jacobian of the scaled model, for checking the analytic one."""
    theta = np.asarray(theta, dtype=float)
    cols = []
    for k in range(theta.size):
        step = eps * max(1.0, abs(theta[k]))
        tp, tm = theta.copy(), theta.copy()
        tp[k] += step
        tm[k] -= step
        cols.append((_model_and_jac(tp, x, n, shared)[0] - _model_and_jac(tm, x, n, shared)[0]) / (2 * step))
    return np.column_stack(cols)


def _natural_jac(f, centers, fwhms, depths):
    """Jacobian of the unscaled model w.r.t. (centers, fwhms, depths, baseline)."""
    h = 0.5 * fwhms
    u = f[:, None] - centers[None, :]
    den = u * u + h * h
    dc = depths * h * h * 2 * u / den ** 2
    dw = depths * h * u * u / den ** 2
    dd = h * h / den
    return np.hstack([dc, dw, dd, np.ones((f.size, 1))])


def _levenberg_marquardt(theta, x, y, n, shared, box, free):
    lo, hi = box

    def cost_of(t):
        if np.any(t < lo) or np.any(t > hi):
            return np.inf, None, None
        m, j = _model_and_jac(t, x, n, shared)
        r = m - y
        return 0.5 * r @ r, r, j

    cost, r, jac = cost_of(theta)
    lam = 1e-3
    message = "maximum iterations reached"
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        jf = jac[:, free]
        g = jf.T @ r
        if np.linalg.norm(g, np.inf) < GTOL or cost < 1e-30 * y.size:
            converged, message = True, "gradient below tolerance"
            break
        jtj = jf.T @ jf
        diag = np.maximum(np.diag(jtj), 1e-12)
        while True:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            new = theta.copy()
            new[free] += step
            new_cost, new_r, new_jac = cost_of(new)
            if np.isfinite(new_cost) and new_cost < cost:
                break
            lam *= 4
            if lam > 1e16:
                return theta, cost, r, jac, False, it, "step rejected at maximum damping"
        rel = (cost - new_cost) / max(cost, 1e-300)
        theta, cost, r, jac = new, new_cost, new_r, new_jac
        lam = max(lam / 3, 1e-12)
        if rel < RTOL_COST:
            converged, message = True, "relative cost change below tolerance"
            break
    return theta, cost, r, jac, converged, it, message


def fit_lorentzians(spec: Spectrum, n_peaks: int, init: dict | None = None,
                    shared_fwhm: bool = False, fixed: tuple[str, ...] = ()) -> FitResult:
    """Fit ``n_peaks`` Lorentzian peaks plus a constant baseline.

    ``init`` may hold ``centers``, ``fwhms``, ``depths`` and ``baseline``; missing
    entries come from :func:`auto_init`. Parameter groups named in ``fixed``
    (any of "centers", "fwhms", "baseline") are held at their initial values.
    """
    unknown = set(fixed) - {"centers", "fwhms", "baseline"}
    if unknown:
        raise ValueError(f"cannot hold {sorted(unknown)} fixed")
    f, y = spec.axis, spec.values
    if f.size < 3 * n_peaks + 1:
        raise ValueError(f"need at least {3 * n_peaks + 1} samples for {n_peaks} peaks")
    guess = dict(init or {})
    if not {"centers", "fwhms", "depths"} <= guess.keys():
        auto = auto_init(spec, n_peaks)
        for k, v in auto.items():
            guess.setdefault(k, v)
    guess.setdefault("baseline", float(np.percentile(y, 10)))

    f_ref = 0.5 * (f[0] + f[-1])
    f_scale = 0.5 * (f[-1] - f[0])
    y_scale = float(np.ptp(y)) or 1.0
    x = (f - f_ref) / f_scale
    ys = y / y_scale

    c0 = (np.asarray(guess["centers"], dtype=float) - f_ref) / f_scale
    w0 = np.asarray(guess["fwhms"], dtype=float) / f_scale
    d0 = np.maximum(np.asarray(guess["depths"], dtype=float) / y_scale, 1e-12)
    lw0 = np.log([np.exp(np.log(w0).mean())]) if shared_fwhm else np.log(w0)
    theta0 = np.concatenate([c0, lw0, np.log(d0), [guess["baseline"] / y_scale]])

    # feasible box: widths between one sample spacing and 8x the half-span
    nw = 1 if shared_fwhm else n_peaks
    w_min = np.min(np.diff(x))
    lo = np.concatenate([np.full(n_peaks, -1.5), np.full(nw, np.log(w_min)), np.full(n_peaks, -700.0), [-np.inf]])
    hi = np.concatenate([np.full(n_peaks, 1.5), np.full(nw, np.log(8.0)), np.full(n_peaks, np.log(100.0)), [np.inf]])
    theta0 = np.clip(theta0, lo, hi)
    free = np.ones(theta0.size, dtype=bool)
    if "centers" in fixed:
        free[:n_peaks] = False
    if "fwhms" in fixed:
        free[n_peaks:n_peaks + nw] = False
    if "baseline" in fixed:
        free[-1] = False
    theta, cost, r, jac, converged, iters, msg = _levenberg_marquardt(
        theta0, x, ys, n_peaks, shared_fwhm, (lo, hi), free)
    c, w, d, b = _unpack(theta, n_peaks, shared_fwhm)
    centers = f_ref + c * f_scale
    pinned = np.isclose(theta, lo, rtol=0, atol=1e-6) | np.isclose(theta, hi, rtol=0, atol=1e-6)
    if converged and np.any((pinned & free)[:-1]):
        converged, msg = False, "parameter pinned at a bound (width floor, depth or center limit)"

    # covariance in natural (unscaled) parameters
    jn = _natural_jac(f, centers, w * f_scale, d * y_scale)
    if shared_fwhm:
        jn = np.hstack([jn[:, :n_peaks], jn[:, n_peaks:2 * n_peaks].sum(axis=1, keepdims=True),
                        jn[:, 2 * n_peaks:]])
    dof = max(f.size - int(free.sum()), 1)
    sigma2 = (2 * cost * y_scale ** 2) / dof
    se = np.zeros(theta.size)
    try:
        jf = jn[:, free]
        # column-normalize first: Hz-valued and unitless columns differ by ~1e8
        norms = np.linalg.norm(jf, axis=0)
        norms[norms == 0] = 1.0
        js = jf / norms
        cov = np.linalg.pinv(js.T @ js) / np.outer(norms, norms)
        se[free] = np.sqrt(np.clip(np.diag(sigma2 * cov), 0, None))
    except np.linalg.LinAlgError:
        se[free] = np.nan
    se_c = se[:n_peaks]
    se_w = np.full(n_peaks, se[n_peaks]) if shared_fwhm else se[n_peaks:2 * n_peaks]
    se_d = se[n_peaks + nw:n_peaks + nw + n_peaks]

    order = np.argsort(centers)
    resid = r * y_scale
    return FitResult(
        centers=centers[order],
        fwhms=(w * f_scale)[order],
        depths=(d * y_scale)[order],
        baseline=float(b * y_scale),
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
        stderr_centers=se_c[order],
        stderr_fwhms=se_w[order],
        stderr_depths=se_d[order],
        stderr_baseline=float(se[-1]),
        converged=converged,
        iterations=iters,
        message=msg,
        residuals=resid,
    )


def auto_init(spec: Spectrum, n_peaks: int, split_merged: bool = True) -> dict:
    """Deterministic starting values from smoothed local maxima.

    When fewer maxima than ``n_peaks`` are found (merged lines) and
    ``split_merged`` is set, the widest peak is split symmetrically at
    +/- fwhm/4 until the count matches.
    """
    f, y = spec.axis, spec.values
    smooth = uniform_filter1d(y, size=5, mode="nearest") if y.size >= 5 else y
    base = float(np.percentile(smooth, 10))
    noise = 1.4826 * np.median(np.abs(np.diff(y) - np.median(np.diff(y)))) / np.sqrt(2)
    thresh = max(5 * noise, 1e-9 * max(np.ptp(y), np.abs(y).max(), 1e-300))
    peaks, props = find_peaks(smooth - base, prominence=thresh)
    if peaks.size == 0:
        raise PeakSearchError(f"found 0 peaks, need {n_peaks}")
    keep = np.sort(peaks[np.argsort(props["prominences"])[::-1][:n_peaks]])
    widths = peak_widths(smooth, keep, rel_height=0.5)[0]
    df = np.mean(np.diff(f))
    centers = list(f[keep])
    fwhms = list(np.maximum(widths, 1.0) * df)
    depths = list(smooth[keep] - base)
    if len(centers) < n_peaks:
        if not split_merged:
            raise PeakSearchError(f"found {len(centers)} peaks, need {n_peaks}")
        while len(centers) < n_peaks:
            i = int(np.argmax(fwhms))
            c, w, d = centers.pop(i), fwhms.pop(i), depths.pop(i)
            centers += [c - w / 4, c + w / 4]
            fwhms += [w / 2, w / 2]
            depths += [d / 2, d / 2]
        order = np.argsort(centers)
        centers, fwhms, depths = (list(np.asarray(v)[order]) for v in (centers, fwhms, depths))
    return {"centers": np.array(centers), "fwhms": np.array(fwhms),
            "depths": np.array(depths), "baseline": base}
