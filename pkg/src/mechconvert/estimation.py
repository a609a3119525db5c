"""Parameter recovery from noise spectra and raw scattering magnitudes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter1d

from .errors import FitError, ParameterError
from .model import CavityParams, DerivedRates, MechanicalParams
from .noise import NoiseSpectrum, bose_occupancy, emitted_peak, lorentzian

FIT_PARAMS = ("center", "fwhm", "peak", "floor")

#: a fitted peak below this many standard errors is flagged low-SNR
DETECTION_SIGMA = 5.0


@dataclass(frozen=True)
class LorentzianFit:
    center: float
    fwhm: float
    peak: float
    floor: float
    residual_rms: float
    covariance: np.ndarray = field(repr=False)
    iterations: int = 0
    low_snr: bool = False
    warnings: list[str] = field(default_factory=list)

    def model(self, delta) -> np.ndarray:
        return lorentzian(delta, self.center, self.fwhm, self.peak, self.floor)

    @property
    def stderr(self) -> dict:
        d = np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))
        return dict(zip(FIT_PARAMS, map(float, d)))

    def to_record(self) -> dict:
        err = self.stderr
        return {
            "params": {k: {"value": float(getattr(self, k)), "stderr": err[k]} for k in FIT_PARAMS},
            "residual_rms": self.residual_rms,
            "iterations": self.iterations,
            "low_snr": self.low_snr,
            "warnings": list(self.warnings),
            "covariance": self.covariance.tolist(),
        }


def _initial_guess(x, y):
    n = x.size
    q = max(1, n // 4)
    floor = float(np.median(np.concatenate([y[:q], y[-q:]])))
    i_max = int(np.argmax(y))
    peak = float(y[i_max] - floor)
    center = float(x[i_max])
    half = floor + 0.5 * peak

    def crossing(step):
        i = i_max
        while 0 <= i + step < n:
            j = i + step
            if y[j] <= half:
                if y[i] == y[j]:
                    return float(x[j])
                return float(x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i]))
            i = j
        return None

    lo, hi = crossing(-1), crossing(+1)
    if lo is not None and hi is not None:
        fwhm = hi - lo
    elif lo is not None:
        fwhm = 2 * (center - lo)
    elif hi is not None:
        fwhm = 2 * (hi - center)
    else:
        fwhm = 0.25 * (x[-1] - x[0])
    if not fwhm > 0:
        fwhm = float(np.min(np.diff(x)))
    return center, fwhm, peak, floor


def _scaled_model(theta, x):
    # theta = (center, log fwhm, peak, floor) in normalized units
    c, u, p, f = theta
    hw2 = 0.25 * math.exp(2 * u)
    d = x - c
    den = hw2 + d * d
    L = hw2 / den
    J = np.empty((x.size, 4))
    J[:, 0] = p * hw2 * 2 * d / den**2
    J[:, 1] = p * 2 * hw2 * d * d / den**2
    J[:, 2] = L
    J[:, 3] = 1.0
    return f + p * L, J


def _damped_step(JtJ, g, damping, free):
    if free is None:
        return np.linalg.solve(JtJ + np.diag(damping), -g)
    idx = np.asarray(free)
    if idx.size == 0:
        return np.zeros_like(g)
    step = np.zeros_like(g)
    step[idx] = np.linalg.solve(JtJ[np.ix_(idx, idx)] + np.diag(damping[idx]), -g[idx])
    return step


def _levenberg_marquardt(theta, xn, yn, lower, upper, max_iter, rtol, gtol):
    """Bounded LM from ``theta``; returns (theta, cost, history, iterations, converged)."""
    m, J = _scaled_model(theta, xn)
    r = m - yn
    cost = float(r @ r)
    history = [cost]
    lam, nu = 1e-3, 2.0
    converged = False
    stalled = 0
    it = 0
    for it in range(1, max_iter + 1):
        JtJ = J.T @ J
        g = J.T @ r
        diag = np.maximum(np.diag(JtJ), 1e-12 * max(np.max(np.diag(JtJ)), 1e-300))
        accepted = False
        step = np.zeros(4)
        while lam < 1e20:
            try:
                step = _damped_step(JtJ, g, lam * diag, free=None)
                pinned = (theta + step < lower) | (theta + step > upper)
                if pinned.any():
                    # parameters driven past a bound are held there; solve for the rest
                    step = _damped_step(JtJ, g, lam * diag, free=np.flatnonzero(~pinned))
                step = np.clip(theta + step, lower, upper) - theta
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = theta + step
            m_t, J_t = _scaled_model(trial, xn)
            r_t = m_t - yn
            cost_t = float(r_t @ r_t)
            predicted = -(2.0 * step @ g + step @ JtJ @ step)
            rho = (cost - cost_t) / predicted if predicted > 0 else -1.0
            if rho > 0 or (predicted <= 0 and cost_t <= cost):
                theta, J, r, cost = trial, J_t, r_t, cost_t
                lam = max(lam * max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3), 1e-15)
                nu = 2.0
                accepted = True
                break
            lam *= nu
            nu *= 2.0
        stalled = stalled + 1 if history[-1] - cost <= 1e-10 * history[-1] else 0
        history.append(cost)
        scale = np.maximum(np.abs(theta), 1.0)
        col = np.linalg.norm(J, axis=0)
        cosine = np.abs(J.T @ r) / np.where(col > 0, col, 1.0) / math.sqrt(max(cost, 1e-300))
        if (
            not accepted
            or np.all(np.abs(step) <= rtol * scale)
            or cost == 0.0
            or stalled >= 5
            or np.max(cosine) <= gtol
        ):
            converged = True
            break
    return theta, cost, history, it, converged


def fit_lorentzian(
    spectrum: NoiseSpectrum, max_iter: int = 200, rtol: float = 1e-9, gtol: float = 1e-8
) -> LorentzianFit:
    """Least-squares Lorentzian-plus-floor fit of a spectrum.

    Damped Gauss-Newton (Levenberg-Marquardt, Nielsen damping update) in
    normalized coordinates, with the width fitted on a log scale so it stays
    positive and held above one grid bin. Converged once every parameter's
    step falls below ``rtol`` relative to its magnitude (or to unit scale in
    normalized coordinates, whichever is larger). Two safeguards also end
    the iteration: the residual is orthogonal to every Jacobian column to
    within ``gtol`` (cosine), or the cost has stopped falling (relative
    decrease <= 1e-10 for 5 iterations).

    Three starting points are tried (the raw half-height estimate, the same
    estimate on a moving-average copy, and a wide line) and the converged
    run with the lowest residual is kept, so an isolated noise spike does
    not capture the fit.

    Raises
    ------
    FitError
        No convergence within ``max_iter`` iterations; carries the best
        parameters found and the cost history.
    """
    x = np.asarray(spectrum.delta, dtype=float)
    y = np.asarray(spectrum.quanta, dtype=float)
    if x.size < 8:
        raise ParameterError("delta", f"need at least 8 grid points, got {x.size}")
    if x.shape != y.shape or not np.all(np.isfinite(y)):
        raise ParameterError("quanta", "values must be finite and match the grid")

    c0, w0, p0, f0 = _initial_guess(x, y)
    x0, xs = 0.5 * (x[0] + x[-1]), 0.5 * (x[-1] - x[0])
    y0 = f0
    ys = max(abs(p0), float(np.std(y)), abs(f0) * 1e-12, 1e-300)
    xn = (x - x0) / xs
    yn = (y - y0) / ys
    dx_min = float(np.min(np.diff(xn)))
    # center kept near the grid; a line narrower than one bin is unresolvable
    lower = np.array([-2.0, math.log(dx_min), -np.inf, -np.inf])
    upper = np.array([2.0, math.log(20.0), np.inf, np.inf])

    # Starts: raw guess, guess from a smoothed copy (robust to single-bin
    # noise spikes), and a wide line at the smoothed maximum.
    k = max(1, x.size // 64)
    ys_smooth = uniform_filter1d(y, k, mode="nearest") if k > 1 else y
    cs, ws, ps, _ = _initial_guess(x, ys_smooth)
    starts = [(c0, w0, p0), (cs, ws, ps), (cs, 0.2 * (x[-1] - x[0]), ps)]
    runs = []
    for c, w, pk in starts:
        theta = np.clip(np.array([(c - x0) / xs, math.log(w / xs), pk / ys, 0.0]), lower, upper)
        runs.append(_levenberg_marquardt(theta, xn, yn, lower, upper, max_iter, rtol, gtol))
    done = [r for r in runs if r[4]]
    theta, cost, history, it, converged = min(done or runs, key=lambda r: r[1])

    center = x0 + xs * theta[0]
    fwhm = xs * math.exp(theta[1])
    peak = ys * theta[2]
    floor = y0 + ys * theta[3]
    if not converged:
        best = dict(zip(FIT_PARAMS, (center, fwhm, peak, floor)))
        raise FitError(f"no convergence after {max_iter} iterations", best=best, history=history)

    resid = lorentzian(x, center, fwhm, peak, floor) - y
    rms = float(math.sqrt(np.mean(resid**2)))
    hw2 = (0.5 * fwhm) ** 2
    d = x - center
    den = hw2 + d * d
    Jo = np.column_stack(
        [peak * hw2 * 2 * d / den**2, peak * fwhm * 0.5 * d * d / den**2, hw2 / den, np.ones_like(x)]
    )
    dof = max(x.size - 4, 1)
    cov = float(resid @ resid) / dof * np.linalg.pinv(Jo.T @ Jo)

    notes = []
    bin_width = float(np.min(np.diff(x)))
    peak_err = math.sqrt(max(cov[2, 2], 0.0))
    if peak <= 2.0 * rms:
        notes.append(f"peak {peak:.3g} is not above twice the per-bin scatter {rms:.3g}")
    if fwhm < 3.0 * bin_width:
        notes.append(f"fitted width {fwhm:.3g} spans under 3 bins; indistinguishable from a noise spike")
    if not peak > DETECTION_SIGMA * peak_err:
        notes.append(f"peak {peak:.3g} is below {DETECTION_SIGMA:g} standard errors ({peak_err:.3g})")
    if fwhm > x[-1] - x[0]:
        notes.append("fitted width exceeds the grid span; width and floor are poorly constrained")
    low_snr = bool(notes)
    return LorentzianFit(center, fwhm, peak, floor, rms, cov, it, low_snr, notes)


def infer_bath(
    fit: LorentzianFit,
    rates: DerivedRates,
    eta1: float,
    eta2: float,
    which_cavity: int,
) -> dict:
    """Bath occupancy from the peak of the noise emitted by ``which_cavity``.

    The peak is referred to the opposite cavity's input by dividing by the
    on-resonance power transmission, then ``n_th = n_add * eta * C`` of that
    opposite cavity. A zero peak maps to a zero-temperature bath.
    """
    if fit.peak < 0:
        raise ParameterError("peak", f"must be >= 0, got {fit.peak!r}")
    if abs(fit.fwhm - rates.Gamma_total) > 0.25 * rates.Gamma_total:
        warnings.warn(
            f"fitted width {fit.fwhm:.4g} Hz differs from Gamma_total {rates.Gamma_total:.4g} Hz by more than 25%",
            RuntimeWarning,
            stacklevel=2,
        )
    eta_emit = eta1 if which_cavity == 1 else eta2
    unit = emitted_peak(rates, eta_emit, which_cavity, 1.0)
    if unit <= 0:
        raise ParameterError("rates", "emitting cavity has no coupling to the mechanics")
    n_th = fit.peak / unit
    t_sq = 4.0 * eta1 * eta2 * rates.C1 * rates.C2 / (1.0 + rates.C1 + rates.C2) ** 2
    return {
        "n_th": n_th,
        "n_m": n_th / (1.0 + rates.C1 + rates.C2),
        "n_add": fit.peak / t_sq if t_sq > 0 else math.inf,
        "n_add_cavity": 2 if which_cavity == 1 else 1,
    }


@dataclass(frozen=True)
class LineCalibration:
    t_sq: float
    paths: dict

    def to_record(self) -> dict:
        return {"t_sq": self.t_sq, "paths": dict(self.paths)}


def self_calibrate(R1_off: float, R2_off: float, T12: float, T21: float) -> LineCalibration:
    """Device-plane transmission from four raw amplitude magnitudes.

    Off-resonant reflections are taken as unity at the device, so they
    measure the line products ``a1*b1`` and ``a2*b2`` directly (``a`` input
    attenuation, ``b`` output gain). The two transmissions measure
    ``a1*b2*|t|`` and ``a2*b1*|t|``; every line coefficient cancels in::

        |t|**2 = T12 * T21 / (R1_off * R2_off)

    ``paths`` keys are ``"in->out"`` port pairs.
    """
    raw = {"R1_off": R1_off, "R2_off": R2_off, "T12": T12, "T21": T21}
    for k, v in raw.items():
        if not (math.isfinite(v) and v > 0):
            raise ParameterError(k, f"must be a positive magnitude, got {v!r}")
    t_sq = (T12 * T21) / (R1_off * R2_off)
    t = math.sqrt(t_sq)
    paths = {"1->1": R1_off, "2->2": R2_off, "1->2": T12 / t, "2->1": T21 / t}
    return LineCalibration(t_sq, paths)


@dataclass(frozen=True)
class ThermometryFit:
    slope: float
    intercept: float
    slope_stderr: float
    intercept_stderr: float
    g0: float
    noise_quanta: float | None
    n_th: np.ndarray = field(repr=False)


def sideband_area(mech: MechanicalParams, cavity: CavityParams, n_drive: float, temperature: float, other_gamma: float = 0.0) -> float:
    """Integrated noise [quanta*Hz] emitted by one driven cavity with the bath at ``temperature``.

    Area of the emitted Lorentzian, ``(pi/2) * peak * Gamma_total``, which
    reduces to ``2 pi eta Gamma_i n_th(T) / (1 + C_total)``. ``other_gamma`` is
    the scattering rate from the second pump, if it is on.
    """
    gamma_i = 4.0 * cavity.g0**2 * n_drive / cavity.kappa
    c_tot = (gamma_i + other_gamma) / mech.gamma_m
    n_th = bose_occupancy(mech.f_m, temperature)
    return 2.0 * math.pi * cavity.eta * gamma_i * n_th / (1.0 + c_tot)


def thermometry(
    points,
    n_drive: float,
    mech: MechanicalParams,
    cavity: CavityParams,
    gain: float = 1.0,
    window_hz: float | None = None,
    other_gamma: float = 0.0,
) -> ThermometryFit:
    """Calibrate g0 from sideband power measured at several bath temperatures.

    Each point is ``(T_cryostat [K], integrated power)``, the power being in
    units of ``gain`` times quanta*Hz at the device plane and including any
    constant background integrated over ``window_hz``. Power is regressed
    linearly on the Bose occupancy ``n_th(T)`` of the mechanical mode:

    * slope / gain = 2 pi eta Gamma_i / (1 + (Gamma_i + other_gamma) / gamma_m),
      solved for Gamma_i and hence ``g0 = sqrt(Gamma_i kappa / (4 n_drive))``;
    * intercept / (gain * window_hz) = background quanta (system noise), when
      ``window_hz`` is given.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ParameterError("points", "need at least 3 (temperature, power) pairs")
    T, P = pts[:, 0], pts[:, 1]
    if np.any(T <= 0) or T.max() < 2.0 * T.min():
        raise ParameterError("points", "temperatures must be positive and span at least a factor of 2")
    if not n_drive > 0:
        raise ParameterError("n_drive", f"must be > 0, got {n_drive!r}")
    if not gain > 0:
        raise ParameterError("gain", f"must be > 0, got {gain!r}")

    n_th = np.array([bose_occupancy(mech.f_m, t) for t in T])
    X = np.column_stack([n_th, np.ones_like(n_th)])
    coef, *_ = np.linalg.lstsq(X, P, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = P - X @ coef
    dof = len(P) - 2
    cov = (resid @ resid / dof if dof > 0 else 0.0) * np.linalg.inv(X.T @ X)
    if not slope > 0:
        raise ParameterError("points", f"sideband power must rise with temperature (slope {slope:.3g})")

    u = slope / (gain * 2.0 * math.pi * cavity.eta)
    if u >= mech.gamma_m:
        raise ParameterError("points", "slope implies a scattering rate beyond the cooling limit")
    gamma_i = u * (mech.gamma_m + other_gamma) / (mech.gamma_m - u)
    g0 = math.sqrt(gamma_i * cavity.kappa / (4.0 * n_drive))
    return ThermometryFit(
        slope=slope,
        intercept=intercept,
        slope_stderr=float(math.sqrt(cov[0, 0])),
        intercept_stderr=float(math.sqrt(cov[1, 1])),
        g0=g0,
        noise_quanta=None if window_hz is None else intercept / (gain * window_hz),
        n_th=n_th,
    )
