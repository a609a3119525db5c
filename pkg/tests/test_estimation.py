import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from mechconvert import (
    FitError,
    NoiseSpectrum,
    ParameterError,
    fit_lorentzian,
    infer_bath,
    output_noise_spectrum,
    self_calibrate,
    synthesize_spectrum,
    thermometry,
)
from mechconvert.noise import bose_occupancy, lorentzian

from conftest import rates_for


def spectrum(delta, quanta):
    return NoiseSpectrum(delta=np.asarray(delta, float), quanta=np.asarray(quanta, float), floor_quanta=0.0)


def test_noiseless_fit_is_exact():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        G = 10 ** rng.uniform(0, 4)
        c = rng.uniform(-0.5, 0.5) * G
        P = 10 ** rng.uniform(-2, 1)
        F = 10 ** rng.uniform(-1, 2)
        x = np.linspace(-5 * G, 5 * G, int(rng.integers(100, 2000)))
        fit = fit_lorentzian(spectrum(x, lorentzian(x, c, G, P, F)))
        worst = max(worst, abs(fit.fwhm / G - 1), abs(fit.peak / P - 1), abs(fit.floor / F - 1), abs(fit.center - c) / G)
    assert worst < 1e-9


def test_fit_on_device_spectrum(device):
    r = rates_for(device, 80, 80)
    spec = output_noise_spectrum(device, r, 1, 60.0, 21.77, np.linspace(-5, 5, 4001) * r.Gamma_total)
    fit = fit_lorentzian(spec)
    assert fit.fwhm == pytest.approx(r.Gamma_total, rel=1e-9)
    assert not fit.low_snr
    bath = infer_bath(fit, r, 0.96, 0.99, 1)
    assert bath["n_th"] == pytest.approx(60, rel=1e-9)
    assert bath["n_m"] == pytest.approx(60 / 161, rel=1e-9)
    assert bath["n_add"] == pytest.approx(60 / (0.99 * 80), rel=1e-9)
    assert bath["n_add_cavity"] == 2


def test_noisy_fit_reports_uncertainty(device):
    r = rates_for(device, 80, 80)
    spec = output_noise_spectrum(device, r, 1, 60.0, 21.77, np.linspace(-5, 5, 4001) * r.Gamma_total)
    fit = fit_lorentzian(synthesize_spectrum(spec, 1e4, seed=0))
    err = fit.stderr
    assert err["fwhm"] > 0 and err["peak"] > 0
    assert abs(fit.fwhm - r.Gamma_total) < 5 * err["fwhm"]
    assert fit.to_record()["params"]["fwhm"]["value"] == fit.fwhm


@pytest.mark.parametrize("seed", range(20))
def test_flat_spectrum_flagged(seed):
    rng = np.random.default_rng(seed)
    x = np.linspace(-1e3, 1e3, 200)
    y = 20 * (1 + 0.01 * rng.standard_normal(x.size))
    try:
        fit = fit_lorentzian(spectrum(x, y))
    except FitError as exc:
        assert exc.best is not None
        return
    assert fit.low_snr


def test_fit_rejects_bad_input():
    with pytest.raises(ParameterError):
        fit_lorentzian(spectrum(np.arange(5.0), np.ones(5)))
    x = np.linspace(0, 1, 50)
    y = np.ones(50)
    y[3] = np.nan
    with pytest.raises(ParameterError):
        fit_lorentzian(spectrum(x, y))


def test_infer_bath_edge_cases(device):
    r = rates_for(device, 80, 80)
    x = np.linspace(-5, 5, 401) * r.Gamma_total
    fit = fit_lorentzian(spectrum(x, lorentzian(x, 0, r.Gamma_total, 0.5, 20)))
    from dataclasses import replace

    zero = infer_bath(replace(fit, peak=0.0), r, 0.96, 0.99, 1)
    assert zero["n_th"] == 0 and zero["n_add"] == 0
    with pytest.raises(ParameterError):
        infer_bath(replace(fit, peak=-0.1), r, 0.96, 0.99, 1)
    with pytest.warns(RuntimeWarning):
        infer_bath(replace(fit, fwhm=2 * r.Gamma_total), r, 0.96, 0.99, 1)


@settings(max_examples=300, deadline=None)
@given(
    t_sq=st.floats(1e-6, 1.0),
    lines=st.lists(st.floats(1e-4, 1e4), min_size=4, max_size=4),
    scale=st.floats(1e-3, 1e3),
)
def test_self_calibration_identity(t_sq, lines, scale):
    a1, b1, a2, b2 = lines
    t = math.sqrt(t_sq)
    raw = (a1 * b1, a2 * b2, a1 * b2 * t, a2 * b1 * t)
    cal = self_calibrate(*raw)
    assert cal.t_sq == pytest.approx(t_sq, rel=1e-12)
    assert cal.paths["1->2"] == pytest.approx(a1 * b2, rel=1e-12)
    assert cal.paths["2->1"] == pytest.approx(a2 * b1, rel=1e-12)
    assert self_calibrate(*(scale * v for v in raw)).t_sq == pytest.approx(cal.t_sq, rel=1e-12)


def test_self_calibration_rejects_nonpositive():
    with pytest.raises(ParameterError):
        self_calibrate(1, 0, 1, 1)


def test_thermometry_occupancy_at_base_temperature():
    assert bose_occupancy(14.98e6, 0.030) == pytest.approx(41.2, abs=0.1)
    # warmer than base: the fitted 60 quanta corresponds to about 43 mK
    assert bose_occupancy(14.98e6, 0.043) == pytest.approx(60, abs=1.5)


def emitted_area(device, cav, n_drive, T, background, window):
    """Integrated power of the emitted sideband plus a flat background."""
    c = device.cavity(cav)
    r = rates_for(device, 4 * c.g0**2 * n_drive / c.kappa / device.mech.gamma_m, 0.0)
    swap = lambda d: output_noise_spectrum(device, r, cav, bose_occupancy(device.mech.f_m, T), 0.0, [d]).quanta[0]
    area, _ = quad(swap, -np.inf, np.inf, epsabs=0, epsrel=1e-12)
    return area + background * window


@pytest.mark.parametrize("n_drive", [1e3, 5e4])
def test_thermometry_g0_round_trip(device, n_drive):
    temps = [0.03, 0.06, 0.1, 0.15, 0.2]
    pts = [(T, 3.5 * emitted_area(device, 1, n_drive, T, 21.77, 5e4)) for T in temps]
    res = thermometry(pts, n_drive, device.mech, device.cavity1, gain=3.5, window_hz=5e4)
    assert res.g0 == pytest.approx(145.0, rel=1e-6)
    assert res.noise_quanta == pytest.approx(21.77, rel=1e-6)


def test_thermometry_validation(device):
    with pytest.raises(ParameterError):
        thermometry([(0.03, 1), (0.04, 2), (0.05, 3)], 1e3, device.mech, device.cavity1)
    with pytest.raises(ParameterError):
        thermometry([(0.03, 3), (0.1, 2), (0.2, 1)], 1e3, device.mech, device.cavity1)
    with pytest.raises(ParameterError):
        thermometry([(0.03, 1), (0.1, 2)], 1e3, device.mech, device.cavity1)
