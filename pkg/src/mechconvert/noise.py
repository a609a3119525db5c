"""Added noise and emitted noise spectra, in quanta (photons s^-1 Hz^-1).

Only the mechanical bath contributes: cavity thermal occupancy is taken as
zero. Spectra are referred to the device reference plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import h, k as k_B

from .errors import ParameterError
from .model import ConverterParams, DerivedRates

#: returned for the input-referred added noise when a cooperativity is zero
INFINITE_NOISE = math.inf


@dataclass(frozen=True)
class AddedNoiseResult:
    n_add_1: float
    n_add_2: float
    n_m: float
    bound_ok: tuple[bool, bool]
    diagnostics: list[str] = field(default_factory=list)


def added_noise(rates: DerivedRates, eta1: float, eta2: float, n_th: float) -> AddedNoiseResult:
    """Input-referred added quanta ``n_th / (eta_i C_i)`` and cooled occupancy.

    ``bound_ok[i]`` reports whether ``n_add_i >= 2 n_m``. That bound holds for
    balanced drives but not for arbitrarily unbalanced ones, so it is
    reported rather than enforced. A zero cooperativity (or eta) leaves the
    converter with no transmission; the added noise is then
    :data:`INFINITE_NOISE` and a diagnostic explains why.
    """
    if not n_th >= 0:
        raise ParameterError("n_th", f"must be >= 0, got {n_th!r}")
    n_m = n_th / (1.0 + rates.C1 + rates.C2)
    diagnostics = []
    n_add = []
    for i, (eta, C) in enumerate(((eta1, rates.C1), (eta2, rates.C2)), start=1):
        if not 0.0 <= eta <= 1.0:
            raise ParameterError(f"eta{i}", f"must lie in [0, 1], got {eta!r}")
        if eta * C > 0:
            n_add.append(n_th / (eta * C))
        else:
            n_add.append(INFINITE_NOISE)
            diagnostics.append(f"n_add_{i}: eta{i}*C{i} = 0, no conversion path, input-referred noise is unbounded")
    bound = tuple(bool(x >= 2.0 * n_m) for x in n_add)
    return AddedNoiseResult(n_add[0], n_add[1], n_m, bound, diagnostics)


def emitted_peak(rates: DerivedRates, eta: float, which_cavity: int, n_th: float) -> float:
    """Peak of the mechanical noise emitted from one cavity, above the floor.

    ``4 eta_i C_i n_th / (1 + C1 + C2)**2``.
    """
    C = rates.C1 if which_cavity == 1 else rates.C2
    return 4.0 * eta * C * n_th / (1.0 + rates.C1 + rates.C2) ** 2


def lorentzian(delta, center, fwhm, peak, floor):
    hw2 = (0.5 * fwhm) ** 2
    return floor + peak * hw2 / (hw2 + (np.asarray(delta, dtype=float) - center) ** 2)


@dataclass(frozen=True)
class NoiseSpectrum:
    delta: np.ndarray
    quanta: np.ndarray
    floor_quanta: float
    which_cavity: int | None = None
    rates: DerivedRates | None = None
    n_th: float | None = None
    eta1: float | None = None
    eta2: float | None = None
    seed: int | None = None
    n_avg: float | None = None

    def metadata(self) -> dict:
        return {
            "which_cavity": self.which_cavity,
            "floor_quanta": self.floor_quanta,
            "n_th": self.n_th,
            "eta1": self.eta1,
            "eta2": self.eta2,
            "seed": self.seed,
            "n_avg": self.n_avg,
            "rates": None if self.rates is None else self.rates.to_dict(),
        }

    @classmethod
    def from_columns(cls, delta, quanta, meta: dict | None = None) -> NoiseSpectrum:
        meta = meta or {}
        rates = meta.get("rates")
        return cls(
            delta=np.asarray(delta, dtype=float),
            quanta=np.asarray(quanta, dtype=float),
            floor_quanta=float(meta.get("floor_quanta") or 0.0),
            which_cavity=meta.get("which_cavity"),
            rates=None if rates is None else DerivedRates.from_dict(rates),
            n_th=meta.get("n_th"),
            eta1=meta.get("eta1"),
            eta2=meta.get("eta2"),
            seed=meta.get("seed"),
            n_avg=meta.get("n_avg"),
        )


def output_noise_spectrum(
    params: ConverterParams,
    rates: DerivedRates,
    which_cavity: int,
    n_th: float,
    floor_quanta: float,
    delta,
) -> NoiseSpectrum:
    """Noise emitted from ``which_cavity`` around its resonance.

    A Lorentzian of full width ``Gamma_total`` sitting on ``floor_quanta``.
    Its height equals the added noise referred to the opposite cavity's
    input times the on-resonance power transmission.
    """
    if not n_th >= 0:
        raise ParameterError("n_th", f"must be >= 0, got {n_th!r}")
    grid = np.asarray(delta, dtype=float)
    if grid.ndim != 1 or grid.size < 1 or np.any(np.diff(grid) <= 0):
        raise ParameterError("delta", "grid must be a strictly increasing 1-D array")
    eta = params.cavity(which_cavity).eta
    peak = emitted_peak(rates, eta, which_cavity, n_th)
    return NoiseSpectrum(
        delta=grid,
        quanta=lorentzian(grid, 0.0, rates.Gamma_total, peak, floor_quanta),
        floor_quanta=float(floor_quanta),
        which_cavity=which_cavity,
        rates=rates,
        n_th=float(n_th),
        eta1=params.cavity1.eta,
        eta2=params.cavity2.eta,
    )


def floor_from_noise_temperature(t_noise: float, f: float) -> float:
    """Occupancy ``1 / (exp(h f / k_B T) - 1)`` of a noise temperature at frequency f."""
    if not t_noise > 0:
        raise ParameterError("t_noise_k", f"must be > 0, got {t_noise!r}")
    if not f > 0:
        raise ParameterError("f_hz", f"must be > 0, got {f!r}")
    return 1.0 / math.expm1(h * f / (k_B * t_noise))


def floor_rayleigh_jeans(t_noise: float, f: float) -> float:
    """High-temperature approximation ``k_B T / (h f)``, for comparison."""
    if not t_noise > 0:
        raise ParameterError("t_noise_k", f"must be > 0, got {t_noise!r}")
    return k_B * t_noise / (h * f)


def synthesize_spectrum(spectrum: NoiseSpectrum, n_avg: float, seed: int) -> NoiseSpectrum:
    """Add radiometer fluctuations, sigma = value / sqrt(n_avg), per bin.

    Deterministic for a given ``seed``; ``n_avg = inf`` returns the input values.
    """
    if seed is None:
        raise ParameterError("seed", "an explicit seed is required")
    if not n_avg > 0:
        raise ParameterError("n_avg", f"must be > 0, got {n_avg!r}")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(spectrum.quanta.size)
    sigma = spectrum.quanta / math.sqrt(n_avg)
    return replace(spectrum, quanta=spectrum.quanta + sigma * noise, seed=int(seed), n_avg=float(n_avg))


def bose_occupancy(f: float, T: float) -> float:
    """Thermal occupancy of a mode at frequency f [Hz] and temperature T [K]."""
    if not T > 0:
        raise ParameterError("temperature_k", f"must be > 0, got {T!r}")
    return 1.0 / math.expm1(h * f / (k_B * T))

