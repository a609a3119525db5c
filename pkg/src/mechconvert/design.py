"""Inverse problems: drive settings for a target bandwidth, transmission or split ratio."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from scipy.constants import h

from .errors import InfeasibleError, ParameterError
from .model import (
    ConverterParams,
    DerivedRates,
    DriveConfig,
    check_regime,
    derive_rates,
    drive_for_cooperativity,
)
from .noise import added_noise
from .scattering import _on_resonance, scattering_on_resonance

#: input photon flux [1/s] at which transmission compresses by 1 dB (-75 dBm at 8.89 GHz)
DEFAULT_P1DB_FLUX = 5e12

OBJECTIVES = ("bandwidth_hz", "transmission_sq", "split_t_sq")


class CompressionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DesignTarget:
    """One objective plus optional constraints.

    ``c1_fixed`` is required for ``split_t_sq``; ``eta1``/``eta2`` override the
    device values; ``max_drive_photons`` caps either pump.
    """

    bandwidth_hz: float | None = None
    transmission_sq: float | None = None
    split_t_sq: float | None = None
    c1_fixed: float | None = None
    max_drive_photons: float | None = None
    eta1: float | None = None
    eta2: float | None = None

    def __post_init__(self):
        set_ = [k for k in OBJECTIVES if getattr(self, k) is not None]
        if len(set_) != 1:
            raise ParameterError("objective", f"exactly one of {OBJECTIVES} must be set, got {set_}")
        for k in ("c1_fixed", "max_drive_photons"):
            v = getattr(self, k)
            if v is not None and not v > 0:
                raise ParameterError(k, f"must be > 0, got {v!r}")
        if self.split_t_sq is not None and self.c1_fixed is None:
            raise ParameterError("c1_fixed", "required for a split-ratio target")

    @property
    def objective(self) -> str:
        return next(k for k in OBJECTIVES if getattr(self, k) is not None)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> DesignTarget:
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ParameterError(sorted(unknown)[0], "unknown design-target key")
        return cls(**{k: (None if v is None else float(v)) for k, v in d.items()})


@dataclass(frozen=True)
class DesignSolution:
    drive: DriveConfig
    rates: DerivedRates
    t_sq: float
    r1_sq: float
    r2_sq: float
    gamma_total: float
    n_add: tuple[float, float]
    pump_power_w: tuple[float, float]
    feasible: bool = True
    flags: dict = field(default_factory=dict)
    label: str = ""

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "drive": self.drive.to_dict(),
            "rates": self.rates.to_dict(),
            "predicted": {
                "t_sq": self.t_sq,
                "r1_sq": self.r1_sq,
                "r2_sq": self.r2_sq,
                "gamma_total_hz": self.gamma_total,
                "n_add_1": self.n_add[0],
                "n_add_2": self.n_add[1],
            },
            "pump_power_w": list(self.pump_power_w),
            "feasible": self.feasible,
            "flags": dict(self.flags),
        }


def _solution(params: ConverterParams, drive: DriveConfig, max_photons=None, label="") -> DesignSolution:
    rates = derive_rates(params, drive)
    s = scattering_on_resonance(rates, params.cavity1.eta, params.cavity2.eta)
    if rates.C1 > 0 and rates.C2 > 0:
        noise = added_noise(rates, params.cavity1.eta, params.cavity2.eta, params.mech.n_th)
        n_add = (noise.n_add_1, noise.n_add_2)
    else:
        n_add = (math.inf, math.inf)
    regime = check_regime(params, rates)
    flags = {
        "sideband_resolved": list(regime.sideband_resolved),
        "weak_coupling": list(regime.weak_coupling),
        "warnings": list(regime.warnings),
    }
    feasible = True
    if max_photons is not None:
        within = max(drive.n1, drive.n2) <= max_photons
        flags["within_max_drive_photons"] = within
        feasible = within
    return DesignSolution(
        drive=drive,
        rates=rates,
        t_sq=s["t_sq"],
        r1_sq=s["r1_sq"],
        r2_sq=s["r2_sq"],
        gamma_total=rates.Gamma_total,
        n_add=n_add,
        pump_power_w=(drive_power(params, 1, drive.n1), drive_power(params, 2, drive.n2)),
        feasible=feasible,
        flags=flags,
        label=label,
    )


def solve_bandwidth(params: ConverterParams, target_bw: float, balanced: bool = True, C1_fixed: float | None = None) -> DesignSolution:
    """Drives giving a conversion bandwidth ``gamma_m (1 + C1 + C2) = target_bw``.

    Balanced by default; with ``balanced=False`` pass ``C1_fixed`` and the
    remainder goes to cavity 2.
    """
    gm = params.mech.gamma_m
    if not target_bw >= gm:
        raise InfeasibleError(f"bandwidth {target_bw:g} Hz is below the intrinsic linewidth {gm:g} Hz", max_achievable=None)
    c_total = target_bw / gm - 1.0
    if balanced:
        C1 = C2 = 0.5 * c_total
    else:
        if C1_fixed is None:
            raise ParameterError("C1_fixed", "required when balanced=False")
        if C1_fixed > c_total:
            raise InfeasibleError(f"C1 = {C1_fixed:g} alone exceeds the total cooperativity {c_total:g}")
        C1, C2 = C1_fixed, c_total - C1_fixed
    return _solution(params, drive_for_cooperativity(params, C1, C2), label="bandwidth")


def max_split_transmission(eta1: float, eta2: float, C1: float) -> float:
    """Largest on-resonance ``|t|^2`` reachable by tuning C2 at fixed C1 (attained at C2 = 1 + C1)."""
    return eta1 * eta2 * C1 / (1.0 + C1)


def split_roots(eta1: float, eta2: float, C1: float, target_t_sq: float) -> tuple[float, float]:
    """Both C2 solving ``4 eta1 eta2 C1 C2 / (1 + C1 + C2)^2 = target``.

    With ``a = 1 + C1`` and ``k = 4 eta1 eta2 C1`` the condition is the
    quadratic ``T C2^2 + (2 a T - k) C2 + T a^2 = 0``. The roots multiply to
    ``a^2``, so the lesser is taken from the greater to avoid cancellation.
    """
    if not C1 > 0:
        raise ParameterError("C1_fixed", f"must be > 0, got {C1!r}")
    if not target_t_sq > 0:
        raise ParameterError("target_t_sq", f"must be > 0, got {target_t_sq!r}")
    a = 1.0 + C1
    k = 4.0 * eta1 * eta2 * C1
    t_max = max_split_transmission(eta1, eta2, C1)
    T = target_t_sq
    disc = k * (k - 4.0 * a * T)
    if T > t_max:
        if math.isclose(T, t_max, rel_tol=1e-12):
            return a, a
        raise InfeasibleError(f"|t|^2 = {T:g} exceeds the maximum {t_max:.6g} reachable at C1 = {C1:g}", max_achievable=t_max)
    greater = ((k - 2.0 * a * T) + math.sqrt(max(disc, 0.0))) / (2.0 * T)
    lesser = a * a / greater
    return lesser, greater


def solve_split(params: ConverterParams, C1_fixed: float, target_t_sq: float) -> dict[str, DesignSolution]:
    """Beam-splitter setting: the C2 values giving ``target_t_sq`` at fixed C1.

    Returns ``{"lesser": ..., "greater": ...}``; at the tangency the two
    coincide.
    """
    eta1, eta2 = params.cavity1.eta, params.cavity2.eta
    lo, hi = split_roots(eta1, eta2, C1_fixed, target_t_sq)
    return {
        "lesser": _solution(params, drive_for_cooperativity(params, C1_fixed, lo), label="lesser"),
        "greater": _solution(params, drive_for_cooperativity(params, C1_fixed, hi), label="greater"),
    }


def solve_transmission(params: ConverterParams, target_t_sq: float) -> DesignSolution:
    """Balanced drive (C1 = C2 = C) reaching a target on-resonance ``|t|^2``.

    ``sqrt(T) = 2 sqrt(eta1 eta2) C / (1 + 2C)``, feasible below ``eta1 eta2``.
    """
    e = params.cavity1.eta * params.cavity2.eta
    if not 0 <= target_t_sq < e:
        raise InfeasibleError(f"|t|^2 = {target_t_sq:g} is not below the ceiling eta1*eta2 = {e:.6g}", max_achievable=e)
    s = math.sqrt(target_t_sq)
    C = s / (2.0 * (math.sqrt(e) - s))
    return _solution(params, drive_for_cooperativity(params, C, C), label="transmission")


def solve(params: ConverterParams, target: DesignTarget) -> list[DesignSolution]:
    """Dispatch a :class:`DesignTarget`; split targets yield two solutions."""
    p = params.with_eta(target.eta1, target.eta2)
    obj = target.objective
    if obj == "bandwidth_hz":
        if target.c1_fixed is not None:
            sols = [solve_bandwidth(p, target.bandwidth_hz, balanced=False, C1_fixed=target.c1_fixed)]
        else:
            sols = [solve_bandwidth(p, target.bandwidth_hz)]
    elif obj == "transmission_sq":
        sols = [solve_transmission(p, target.transmission_sq)]
    else:
        sols = list(solve_split(p, target.c1_fixed, target.split_t_sq).values())
    if target.max_drive_photons is not None:
        sols = [_solution(p, s.drive, target.max_drive_photons, s.label) for s in sols]
    return sols


def predicted_from_drive(params: ConverterParams, drive: DriveConfig) -> dict:
    """Observables regenerated from a drive alone, for round-trip checks."""
    rates = derive_rates(params, drive)
    return {**_on_resonance(rates.C1, rates.C2, params.cavity1.eta, params.cavity2.eta), "gamma_total": rates.Gamma_total}


def drive_power(params: ConverterParams, which_cavity: int, n_photons: float) -> float:
    """Pump power [W] at the port that sustains ``n_photons`` in a cavity.

    The pump sits at ``f_c - f_m``. A single-port cavity driven at detuning
    ``Delta`` holds ``n = kappa_ext * Phi / ((kappa/2)^2 + Delta^2)`` photons
    for an incident flux ``Phi = P / (h f_drive)``, all rates angular. Written
    with cyclic rates (kappa, f_m in Hz) the 2 pi factors leave::

        P = n h f_drive 2 pi ((kappa/2)^2 + f_m^2) / kappa_ext
    """
    if not n_photons >= 0:
        raise ParameterError("n_photons", f"must be >= 0, got {n_photons!r}")
    cav = params.cavity(which_cavity)
    if n_photons == 0:
        return 0.0
    if cav.kappa_ext == 0:
        raise InfeasibleError(f"cavity {which_cavity} has no external coupling; it cannot be pumped")
    f_drive = cav.f_c - params.mech.f_m
    return n_photons * h * f_drive * 2.0 * math.pi * ((cav.kappa / 2.0) ** 2 + params.mech.f_m**2) / cav.kappa_ext


def photon_flux(power_dbm: float, f: float) -> float:
    """Photon flux [1/s] of a tone of ``power_dbm`` at frequency ``f`` [Hz]."""
    if not f > 0:
        raise ParameterError("f_hz", f"must be > 0, got {f!r}")
    if power_dbm == -math.inf:
        return 0.0
    return 10.0 ** ((power_dbm - 30.0) / 10.0) / (h * f)


def check_compression(flux: float, configured_p1db_flux: float = DEFAULT_P1DB_FLUX) -> bool:
    """True (and a :class:`CompressionWarning`) when ``flux`` exceeds the 1 dB compression ceiling."""
    if not configured_p1db_flux > 0:
        raise ParameterError("p1db_flux", f"must be > 0, got {configured_p1db_flux!r}")
    over = flux > configured_p1db_flux
    if over:
        warnings.warn(
            f"input flux {flux:.3g}/s exceeds the 1 dB compression ceiling {configured_p1db_flux:.3g}/s",
            CompressionWarning,
            stacklevel=2,
        )
    return over
