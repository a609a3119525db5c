"""Device and drive descriptions for a two-cavity, one-mechanical-mode converter.

All frequencies and rates are cyclic (Hz), i.e. the "/2pi" values one quotes
for a device. Every expression used downstream is homogeneous in the rates, so
no factor of 2pi ever enters the dimensionless scattering or noise results.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import InfeasibleError, ParameterError

WEAK_COUPLING_FRACTION = 0.1


def _require(ok: bool, name: str, msg: str) -> None:
    if not ok:
        raise ParameterError(name, msg)


def _finite(x) -> bool:
    return isinstance(x, (int, float, np.floating, np.integer)) and math.isfinite(x)


@dataclass(frozen=True)
class CavityParams:
    """One microwave cavity.

    Attributes
    ----------
    f_c : float
        Resonance frequency [Hz].
    kappa : float
        Total linewidth [Hz].
    eta : float
        Coupling efficiency kappa_ext / kappa.
    g0 : float
        Vacuum optomechanical coupling rate [Hz].
    t_noise : float or None
        System noise temperature of the readout at ``f_c`` [K].
    """

    f_c: float
    kappa: float
    eta: float
    g0: float
    t_noise: float | None = None

    def __post_init__(self):
        _require(_finite(self.f_c) and self.f_c > 0, "f_c_hz", f"must be > 0, got {self.f_c!r}")
        _require(_finite(self.kappa) and self.kappa > 0, "kappa_hz", f"must be > 0, got {self.kappa!r}")
        _require(_finite(self.eta) and 0.0 <= self.eta <= 1.0, "eta", f"must lie in [0, 1], got {self.eta!r}")
        _require(_finite(self.g0) and self.g0 >= 0, "g0_hz", f"must be >= 0, got {self.g0!r}")
        if self.t_noise is not None:
            _require(_finite(self.t_noise) and self.t_noise > 0, "t_noise_k", f"must be > 0, got {self.t_noise!r}")

    @property
    def kappa_ext(self) -> float:
        return self.eta * self.kappa

    @property
    def kappa_int(self) -> float:
        return (1.0 - self.eta) * self.kappa

    def to_dict(self) -> dict:
        return {
            "f_c_hz": self.f_c,
            "kappa_hz": self.kappa,
            "eta": self.eta,
            "g0_hz": self.g0,
            "t_noise_k": self.t_noise,
        }

    @classmethod
    def from_dict(cls, d: dict) -> CavityParams:
        try:
            return cls(
                f_c=float(d["f_c_hz"]),
                kappa=float(d["kappa_hz"]),
                eta=float(d["eta"]),
                g0=float(d["g0_hz"]),
                t_noise=None if d.get("t_noise_k") is None else float(d["t_noise_k"]),
            )
        except KeyError as exc:
            raise ParameterError(exc.args[0], "missing from cavity record") from None


@dataclass(frozen=True)
class MechanicalParams:
    """Mechanical mode: frequency f_m [Hz], intrinsic damping gamma_m [Hz], bath occupancy n_th."""

    f_m: float
    gamma_m: float
    n_th: float = 0.0

    def __post_init__(self):
        _require(_finite(self.f_m) and self.f_m > 0, "f_m_hz", f"must be > 0, got {self.f_m!r}")
        _require(_finite(self.gamma_m) and self.gamma_m > 0, "gamma_m_hz", f"must be > 0, got {self.gamma_m!r}")
        _require(_finite(self.n_th) and self.n_th >= 0, "n_th", f"must be >= 0, got {self.n_th!r}")

    def to_dict(self) -> dict:
        return {"f_m_hz": self.f_m, "gamma_m_hz": self.gamma_m, "n_th": self.n_th}

    @classmethod
    def from_dict(cls, d: dict) -> MechanicalParams:
        try:
            return cls(f_m=float(d["f_m_hz"]), gamma_m=float(d["gamma_m_hz"]), n_th=float(d.get("n_th", 0.0)))
        except KeyError as exc:
            raise ParameterError(exc.args[0], "missing from mechanical record") from None


@dataclass(frozen=True)
class ConverterParams:
    cavity1: CavityParams
    cavity2: CavityParams
    mech: MechanicalParams

    def __post_init__(self):
        sep = abs(self.cavity1.f_c - self.cavity2.f_c)
        _require(
            sep > max(self.cavity1.kappa, self.cavity2.kappa),
            "f_c_hz",
            f"cavity resonances {sep:g} Hz apart are not resolved by their linewidths",
        )

    def cavity(self, which: int) -> CavityParams:
        if which == 1:
            return self.cavity1
        if which == 2:
            return self.cavity2
        raise ParameterError("which_cavity", f"must be 1 or 2, got {which!r}")

    def with_eta(self, eta1: float | None = None, eta2: float | None = None) -> ConverterParams:
        """Copy with per-operating-point coupling efficiencies substituted."""
        c1, c2 = self.cavity1, self.cavity2
        if eta1 is not None:
            c1 = CavityParams(c1.f_c, c1.kappa, eta1, c1.g0, c1.t_noise)
        if eta2 is not None:
            c2 = CavityParams(c2.f_c, c2.kappa, eta2, c2.g0, c2.t_noise)
        return ConverterParams(c1, c2, self.mech)

    def swapped(self) -> ConverterParams:
        """Same device with the cavity labels exchanged."""
        return ConverterParams(self.cavity2, self.cavity1, self.mech)

    def to_dict(self) -> dict:
        return {
            "cavity1": self.cavity1.to_dict(),
            "cavity2": self.cavity2.to_dict(),
            "mech": self.mech.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> ConverterParams:
        for key in ("cavity1", "cavity2", "mech"):
            if key not in d:
                raise ParameterError(key, "missing from device record")
        return cls(
            CavityParams.from_dict(d["cavity1"]),
            CavityParams.from_dict(d["cavity2"]),
            MechanicalParams.from_dict(d["mech"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> ConverterParams:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DriveConfig:
    """Intracavity pump photon numbers, pumps pinned to the lower sidebands f_c - f_m."""

    n1: float = 0.0
    n2: float = 0.0

    def __post_init__(self):
        _require(_finite(self.n1) and self.n1 >= 0, "n1", f"must be >= 0, got {self.n1!r}")
        _require(_finite(self.n2) and self.n2 >= 0, "n2", f"must be >= 0, got {self.n2!r}")

    def to_dict(self) -> dict:
        return {"n1": self.n1, "n2": self.n2}

    @classmethod
    def from_dict(cls, d: dict) -> DriveConfig:
        return cls(n1=float(d.get("n1", 0.0)), n2=float(d.get("n2", 0.0)))


@dataclass(frozen=True)
class DerivedRates:
    G1: float
    G2: float
    Gamma1: float
    Gamma2: float
    C1: float
    C2: float
    Gamma_total: float
    f_drive1: float
    f_drive2: float
    n_m: float

    @property
    def C_total(self) -> float:
        return self.C1 + self.C2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> DerivedRates:
        return cls(**{k: float(d[k]) for k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class RegimeReport:
    sideband_resolved: tuple[bool, bool]
    weak_coupling: tuple[bool, bool]
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(self.sideband_resolved) and all(self.weak_coupling)


def derive_rates(params: ConverterParams, drive: DriveConfig) -> DerivedRates:
    """Scattering rates, cooperativities and bandwidth for a given drive.

    In the resolved-sideband limit each pump produces a photon-phonon
    scattering rate ``Gamma_i = 4 g0_i**2 n_i / kappa_i``; the conversion
    bandwidth is ``gamma_m + Gamma_1 + Gamma_2`` and the mechanical mode is
    cooled to ``n_th / (1 + C1 + C2)``.
    """
    c1, c2, m = params.cavity1, params.cavity2, params.mech
    G1 = c1.g0 * math.sqrt(drive.n1)
    G2 = c2.g0 * math.sqrt(drive.n2)
    Gamma1 = 4.0 * G1**2 / c1.kappa
    Gamma2 = 4.0 * G2**2 / c2.kappa
    C1 = Gamma1 / m.gamma_m
    C2 = Gamma2 / m.gamma_m
    return DerivedRates(
        G1=G1,
        G2=G2,
        Gamma1=Gamma1,
        Gamma2=Gamma2,
        C1=C1,
        C2=C2,
        Gamma_total=m.gamma_m + Gamma1 + Gamma2,
        f_drive1=c1.f_c - m.f_m,
        f_drive2=c2.f_c - m.f_m,
        n_m=m.n_th / (1.0 + C1 + C2),
    )


def _photons_for(cav: CavityParams, C: float, gamma_m: float, name: str) -> float:
    _require(_finite(C) and C >= 0, name, f"cooperativity must be >= 0, got {C!r}")
    if C == 0:
        return 0.0
    if cav.g0 == 0:
        raise InfeasibleError(f"{name}={C:g} requested but g0 = 0 for that cavity")
    return C * gamma_m * cav.kappa / (4.0 * cav.g0**2)


def drive_for_cooperativity(params: ConverterParams, C1: float, C2: float) -> DriveConfig:
    """Intracavity photon numbers that realize the requested cooperativities."""
    gm = params.mech.gamma_m
    return DriveConfig(
        n1=_photons_for(params.cavity1, C1, gm, "C1"),
        n2=_photons_for(params.cavity2, C2, gm, "C2"),
    )


def check_regime(params: ConverterParams, rates: DerivedRates) -> RegimeReport:
    """Flag sideband resolution (kappa < f_m) and weak coupling (Gamma <= kappa/10)."""
    cavs = (params.cavity1, params.cavity2)
    gammas = (rates.Gamma1, rates.Gamma2)
    resolved = tuple(c.kappa < params.mech.f_m for c in cavs)
    weak = tuple(g <= WEAK_COUPLING_FRACTION * c.kappa for c, g in zip(cavs, gammas))
    warnings = []
    for i, (c, g) in enumerate(zip(cavs, gammas), start=1):
        if not resolved[i - 1]:
            warnings.append(
                f"cavity {i}: kappa = {c.kappa:.4g} Hz is not below f_m = {params.mech.f_m:.4g} Hz; "
                "counter-rotating gain and extra noise are not captured by this model"
            )
        if not weak[i - 1]:
            warnings.append(
                f"cavity {i}: Gamma = {g:.4g} Hz exceeds kappa/10 = {c.kappa / 10:.4g} Hz; "
                "closed-form lineshapes are inaccurate, use the full scattering model"
            )
    return RegimeReport(resolved, weak, warnings)


def eta_from_table(powers, etas, power: float) -> float:
    """Linear interpolation of a calibrated coupling efficiency versus drive power.

    Outside the table the end values are held.
    """
    p = np.asarray(powers, dtype=float)
    e = np.asarray(etas, dtype=float)
    if p.ndim != 1 or p.shape != e.shape or p.size == 0:
        raise ParameterError("eta_table", "powers and etas must be equal-length 1-D sequences")
    if np.any(np.diff(p) <= 0):
        raise ParameterError("eta_table", "powers must be strictly increasing")
    if np.any((e < 0) | (e > 1)):
        raise ParameterError("eta", "tabulated values must lie in [0, 1]")
    return float(np.interp(power, p, e))


def load_device(path: str | Path) -> tuple[ConverterParams, DriveConfig | None]:
    """Read a device JSON file; an optional ``"drive"`` object is returned alongside."""
    d = json.loads(Path(path).read_text())
    drive = DriveConfig.from_dict(d["drive"]) if "drive" in d else None
    return ConverterParams.from_dict(d), drive


def reference_device() -> ConverterParams:
    """The reference two-cavity device, with eta at the top of its calibrated ranges."""
    from importlib import resources

    text = resources.files("mechconvert").joinpath("data/reference_device.json").read_text()
    return ConverterParams.from_json(text)
