"""Modeling, estimation and inverse design for mechanically mediated microwave frequency converters."""

__version__ = "0.1.0"

from .errors import FitError, InfeasibleError, ParameterError
from .model import (
    CavityParams,
    ConverterParams,
    DerivedRates,
    DriveConfig,
    MechanicalParams,
    RegimeReport,
    check_regime,
    derive_rates,
    drive_for_cooperativity,
    reference_device,
)
from .scattering import (
    ScatteringPoint,
    ScatteringTrace,
    scattering_at,
    scattering_matrix,
    scattering_on_resonance,
    sweep_cooperativity,
    sweep_ratio,
    trace,
)
from .noise import (
    AddedNoiseResult,
    NoiseSpectrum,
    added_noise,
    floor_from_noise_temperature,
    output_noise_spectrum,
    synthesize_spectrum,
)
from .estimation import (
    LineCalibration,
    LorentzianFit,
    ThermometryFit,
    fit_lorentzian,
    infer_bath,
    self_calibrate,
    thermometry,
)
from .design import (
    DesignSolution,
    DesignTarget,
    check_compression,
    drive_power,
    photon_flux,
    solve_bandwidth,
    solve_split,
    solve_transmission,
)
