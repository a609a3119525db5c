"""Scattering of a weak probe through the driven converter.

Two levels of description are provided:

* ``scattering_on_resonance`` -- closed-form power transmission and
  reflections at zero probe detuning, in terms of cooperativities and
  coupling efficiencies only.
* ``scattering_at`` / ``trace`` -- the full linearized input-output model at
  arbitrary detuning, valid at any coupling strength (rotating-wave,
  beam-splitter interaction only).

Full model conventions
----------------------
Modes ``x = (a1, a2, b)`` in frames rotating at the cavity resonances and at
``f_m``; a common probe detuning ``delta`` [Hz] is measured from each cavity
resonance (cavity 1 input at f_c1 + delta converts to cavity 2 output at
f_c2 + delta). Equations of motion::

    dx/dt = -A x + B x_in,     x_out = B^T x - x_in

with ports ``x_in = (cav1 ext, cav2 ext, mech bath, cav1 loss, cav2 loss)``.
``A`` holds half-linewidths on the diagonal and ``+/- i G`` couplings; ``B``
holds the square roots of the port rates. In the Fourier domain
(``x ~ exp(-i 2 pi delta t)``, with every rate already in cyclic units)::

    S(delta) = B^T (A - i delta)^-1 B - 1

``A + A^H = B B^T`` makes ``S`` unitary. The sign of the cavity-2 coupling is
chosen so that ``t(0) > 0``; overall phases are unobservable in the reported
magnitudes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .model import ConverterParams, DerivedRates, derive_rates, drive_for_cooperativity

PORTS = ("cav1", "cav2", "mech", "loss1", "loss2")


def scattering_on_resonance(rates: DerivedRates, eta1: float, eta2: float) -> dict:
    """Power transmission and reflections at zero detuning.

    Returns a dict with ``t_sq``, ``r1_sq`` and ``r2_sq``::

        t_sq  = 4 eta1 eta2 C1 C2 / (1 + C1 + C2)**2
        ri_sq = (1 - 2 eta_i + 2 eta_i C_i / (1 + C1 + C2))**2
    """
    return _on_resonance(rates.C1, rates.C2, eta1, eta2)


def _on_resonance(C1, C2, eta1, eta2) -> dict:
    for name, eta in (("eta1", eta1), ("eta2", eta2)):
        if not 0.0 <= eta <= 1.0:
            raise ParameterError(name, f"must lie in [0, 1], got {eta!r}")
    denom = 1.0 + C1 + C2
    return {
        "t_sq": 4.0 * eta1 * eta2 * C1 * C2 / denom**2,
        "r1_sq": (1.0 - 2.0 * eta1 + 2.0 * eta1 * C1 / denom) ** 2,
        "r2_sq": (1.0 - 2.0 * eta2 + 2.0 * eta2 * C2 / denom) ** 2,
    }


def _system_matrices(params: ConverterParams, rates: DerivedRates):
    c1, c2, m = params.cavity1, params.cavity2, params.mech
    A = np.array(
        [
            [c1.kappa / 2, 0.0, 1j * rates.G1],
            [0.0, c2.kappa / 2, -1j * rates.G2],
            [1j * rates.G1, -1j * rates.G2, m.gamma_m / 2],
        ],
        dtype=complex,
    )
    B = np.zeros((3, 5))
    B[0, 0] = np.sqrt(c1.kappa_ext)
    B[1, 1] = np.sqrt(c2.kappa_ext)
    B[2, 2] = np.sqrt(m.gamma_m)
    B[0, 3] = np.sqrt(c1.kappa_int)
    B[1, 4] = np.sqrt(c2.kappa_int)
    return A, B


def scattering_matrix(params: ConverterParams, rates: DerivedRates, delta) -> np.ndarray:
    """Full 5x5 scattering matrix; ``S[out, in]`` indexed by :data:`PORTS`.

    ``delta`` may be a scalar or an array; for an array the result has shape
    ``(len(delta), 5, 5)``.
    """
    A, B = _system_matrices(params, rates)
    d = np.atleast_1d(np.asarray(delta, dtype=float))
    if not np.all(np.isfinite(d)):
        raise ParameterError("delta", "must be finite")
    M = A[None, :, :] - 1j * d[:, None, None] * np.eye(3)[None, :, :]
    X = np.linalg.solve(M, np.broadcast_to(B.astype(complex), (d.size, 3, 5)))
    S = B.T[None, :, :] @ X - np.eye(5)[None, :, :]
    return S[0] if np.ndim(delta) == 0 else S


@dataclass(frozen=True)
class ScatteringPoint:
    delta: float
    matrix: np.ndarray = field(repr=False)

    @property
    def t(self) -> complex:
        """Transmission cavity-1 input -> cavity-2 output."""
        return complex(self.matrix[1, 0])

    @property
    def t21(self) -> complex:
        """Transmission cavity-2 input -> cavity-1 output."""
        return complex(self.matrix[0, 1])

    @property
    def r1(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def r2(self) -> complex:
        return complex(self.matrix[1, 1])

    @property
    def s_m1(self) -> complex:
        """Mechanical bath -> cavity-1 output."""
        return complex(self.matrix[0, 2])

    @property
    def s_m2(self) -> complex:
        return complex(self.matrix[1, 2])

    @property
    def loss1(self) -> np.ndarray:
        """Amplitudes from cavity-1 and cavity-2 external inputs into the cavity-1 loss port."""
        return self.matrix[3, :2].copy()

    @property
    def loss2(self) -> np.ndarray:
        return self.matrix[4, :2].copy()

    @property
    def signal_block(self) -> np.ndarray:
        """3x3 block over (cav1, cav2, mech); unitary on its own when both eta = 1."""
        return self.matrix[:3, :3].copy()


def scattering_at(params: ConverterParams, rates: DerivedRates, delta: float) -> ScatteringPoint:
    return ScatteringPoint(float(delta), scattering_matrix(params, rates, float(delta)))


@dataclass(frozen=True)
class ScatteringTrace:
    delta: np.ndarray
    matrices: np.ndarray = field(repr=False)
    rates: DerivedRates

    def __len__(self):
        return self.delta.size

    def __getitem__(self, i) -> ScatteringPoint:
        return ScatteringPoint(float(self.delta[i]), self.matrices[i])

    @property
    def t(self) -> np.ndarray:
        return self.matrices[:, 1, 0]

    @property
    def r1(self) -> np.ndarray:
        return self.matrices[:, 0, 0]

    @property
    def r2(self) -> np.ndarray:
        return self.matrices[:, 1, 1]

    def columns(self) -> dict:
        """Magnitude-squared columns for tabular output."""
        return {
            "delta_hz": self.delta,
            "t_sq": np.abs(self.t) ** 2,
            "r1_sq": np.abs(self.r1) ** 2,
            "r2_sq": np.abs(self.r2) ** 2,
        }


def trace(params: ConverterParams, rates: DerivedRates, delta_min: float, delta_max: float, n_points: int) -> ScatteringTrace:
    if int(n_points) != n_points or n_points < 2:
        raise ParameterError("n_points", f"need an integer >= 2, got {n_points!r}")
    if not delta_min < delta_max:
        raise ParameterError("delta_min", f"must be below delta_max ({delta_min!r} >= {delta_max!r})")
    grid = np.linspace(delta_min, delta_max, int(n_points))
    return ScatteringTrace(grid, scattering_matrix(params, rates, grid), rates)


SWEEP_COOPERATIVITY_COLUMNS = ("c_total", "t_sq", "r1_sq", "r2_sq", "gamma_total_hz", "internal_efficiency")
SWEEP_RATIO_COLUMNS = ("ratio", "t_sq", "r1_sq", "r2_sq")


def sweep_cooperativity(params: ConverterParams, c_totals) -> list[dict]:
    """On-resonance response versus total cooperativity with C1 = C2.

    Coupling efficiencies are taken from ``params``; substitute per-point
    values with :meth:`ConverterParams.with_eta` beforehand.
    """
    eta1, eta2 = params.cavity1.eta, params.cavity2.eta
    rows = []
    for ct in c_totals:
        ct = float(ct)
        if not ct >= 0:
            raise ParameterError("c_total", f"must be >= 0, got {ct!r}")
        rates = derive_rates(params, drive_for_cooperativity(params, ct / 2, ct / 2))
        s = scattering_on_resonance(rates, eta1, eta2)
        eff = s["t_sq"] / (eta1 * eta2) if eta1 * eta2 > 0 else float("nan")
        rows.append(
            {
                "c_total": ct,
                "t_sq": s["t_sq"],
                "r1_sq": s["r1_sq"],
                "r2_sq": s["r2_sq"],
                "gamma_total_hz": rates.Gamma_total,
                "internal_efficiency": eff,
            }
        )
    return rows


def sweep_ratio(params: ConverterParams, C1_fixed: float, ratios) -> list[dict]:
    """On-resonance response versus C2/C1 at fixed C1 (beam-splitter tuning)."""
    if not C1_fixed > 0:
        raise ParameterError("C1_fixed", f"must be > 0, got {C1_fixed!r}")
    eta1, eta2 = params.cavity1.eta, params.cavity2.eta
    rows = []
    for x in ratios:
        x = float(x)
        if not x >= 0:
            raise ParameterError("ratio", f"must be >= 0, got {x!r}")
        rates = derive_rates(params, drive_for_cooperativity(params, C1_fixed, x * C1_fixed))
        s = scattering_on_resonance(rates, eta1, eta2)
        rows.append({"ratio": x, **s})
    return rows
