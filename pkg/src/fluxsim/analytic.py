"""Closed-form decoherence times of the effective two-level system.

Restricting the damping-rate matrix to the two lowest qubit states
gives algebraic expressions for the relaxation and decoherence times,
free or driven.  These serve as fast predictors for parameter sweeps
and as cross-checks of the full density-matrix propagation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import BathModel
from .constants import FLUX_RATE_PREFACTOR
from .errors import FitError
from .qubit import EigenSystem


@dataclass(frozen=True)
class CharacteristicTimes:
    """Two-level decoherence summary, times in seconds, rates in 1/s.

    `t1`/`t2`/`t_phi` describe free decay (population, total coherence
    and pure-dephasing); `t1_driven` and `t22_driven` are the common
    decay times of the inversion and of the excited population under a
    resonant drive, `t21_driven` the driven coherence decay.  `kappa1`
    and `kappa2` are the population and coherence damping rates and
    `gamma_minus` their half-difference, which detunes the observed
    Rabi oscillation.
    """

    t1: float
    t2: float
    t_phi: float
    t1_driven: float
    t22_driven: float
    t21_driven: float
    kappa1: float
    kappa2: float
    gamma_minus: float

    @property
    def gamma_drive(self) -> float:
        """Common damping rate of the driven system, (kappa1 + kappa2)/2 in 1/s."""
        return 0.5 * (self.kappa1 + self.kappa2)


def kappa_rates(eig: EigenSystem, bath: BathModel) -> tuple[float, float]:
    """Population and coherence damping rates (kappa1, kappa2) in 1/s.

    kappa1 sums the emission and absorption spectral weights at the
    qubit frequency; kappa2 adds to half of it the zero-frequency
    (dephasing) weight scaled by the difference of the diagonal flux
    elements.
    """
    w10 = eig.splitting(1, 0) * eig.params.omega_lc  # rad/s
    x01 = float(eig.x_elements[0, 1])
    dx = float(eig.x_elements[0, 0] - eig.x_elements[1, 1])
    j_down = bath.spectral_density(w10)
    j_up = bath.spectral_density(-w10)
    j_zero = bath.spectral_density(0.0)
    kappa1 = FLUX_RATE_PREFACTOR * x01**2 * (j_down + j_up)
    kappa2 = 0.5 * kappa1 + 0.5 * FLUX_RATE_PREFACTOR * dx**2 * j_zero
    return float(kappa1), float(kappa2)


def free_decay_times(eig: EigenSystem, bath: BathModel) -> CharacteristicTimes:
    """All characteristic times implied by the two-level rates."""
    kappa1, kappa2 = kappa_rates(eig, bath)
    dephasing = kappa2 - 0.5 * kappa1
    return CharacteristicTimes(
        t1=1.0 / kappa1,
        t2=1.0 / kappa2,
        t_phi=1.0 / dephasing if dephasing > 0.0 else np.inf,
        t1_driven=2.0 / (kappa1 + kappa2),
        t22_driven=2.0 / (kappa1 + kappa2),
        t21_driven=1.0 / kappa2,
        kappa1=kappa1,
        kappa2=kappa2,
        gamma_minus=0.5 * (kappa2 - kappa1),
    )


def bare_rabi_frequency(eig: EigenSystem, drive_amplitude: float) -> float:
    """Rabi frequency of a resonant flux drive, units of omega_LC.

    The drive amplitude is the peak external flux excursion in flux
    quanta; the coupling strength is set by the off-diagonal flux
    element of the qubit transition.
    """
    return drive_amplitude * abs(float(eig.x_elements[0, 1])) / eig.params.hbar_scaled


def observed_rabi_frequency(eig: EigenSystem, bath: BathModel,
                            drive_amplitude: float) -> float:
    """Damping-shifted Rabi frequency, units of omega_LC.

    The asymmetry of the damping rates detunes the oscillation to
    ``sqrt(Omega^2 - gamma_minus^2)``; in the overdamped regime the
    oscillation disappears and 0 is returned.
    """
    omega = bare_rabi_frequency(eig, drive_amplitude)
    times = free_decay_times(eig, bath)
    gm = times.gamma_minus / eig.params.omega_lc
    if omega <= abs(gm):
        return 0.0
    return float(np.sqrt(omega**2 - gm**2))


def quadratic_rate_model(axis_values, rates) -> tuple[float, float]:
    """Fit rates ~ base * (1 + curvature * axis**2) by linear least squares.

    Captures the generic small-coupling shape of a decay-rate sweep: a
    constant plateau with a quadratic rise.  Returns ``(base,
    curvature)``.  Raises :class:`FitError` when fewer than three points
    are available or the fitted plateau is not positive.
    """
    x = np.asarray(axis_values, dtype=float)
    y = np.asarray(rates, dtype=float)
    if x.size < 3:
        raise FitError("quadratic_rate_model: need at least three sweep points")
    design = np.column_stack([np.ones_like(x), x**2])
    (base, slope), *_ = np.linalg.lstsq(design, y, rcond=None)
    if base <= 0.0:
        raise FitError("quadratic_rate_model: fitted plateau is not positive")
    return float(base), float(slope / base)


def power_law_fit(axis_values, observed) -> tuple[float, float]:
    """Fit observed ~ prefactor * axis**exponent on the given window.

    Returns ``(exponent, prefactor)`` from a least-squares line through
    the log-log data.  Raises :class:`FitError` when fewer than three
    points are available or the data are not strictly positive.
    """
    x = np.asarray(axis_values, dtype=float)
    y = np.asarray(observed, dtype=float)
    if x.size < 3:
        raise FitError("power_law_fit: need at least three sweep points")
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise FitError("power_law_fit: data must be strictly positive")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(np.exp(intercept))
