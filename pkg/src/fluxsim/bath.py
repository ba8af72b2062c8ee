"""Dissipative environment seen by the qubit loop.

Two external circuits load the loop inductance: a low-pass-filtered
current-bias (control) line and a DC-SQUID readout bridge.  Each couples
inductively and presents a real admittance ``Y_R(omega)`` at the loop;
the associated flux-noise spectral density drives relaxation and
dephasing.  Admittances are in siemens, frequencies in rad/s unless a
method explicitly takes units of omega_LC.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import HBAR, K_B, PHI_0
from .errors import ConfigurationError


@dataclass(frozen=True)
class ControlCircuitParams:
    """Filtered current-bias line, mutual-coupled to the loop."""

    l_x: float = 100e-12  # H, line inductance
    c_x: float = 25e-12  # F, filter capacitance
    r_x: float = 70.0  # ohm, series damping resistor
    r_x0: float = 1e3  # ohm, source impedance
    m_x: float = 1.0e-12  # H, mutual inductance to the loop

    def __post_init__(self):
        if min(self.l_x, self.c_x, self.r_x, self.r_x0) <= 0:
            raise ConfigurationError("control circuit: L, C and resistances must be positive")
        if self.m_x < 0:
            raise ConfigurationError("control circuit: mutual inductance must be non-negative")


@dataclass(frozen=True)
class ReadoutCircuitParams:
    """DC-SQUID readout operated as an inductance bridge.

    The two arms carry ``l_10 + l_j1`` and ``l_20 + l_j2``; with equal
    arms the bridge balances and decouples from the qubit.
    """

    l_10: float = 20e-12  # H, geometric inductance, arm 1
    l_20: float = 20e-12  # H, geometric inductance, arm 2
    l_j1: float = 100e-12  # H, Josephson inductance, arm 1
    l_j2: float = 550e-12  # H, Josephson inductance, arm 2
    c_m: float = 20e-12  # F, shunt capacitance
    r_m: float = 70.0  # ohm, series damping resistor
    r_m0: float = 2e4  # ohm, amplifier input impedance
    m_m: float = 3.3e-12  # H, mutual inductance to the loop

    def __post_init__(self):
        if min(self.l_10, self.l_20, self.l_j1, self.l_j2,
               self.c_m, self.r_m, self.r_m0) <= 0:
            raise ConfigurationError("readout circuit: inductances, capacitance and "
                                     "resistances must be positive")
        if self.m_m < 0:
            raise ConfigurationError("readout circuit: mutual inductance must be non-negative")

    @property
    def arm_1(self) -> float:
        return self.l_10 + self.l_j1

    @property
    def arm_2(self) -> float:
        return self.l_20 + self.l_j2

    @property
    def arm_imbalance(self) -> float:
        """Inductance difference between the arms; zero when balanced."""
        return self.arm_2 - self.arm_1

    @property
    def is_balanced(self) -> bool:
        return self.arm_imbalance == 0.0


@dataclass(frozen=True)
class BathModel:
    """Total dissipative load on the qubit loop at temperature T."""

    control: ControlCircuitParams
    readout: ReadoutCircuitParams
    loop_inductance: float  # H, the qubit loop inductance
    temperature: float  # K

    def __post_init__(self):
        if self.loop_inductance <= 0:
            raise ConfigurationError("bath: loop inductance must be positive")
        if self.temperature < 0:
            raise ConfigurationError("bath: temperature must be non-negative")
        if self.control.m_x**2 >= self.loop_inductance * self.control.l_x:
            raise ConfigurationError("control circuit: mutual inductance exceeds "
                                     "the geometric limit M^2 < L*L_x")

    # -- individual admittances -------------------------------------------

    def control_admittance(self, omega) -> np.ndarray:
        """Real part of the control-line admittance at the loop, in S.

        Even in omega; the omega->0 limit M_x^2/(L^2 R_x0) is taken
        analytically.
        """
        c = self.control
        L = self.loop_inductance
        w = np.abs(np.asarray(omega, dtype=float))
        scalar = w.ndim == 0
        w = np.atleast_1d(w)

        denom = 1.0 + w**2 * c.c_x**2 * (c.r_x + c.r_x0) ** 2
        r_eq = c.r_x0 * (1.0 + w**2 * c.c_x**2 * c.r_x * (c.r_x + c.r_x0)) / denom
        inv_ceq = w**2 * c.c_x * c.r_x0**2 / denom  # this is 1/C_eq, ohm/s
        ups = c.m_x**2 - L * c.l_x
        f = c.m_x**2 * r_eq / ups**2
        with np.errstate(divide="ignore", invalid="ignore"):
            g = (2.0 * L * inv_ceq / ups
                 + L**2 / ups**2 * (r_eq**2 + (inv_ceq / w) ** 2))
            y = f / (w**2 + g)
        y = np.where(w == 0.0, c.m_x**2 / (L**2 * c.r_x0), y)
        return float(y[0]) if scalar else y

    def readout_admittance(self, omega) -> np.ndarray:
        """Real part of the readout-bridge admittance at the loop, in S.

        A balanced bridge (equal arm inductances) decouples exactly and
        contributes zero; check :attr:`ReadoutCircuitParams.is_balanced`
        to distinguish this from a genuinely lossless circuit.
        """
        r = self.readout
        L = self.loop_inductance
        w = np.abs(np.asarray(omega, dtype=float))
        scalar = w.ndim == 0
        w = np.atleast_1d(w)

        if r.is_balanced or r.m_m == 0.0:
            y = np.zeros_like(w)
            return float(y[0]) if scalar else y

        l1, l2 = r.arm_1, r.arm_2
        l_dc = l1 + l2
        l_par = l1 * l2 / l_dc
        k_dc_sq = r.m_m**2 / (L * l_dc)
        k_par_sq = r.m_m**2 / (4.0 * L * l_par)

        denom = 1.0 + w**2 * r.c_m**2 * (r.r_m + r.r_m0) ** 2
        r_eq = r.r_m0 * (1.0 + w**2 * r.c_m**2 * r.r_m * (r.r_m + r.r_m0)) / denom
        # 1/(omega^2 C_eq) stays finite as omega -> 0, so carry it whole.
        inv_ceq_w2 = r.c_m * r.r_m0**2 / denom
        f = (r_eq * (L / r.m_m) ** 2 * (2.0 * l_dc / r.arm_imbalance) ** 2
             * (1.0 - k_dc_sq) ** 2)
        g = (l_par * (1.0 - k_par_sq) / (1.0 - k_dc_sq) - inv_ceq_w2) ** 2 / r_eq**2
        y = 1.0 / (f * (1.0 + g * w**2))
        return float(y[0]) if scalar else y

    def total_admittance(self, omega) -> np.ndarray:
        """Sum of the control and readout contributions, in S."""
        return self.control_admittance(omega) + self.readout_admittance(omega)

    # -- noise spectral densities -----------------------------------------

    def spectral_density(self, omega, which: str = "total") -> np.ndarray:
        """Unsymmetrised admittance noise spectrum, in C^2/s.

        ``J(omega) = hbar * omega * Y_R(omega) * (1 + coth(hbar*omega / 2kT))``

        evaluated in a numerically stable form.  Positive (negative)
        frequencies describe emission into (absorption from) the bath,
        with the two sides related by detailed balance.  At T = 0 the
        bracket collapses to a step: 2 for positive, 0 for negative
        frequency.  `which` selects "control", "readout" or "total".
        """
        y_of = {"control": self.control_admittance,
                "readout": self.readout_admittance,
                "total": self.total_admittance}
        try:
            y_func = y_of[which]
        except KeyError:
            raise ConfigurationError(f"spectral_density: unknown branch '{which}'") from None

        w = np.asarray(omega, dtype=float)
        scalar = w.ndim == 0
        w = np.atleast_1d(w)
        y = np.atleast_1d(y_func(w))

        if self.temperature == 0.0:
            bracket_w = np.where(w > 0.0, 2.0, 0.0) * w
        else:
            xth = HBAR * w / (K_B * self.temperature)  # = 2 * (hbar w / 2kT)
            small = np.abs(xth) < 2e-6
            safe = np.where(small, 1.0, xth)
            # omega * (1 + coth(x/2)) = omega * 2/(1 - exp(-x)), written with
            # expm1 so neither small nor large x loses precision; the small-x
            # branch is the two-term series 2kT/hbar + omega.
            with np.errstate(over="ignore"):
                bracket_w = np.where(
                    small,
                    2.0 * K_B * self.temperature / HBAR + w,
                    2.0 * w / -np.expm1(-safe))
        j = HBAR * bracket_w * y
        return float(j[0]) if scalar else j

    def flux_spectral_density(self, omega, which: str = "total") -> np.ndarray:
        """Spectral density of the fluctuating flux drive, Phi_0^2 * J."""
        return PHI_0**2 * self.spectral_density(omega, which)
