"""Physical constants (SI, CODATA 2018 exact values where defined)."""

import math

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J / K
E_CHARGE = 1.602176634e-19  # C
PHI_0 = 2.067833848e-15  # Wb, flux quantum h / 2e
PLANCK_H = 6.62607015e-34  # J s
R_QUANTUM = PLANCK_H / (4.0 * E_CHARGE**2)  # ohm, h / 4e^2

# Phi_0^2 / hbar^2 = pi^2 / e^2; this prefactor converts the product of two
# dimensionless flux matrix elements and a spectral density (C^2/s) to a rate.
FLUX_RATE_PREFACTOR = math.pi**2 / E_CHARGE**2  # 1 / (C^2 s) * s^2 -> 1/s per C^2/s
