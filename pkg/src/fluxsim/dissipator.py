"""Damping-rate matrix of the qubit in its energy eigenbasis.

The loop flux couples linearly to the bath circuits, so second-order
perturbation theory in that coupling yields a rate matrix acting on the
density-matrix elements ``rho_mn``.  Its real part (built here) drives
population transfer and decoherence; the principal-value part is a
small reactive level shift computed separately for diagnostics and not
propagated.

All rate-matrix entries are dimensionless (units of omega_LC); the
single-transition helper rates are returned in 1/s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate as integrate

from .bath import BathModel
from .constants import FLUX_RATE_PREFACTOR, HBAR, K_B, R_QUANTUM
from .errors import ConfigurationError
from .qubit import EigenSystem


def flatten_index(m: int, n: int, size: int) -> int:
    """Row-major position of the density-matrix element (m, n)."""
    return m * size + n


def transition_frequencies(eig: EigenSystem, n_levels: int) -> np.ndarray:
    """Antisymmetric table W[m, n] = E_m - E_n in units of omega_LC."""
    e = eig.energies[:n_levels]
    return e[:, None] - e[None, :]


def _check_levels(eig: EigenSystem, n_levels: int | None) -> int:
    if n_levels is None:
        n_levels = eig.n_states
    if not 2 <= n_levels <= eig.n_states:
        raise ConfigurationError(
            f"n_levels must lie between 2 and the {eig.n_states} available states")
    return n_levels


def spectral_table(eig: EigenSystem, bath: BathModel, n_levels: int) -> np.ndarray:
    """J evaluated at every transition frequency: J[m, n] = J(omega_mn), C^2/s."""
    w = transition_frequencies(eig, n_levels) * eig.params.omega_lc
    return bath.spectral_density(w.ravel()).reshape(w.shape)


@dataclass
class RateMatrix:
    """Relaxation/decoherence generator on density-matrix elements.

    ``entries[flatten_index(m, n), flatten_index(mp, np)]`` couples
    d(rho_mn)/dt to rho_mpnp; everything is real and in units of
    omega_LC.  The generator preserves Hermiticity and trace of the
    density matrix.
    """

    n_levels: int
    entries: np.ndarray  # (n^2, n^2), real
    omega: np.ndarray  # (n, n) transition frequencies, units of omega_LC

    def __post_init__(self):
        self.entries.setflags(write=False)
        self.omega.setflags(write=False)

    def population_rate(self, target: int, source: int) -> float:
        """Rate feeding population from `source` into `target` (omega_LC units)."""
        n = self.n_levels
        return float(self.entries[flatten_index(target, target, n),
                                  flatten_index(source, source, n)])


def damping_rate_matrix(eig: EigenSystem, bath: BathModel,
                        n_levels: int | None = None) -> RateMatrix:
    """Build the damping-rate matrix from the qubit states and the bath.

    The flux matrix elements sample the bath spectral density at the
    transition frequencies; level pairs enter through products of two
    matrix elements, giving the familiar secular-plus-coherence-mixing
    structure without any rotating-wave truncation.
    """
    n = _check_levels(eig, n_levels)
    x = np.array(eig.x_elements[:n, :n])
    x = 0.5 * (x + x.T)
    jtab = spectral_table(eig, bath, n)  # J[m, k] = J(omega_mk)

    xj = x * jtab.T  # xj[a, b] = x_ab * J(omega_ba)
    a = x @ xj  # a[m, mp] = sum_k x_mk x_kmp J(omega_mpk)
    eye = np.eye(n)
    scale = 0.5 * FLUX_RATE_PREFACTOR / eig.params.omega_lc
    entries = scale * (np.kron(x, xj) + np.kron(xj, x)
                       - np.kron(a, eye) - np.kron(eye, a))
    return RateMatrix(n, entries, transition_frequencies(eig, n))


# -- golden-rule rates for a single transition ------------------------------

def _rate_bracket(delta_e: float, temperature: float, emission: bool) -> float:
    """(1 +/- coth(delta_e / 2kT)) in overflow-safe form; delta_e in joule.

    Emission uses 1 + coth(x/2) = 2/(1 - exp(-x)) and absorption uses
    coth(x/2) - 1 = 2/(exp(x) - 1); both via expm1 so their ratio equals
    exp(x) to machine precision (detailed balance).
    """
    if temperature == 0.0:
        return 2.0 if emission else 0.0
    xth = delta_e / (K_B * temperature)
    if xth < 2e-6:
        # two-term series about x = 0
        return 2.0 / xth + (1.0 if emission else -1.0)
    if emission:
        return 2.0 / -np.expm1(-xth)
    return 2.0 / np.expm1(xth)


def emission_rate(eig: EigenSystem, bath: BathModel,
                  upper: int, lower: int) -> float:
    """Spontaneous-plus-stimulated photon emission rate, in 1/s.

    ``(2 pi / hbar) * R_Q * |x_ul|^2 * (E_u - E_l) * Y_R(omega_ul)
    * (1 + coth((E_u - E_l) / 2 k_B T))`` with the resistance quantum
    R_Q = h/4e^2.  Requires E_upper > E_lower.
    """
    de = eig.splitting(upper, lower)  # units of omega_LC
    if de <= 0.0:
        raise ValueError("emission_rate: 'upper' must lie above 'lower'")
    de_si = de * eig.params.energy_scale
    y = bath.total_admittance(de * eig.params.omega_lc)
    bracket = _rate_bracket(de_si, bath.temperature, emission=True)
    return (2.0 * np.pi / HBAR) * R_QUANTUM * eig.x_elements[upper, lower] ** 2 \
        * de_si * y * bracket


def absorption_rate(eig: EigenSystem, bath: BathModel,
                    upper: int, lower: int) -> float:
    """Thermally stimulated absorption rate for the same transition, 1/s.

    Vanishes at T = 0 and satisfies detailed balance against
    :func:`emission_rate`.
    """
    de = eig.splitting(upper, lower)
    if de <= 0.0:
        raise ValueError("absorption_rate: 'upper' must lie above 'lower'")
    de_si = de * eig.params.energy_scale
    y = bath.total_admittance(de * eig.params.omega_lc)
    bracket = _rate_bracket(de_si, bath.temperature, emission=False)
    return (2.0 * np.pi / HBAR) * R_QUANTUM * eig.x_elements[upper, lower] ** 2 \
        * de_si * y * bracket


# -- principal-value (reactive) part ----------------------------------------

def _pv_integral(bath: BathModel, omega_lc: float, shift: float,
                 cutoff: float = 50.0, window: float = 1e-5) -> float:
    """(1/2pi) PV over J(omega')/(omega' + shift), frequencies in omega_LC.

    The pole is excluded by a symmetric window; the leftover error is
    linear in the window size and is removed by one Richardson step.
    The window must stay well below the thermal scale k_B T / hbar (in
    omega_LC units ~1e-2 at 30 mK), where J varies fastest.  Beyond
    `cutoff` the integrand is extended with a fitted power-law tail.
    """
    j = lambda u: bath.spectral_density(u * omega_lc)
    pole = -shift

    def windowed(delta):
        # Split one unit away from the pole so the adaptive quadrature
        # never mixes the steep 1/(u - pole) wings with the smooth far
        # region in a single extrapolation table.
        segments = [(-cutoff, pole - 1.0), (pole - 1.0, pole - delta),
                    (pole + delta, pole + 1.0), (pole + 1.0, cutoff)]
        total = 0.0
        for lo, hi in segments:
            lo, hi = max(lo, -cutoff), min(hi, cutoff)
            if hi <= lo:
                continue
            interior = [p for p in (0.0,) if lo < p < hi]
            # J is ~1e-29 in SI-derived units, so quad's default absolute
            # tolerance would accept the first estimate; force a purely
            # relative criterion.
            val, _ = integrate.quad(lambda u: j(u) / (u + shift), lo, hi,
                                    points=interior or None, limit=400,
                                    epsabs=0.0, epsrel=1e-10)
            total += val
        return total

    coarse = windowed(window)
    fine = windowed(0.5 * window)
    pv = 2.0 * fine - coarse

    # positive tail: approximate J ~ c * u^p from two samples
    j1, j2 = j(0.5 * cutoff), j(cutoff)
    if j1 > 0.0 and j2 > 0.0:
        p = np.log(j2 / j1) / np.log(2.0)
        c = j2 / cutoff**p
        tail, _ = integrate.quad(lambda u: c * u**p / (u + shift),
                                 cutoff, np.inf, limit=200,
                                 epsabs=0.0, epsrel=1e-10)
        pv += tail
    # the negative tail is Boltzmann-suppressed by exp(-hbar*cutoff*w_LC/kT)
    return pv / (2.0 * np.pi)


def lamb_shift_matrix(eig: EigenSystem, bath: BathModel,
                      n_levels: int | None = None,
                      cutoff: float = 50.0) -> np.ndarray:
    """Reactive (level-shift) companion of the damping-rate matrix.

    Same index layout and units as :class:`RateMatrix.entries`.  It is
    antisymmetric under transposing both element indices and vanishes
    identically on the population block, so it never transfers
    probability; it is returned for diagnostics only.
    """
    n = _check_levels(eig, n_levels)
    x = np.array(eig.x_elements[:n, :n])
    x = 0.5 * (x + x.T)
    w = transition_frequencies(eig, n)

    shifts = np.unique(np.round(w.ravel(), 12))
    table = {s: _pv_integral(bath, eig.params.omega_lc, s, cutoff) for s in shifts}
    f = np.vectorize(lambda s: table[np.round(s, 12)])(w)  # f[m, k] at omega_mk

    xf = x * f  # xf[a, b] = x_ab * f(omega_ab)
    a = x @ xf
    eye = np.eye(n)
    scale = FLUX_RATE_PREFACTOR / eig.params.omega_lc
    return scale * (np.kron(a, eye) - np.kron(eye, a)
                    + np.kron(x, xf) - np.kron(xf, x))
