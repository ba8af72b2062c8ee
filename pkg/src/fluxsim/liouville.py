"""Density-matrix propagation with drive and damping.

The equation of motion for the qubit density matrix combines a coherent
part (static spectrum plus a classical flux drive) with the damping
generator built in :mod:`fluxsim.dissipator`.  One time step splits the
evolution symmetrically,

    rho(t + dt) = P_L(dt/2) P_R(dt) P_L(dt/2) rho(t),

where both coherent half-steps ``P_L = exp(-i L dt / 2)`` use the
Liouvillian evaluated at the midpoint ``t + dt/2`` and ``P_R =
exp(R dt)`` applies the damping.  The coherent factor is applied
exactly through the eigendecomposition of the (real-symmetric) midpoint
Hamiltonian, the damping factor through a one-off eigendecomposition of
the rate matrix, so the only stepping error is the second-order
splitting error.

All times and frequencies in this module are dimensionless (units of
1/omega_LC and omega_LC); only the recorded :class:`TimeSeries` is
converted to seconds for fitting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dissipator import RateMatrix
from .errors import ConfigurationError, NumericError
from .fitkit import TimeSeries
from .qubit import EigenSystem

TRACE_TOL = 1e-9
HERMITICITY_TOL = 1e-9
POPULATION_TOL = 1e-8


@dataclass(frozen=True)
class DrivePulse:
    """Classical external flux drive phi(t) = amplitude * cos(w t + phase).

    Amplitude is the peak flux excursion in flux quanta, frequency is
    angular in units of omega_LC.  An optional `envelope` (t_on, t_off)
    window, in units of 1/omega_LC, gates the drive off outside it.
    """

    amplitude: float
    frequency: float
    phase: float = 0.0
    envelope: tuple[float, float] | None = None

    def __post_init__(self):
        if self.amplitude != 0.0 and self.frequency <= 0.0:
            raise ConfigurationError("drive: frequency must be positive")
        if self.amplitude < 0.0:
            raise ConfigurationError("drive: amplitude must be non-negative")
        if self.envelope is not None and not self.envelope[0] < self.envelope[1]:
            raise ConfigurationError("drive: envelope must satisfy t_on < t_off")

    def value(self, t) -> float:
        if self.envelope is not None \
                and not self.envelope[0] <= t < self.envelope[1]:
            return 0.0
        return self.amplitude * np.cos(self.frequency * t + self.phase)


def ground_state_density(n_levels: int) -> np.ndarray:
    """Density matrix of the lowest state."""
    rho = np.zeros((n_levels, n_levels), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def equal_superposition_density(n_levels: int) -> np.ndarray:
    """Equal-weight coherent mixture of the two qubit states.

    All four elements of the qubit block are 1/2: the natural initial
    condition for observing free population and coherence decay at once.
    """
    rho = np.zeros((n_levels, n_levels), dtype=complex)
    rho[:2, :2] = 0.5
    return rho


class Liouvillian:
    """Generator of the damped, driven qubit dynamics on `n_levels` states."""

    def __init__(self, eig: EigenSystem, rates: RateMatrix | None = None,
                 drive: DrivePulse | None = None, n_levels: int | None = None):
        if n_levels is None:
            n_levels = rates.n_levels if rates is not None else eig.n_states
        if not 2 <= n_levels <= eig.n_states:
            raise ConfigurationError(
                f"n_levels must lie between 2 and the {eig.n_states} available states")
        if rates is not None and rates.n_levels != n_levels:
            raise ConfigurationError("rate matrix level count does not match n_levels")
        self.eig = eig
        self.n_levels = n_levels
        self.drive = drive
        self.rates = rates

        n = n_levels
        self.energies = np.array(eig.energies[:n])
        x = np.array(eig.x_elements[:n, :n])
        self._x = 0.5 * (x + x.T)
        # drive coupling (x - x_e) / hbar_scaled; the quadratic-in-phi part
        # of the drive is proportional to the identity and cancels in the
        # commutator, but is kept for faithfulness of hamiltonian(t)
        self._coupling = (self._x - eig.params.x_e * np.eye(n)) / eig.params.hbar_scaled
        self._quadratic = 0.5 / eig.params.hbar_scaled

        self._damping_eig = None
        if rates is not None:
            self._decompose_damping(rates.entries)
        self._propagator_cache: dict[float, np.ndarray] = {}

    # -- building blocks ----------------------------------------------------

    def hamiltonian(self, t: float) -> np.ndarray:
        """N x N Hamiltonian at time t, units of hbar*omega_LC."""
        h = np.diag(self.energies).astype(float)
        if self.drive is not None and self.drive.amplitude != 0.0:
            phi = self.drive.value(t)
            h = h + self._quadratic * phi**2 * np.eye(self.n_levels) \
                - phi * self._coupling
        return h

    def superoperator(self, t: float) -> np.ndarray:
        """Coherent Liouvillian L(t) as a real symmetric N^2 x N^2 matrix.

        Acts on row-major vectorised density matrices:
        ``(L rho)_{mn} = sum H_mk rho_kn - rho_mk H_kn`` so that the
        equation of motion is ``drho/dt = -i L rho + R rho``.
        """
        h = self.hamiltonian(t)
        eye = np.eye(self.n_levels)
        return np.kron(h, eye) - np.kron(eye, h.T)

    def generator(self, t: float) -> np.ndarray:
        """Full complex generator -i L(t) + R for reference propagators."""
        gen = -1j * self.superoperator(t)
        if self.rates is not None:
            gen = gen + self.rates.entries
        return gen

    def _decompose_damping(self, entries: np.ndarray) -> None:
        q, b = np.linalg.eig(entries)
        cond = np.linalg.cond(b)
        if cond > 1e12:
            raise NumericError(
                f"damping-rate matrix eigenvectors are ill-conditioned "
                f"(cond={cond:.2e}); a scaling-and-squaring matrix exponential "
                f"would be needed for this parameter set")
        self._damping_eig = (b, q, np.linalg.inv(b))

    def damping_propagator(self, dt: float) -> np.ndarray:
        """exp(R dt) on vectorised density matrices (identity without rates)."""
        mat = self._propagator_cache.get(dt)
        if mat is not None:
            return mat
        n2 = self.n_levels**2
        if self._damping_eig is None:
            mat = np.eye(n2)
        else:
            b, q, binv = self._damping_eig
            mat = (b * np.exp(q * dt)) @ binv
            imag_peak = np.abs(mat.imag).max()
            if imag_peak > 1e-10:
                raise NumericError(
                    f"damping propagator lost realness (residual {imag_peak:.2e})")
            mat = mat.real
        self._propagator_cache[dt] = mat
        return mat

    def _half_step_unitary(self, t_mid: float, dt: float) -> np.ndarray:
        """U with U rho U^dagger = exp(-i L(t_mid) dt/2) rho (L coherent)."""
        w, v = np.linalg.eigh(self.hamiltonian(t_mid))
        return (v * np.exp(-0.5j * w * dt)) @ v.T

    def step_matrix(self, t: float, dt: float) -> np.ndarray:
        """Complex N^2 x N^2 matrix advancing vec(rho) from t to t + dt."""
        u = self._half_step_unitary(t + 0.5 * dt, dt)
        u16 = np.kron(u, u.conj())
        return u16 @ self.damping_propagator(dt) @ u16

    # -- single reference step ----------------------------------------------

    def step(self, rho: np.ndarray, t: float, dt: float) -> np.ndarray:
        """One split step applied to a density matrix (reference path)."""
        u = self._half_step_unitary(t + 0.5 * dt, dt)
        rho = u @ rho @ u.conj().T
        pr = self.damping_propagator(dt)
        rho = (pr @ rho.reshape(-1)).reshape(self.n_levels, self.n_levels)
        return u @ rho @ u.conj().T


def _purify_propagator(mat: np.ndarray, n: int) -> np.ndarray:
    """Project a composed propagator onto trace/Hermiticity preservation.

    Both properties hold exactly for the true propagator, but composing
    tens of thousands of double-precision factors leaves ~1e-12
    structural defects that would otherwise grow linearly over a
    ten-microsecond run and trip the recorded-state checks.  The
    correction is of rounding size, so the dynamics are untouched.
    """
    idx = np.arange(n * n).reshape(n, n)
    swap = idx.T.reshape(-1)
    mat = 0.5 * (mat + mat[np.ix_(swap, swap)].conj())
    trace_covector = np.zeros(n * n)
    trace_covector[:: n + 1] = 1.0
    defect = trace_covector @ mat - trace_covector
    return mat - np.outer(trace_covector, defect) / n


def _drive_substeps(liou: Liouvillian, dt: float) -> int | None:
    """Steps per drive period if dt divides it (nearly) exactly, else None.

    An envelope breaks the periodicity at its edges, so gated drives
    always propagate stepwise.
    """
    drive = liou.drive
    if drive is None or drive.amplitude == 0.0 or drive.envelope is not None:
        return None
    ratio = 2.0 * np.pi / (drive.frequency * dt)
    n_sub = int(round(ratio))
    if n_sub >= 1 and abs(ratio - n_sub) < 1e-9 * n_sub:
        return n_sub
    return None


def _check_record(vec: np.ndarray, n: int, t: float):
    rho = vec.reshape(n, n)
    trace = rho.trace().real
    if abs(trace - 1.0) > TRACE_TOL:
        raise NumericError(f"propagation lost the trace at t={t:g} "
                           f"(deviation {trace - 1.0:.2e})")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > HERMITICITY_TOL:
        raise NumericError(f"propagation lost Hermiticity at t={t:g} "
                           f"(deviation {herm:.2e})")
    pops = rho.diagonal().real
    if pops.min() < -POPULATION_TOL:
        raise NumericError(f"negative population at t={t:g} ({pops.min():.2e})")


def propagate(liou: Liouvillian, rho0: np.ndarray, t_final: float, dt: float,
              record_stride: int = 1, force_stepwise: bool = False) -> TimeSeries:
    """Propagate from t = 0 and record every `record_stride` steps.

    `t_final` and `dt` are in units of 1/omega_LC; the returned
    :class:`TimeSeries` carries times in seconds.  Trace, Hermiticity
    and population positivity are checked at every record.

    Two recorded-propagator fast paths cover the common cases exactly
    (they compose the same split-step matrices, so they agree with the
    stepwise reference to rounding):
    without drive the step matrix is constant, and with a drive whose
    period is an integer number of steps the one-period propagator is
    reused.  `force_stepwise` disables both for cross-checking.
    """
    if dt <= 0.0 or t_final < dt:
        raise ConfigurationError("propagate: need 0 < dt <= t_final")
    if record_stride < 1:
        raise ConfigurationError("propagate: record_stride must be >= 1")
    n = liou.n_levels
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (n, n):
        raise ConfigurationError(f"propagate: initial state must be {n}x{n}")

    n_steps = int(round(t_final / dt))
    n_records = n_steps // record_stride
    if n_records < 1:
        raise ConfigurationError("propagate: fewer than one record; "
                                 "reduce record_stride or extend t_final")

    vec = rho0.reshape(-1).copy()
    times = np.empty(n_records + 1)
    pops = np.empty((n_records + 1, n))
    coh = np.empty(n_records + 1, dtype=complex)

    def store(j, t, v):
        _check_record(v, n, t)
        rho = v.reshape(n, n)
        times[j] = t
        pops[j] = rho.diagonal().real
        coh[j] = rho[0, 1]

    store(0, 0.0, vec)

    n_sub = None if force_stepwise else _drive_substeps(liou, dt)
    driven = liou.drive is not None and liou.drive.amplitude != 0.0

    if not force_stepwise and not driven:
        m_rec = np.linalg.matrix_power(liou.step_matrix(0.0, dt), record_stride)
        m_rec = _purify_propagator(m_rec, n)
        for j in range(1, n_records + 1):
            vec = m_rec @ vec
            store(j, j * record_stride * dt, vec)
    elif n_sub is not None and record_stride % n_sub == 0 \
            and liou.drive.phase == 0.0:
        m_period = np.eye(n * n, dtype=complex)
        for k in range(n_sub):
            m_period = liou.step_matrix(k * dt, dt) @ m_period
        m_period = _purify_propagator(m_period, n)
        m_rec = np.linalg.matrix_power(m_period, record_stride // n_sub)
        m_rec = _purify_propagator(m_rec, n)
        for j in range(1, n_records + 1):
            vec = m_rec @ vec
            store(j, j * record_stride * dt, vec)
    else:
        rho = rho0.copy()
        for k in range(n_records * record_stride):
            rho = liou.step(rho, k * dt, dt)
            if (k + 1) % record_stride == 0:
                store((k + 1) // record_stride, (k + 1) * dt, rho.reshape(-1))

    omega_lc = liou.eig.params.omega_lc
    return TimeSeries(times / omega_lc, pops, coh)
