"""Stationary states of a two-dimensional SQUID flux qubit.

The device is a superconducting loop with two junctions; its low-energy
dynamics reduce to a particle in two dimensions, where ``x`` is the
common-mode and ``y`` the differential junction phase, both measured in
units of the flux quantum.  Throughout this module energies are given in
units of ``hbar * omega_LC`` with ``omega_LC = 1/sqrt(L*C)``, lengths in
flux quanta and time in ``1/omega_LC``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .constants import HBAR, PHI_0
from .errors import ConfigurationError, NumericError

# Dimensionless masses of the two phase coordinates (common mode is twice
# as heavy, the differential mode half as heavy as the LC reference).
MASS_X = 2.0
MASS_Y = 0.5

_DENSE_LIMIT = 8192  # largest grid solved by a dense eigensolver


@dataclass(frozen=True)
class SquidParams:
    """Electrical parameters of the qubit loop.

    Parameters
    ----------
    L : float
        Loop inductance in henry.
    C : float
        Junction capacitance in farad.
    g : float
        Stiffness ratio of the differential mode (dimensionless).
    beta_l : float
        Screening parameter, ratio of Josephson to inductive energy.
    delta_beta_l : float
        Junction asymmetry contribution to the screening term.
    x_e, y_e : float
        Applied common-mode / differential flux bias in flux quanta.
    """

    L: float = 205e-12  # H
    C: float = 32.5e-15  # F
    g: float = 17.0
    beta_l: float = 3.7
    delta_beta_l: float = 0.0
    x_e: float = 0.4991
    y_e: float = 0.387

    def __post_init__(self):
        if self.L <= 0 or self.C <= 0:
            raise ConfigurationError("squid: L and C must be positive")
        if self.g <= 0:
            raise ConfigurationError("squid: stiffness ratio g must be positive")
        if self.beta_l < 0:
            raise ConfigurationError("squid: beta_l must be non-negative")

    @property
    def omega_lc(self) -> float:
        """Reference angular frequency 1/sqrt(L*C) in rad/s."""
        return 1.0 / np.sqrt(self.L * self.C)

    @property
    def hbar_scaled(self) -> float:
        """Dimensionless Planck constant hbar*sqrt(L/C)/Phi_0**2.

        This plays the role of hbar in the scaled Schroedinger problem;
        its smallness sets how semiclassical the flux dynamics are.
        """
        return HBAR * np.sqrt(self.L / self.C) / PHI_0**2

    @property
    def energy_scale(self) -> float:
        """One energy unit, hbar*omega_LC, in joule."""
        return HBAR * self.omega_lc


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid for the two flux coordinates."""

    x_center: float
    y_center: float
    x_halfwidth: float = 0.6
    y_halfwidth: float = 0.4
    nx: int = 128
    ny: int = 64

    def __post_init__(self):
        if self.nx < 16 or self.ny < 16:
            raise ConfigurationError("grid: need at least 16 points per axis")
        if self.x_halfwidth <= 0 or self.y_halfwidth <= 0:
            raise ConfigurationError("grid: halfwidths must be positive")

    @classmethod
    def centered(cls, params: SquidParams, **kwargs) -> "GridSpec":
        """Grid centered on the flux bias point of `params`."""
        return cls(x_center=params.x_e, y_center=params.y_e, **kwargs)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.linspace(self.x_center - self.x_halfwidth,
                        self.x_center + self.x_halfwidth, self.nx)
        y = np.linspace(self.y_center - self.y_halfwidth,
                        self.y_center + self.y_halfwidth, self.ny)
        return x, y

    @property
    def spacing(self) -> tuple[float, float]:
        dx = 2.0 * self.x_halfwidth / (self.nx - 1)
        dy = 2.0 * self.y_halfwidth / (self.ny - 1)
        return dx, dy


def harmonic_frequencies(params: SquidParams) -> tuple[float, float]:
    """Small-oscillation frequencies (omega_x, omega_y) in units of omega_LC.

    These are exact for ``beta_l = delta_beta_l = 0`` and remain the
    leading scales of the confining well otherwise.
    """
    return 1.0 / np.sqrt(2.0), np.sqrt(2.0 * params.g)


def potential(params: SquidParams, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Potential energy surface in units of hbar*omega_LC.

    `x` and `y` broadcast against each other, so passing a column and a
    row vector returns the surface on the full mesh.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    v = (0.5 * (x - params.x_e) ** 2
         + 0.5 * params.g * (y - params.y_e) ** 2
         - params.beta_l / (4.0 * np.pi**2) * np.cos(2.0 * np.pi * x) * np.cos(np.pi * y)
         + params.delta_beta_l / (4.0 * np.pi**2) * np.sin(2.0 * np.pi * x) * np.sin(np.pi * y))
    return v / params.hbar_scaled


def _kinetic_dvr(n: int, dx: float, mass: float, hbar_scaled: float) -> np.ndarray:
    """Sinc-DVR kinetic matrix, spectrally accurate on a uniform grid."""
    j = np.arange(n)
    diff = j[:, None] - j[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = 2.0 * (-1.0) ** diff / diff.astype(float) ** 2
    np.fill_diagonal(t, np.pi**2 / 3.0)
    return hbar_scaled / (2.0 * mass * dx**2) * t


def _kinetic_fd2(n: int, dx: float, mass: float, hbar_scaled: float) -> np.ndarray:
    """Second-order central-difference kinetic matrix."""
    t = np.zeros((n, n))
    idx = np.arange(n)
    t[idx, idx] = 2.0
    t[idx[:-1], idx[:-1] + 1] = -1.0
    t[idx[:-1] + 1, idx[:-1]] = -1.0
    return hbar_scaled / (2.0 * mass * dx**2) * t


_KINETIC = {"dvr": _kinetic_dvr, "fd2": _kinetic_fd2}


def _kinetic_matrices(params: SquidParams, grid: GridSpec, method: str):
    if method not in _KINETIC:
        raise ConfigurationError(f"unknown kinetic discretisation '{method}'")
    dx, dy = grid.spacing
    # The grid must resolve the harmonic oscillator lengths of the well,
    # otherwise the kinetic band structure is aliased.
    wx, wy = harmonic_frequencies(params)
    sig_x = np.sqrt(params.hbar_scaled / (2.0 * MASS_X * wx))
    sig_y = np.sqrt(params.hbar_scaled / (2.0 * MASS_Y * wy))
    if dx > 2.0 * sig_x or dy > 2.0 * sig_y:
        raise ConfigurationError(
            "grid: spacing too coarse for the well "
            f"(dx={dx:.3g} vs oscillator length {sig_x:.3g}; "
            f"dy={dy:.3g} vs {sig_y:.3g}); increase nx/ny")
    build = _KINETIC[method]
    tx = build(grid.nx, dx, MASS_X, params.hbar_scaled)
    ty = build(grid.ny, dy, MASS_Y, params.hbar_scaled)
    return tx, ty


def build_hamiltonian(params: SquidParams, grid: GridSpec,
                      method: str = "dvr") -> np.ndarray:
    """Dense grid Hamiltonian, entries in units of hbar*omega_LC.

    Row/column index runs over grid points in row-major (x outer, y
    inner) order.  The matrix is real symmetric.
    """
    tx, ty = _kinetic_matrices(params, grid, method)
    x, y = grid.axes()
    v = potential(params, x[:, None], y[None, :])
    n = grid.nx * grid.ny
    h = np.zeros((n, n))
    h4 = h.reshape(grid.nx, grid.ny, grid.nx, grid.ny)
    for k in range(grid.ny):  # kinetic energy along x, block-diagonal in y
        h4[:, k, :, k] += tx
    for i in range(grid.nx):  # kinetic energy along y
        h4[i, :, i, :] += ty
    h[np.diag_indices(n)] += v.ravel()
    return h


@dataclass
class EigenSystem:
    """Lowest stationary states of the flux qubit on a grid.

    Attributes
    ----------
    energies : ndarray, shape (n,)
        Eigenenergies in units of hbar*omega_LC, ascending.
    states : ndarray, shape (n, nx, ny)
        Real eigenfunctions normalised w.r.t. the grid quadrature.  The
        sign of each state is fixed so that its largest-magnitude sample
        is positive (arbitrary only inside degenerate subspaces).
    x_elements, y_elements : ndarray, shape (n, n)
        Matrix elements of the flux coordinates between the states.
    """

    params: SquidParams
    grid: GridSpec
    energies: np.ndarray
    states: np.ndarray
    x_elements: np.ndarray
    y_elements: np.ndarray
    method: str = "dvr"

    def __post_init__(self):
        for a in (self.energies, self.states, self.x_elements, self.y_elements):
            a.setflags(write=False)

    @property
    def n_states(self) -> int:
        return len(self.energies)

    def splitting(self, upper: int, lower: int) -> float:
        """Transition frequency E_upper - E_lower (units of omega_LC)."""
        return float(self.energies[upper] - self.energies[lower])


def _postprocess(params, grid, vals, vecs, method):
    order = np.argsort(vals)
    vals = np.asarray(vals)[order]
    vecs = np.asarray(vecs)[:, order]
    for m in range(vecs.shape[1]):  # fix the overall sign of each state
        peak = np.argmax(np.abs(vecs[:, m]))
        if vecs[peak, m] < 0.0:
            vecs[:, m] = -vecs[:, m]

    x, y = grid.axes()
    dx, dy = grid.spacing
    xw = vecs * np.repeat(x, grid.ny)[:, None]
    yw = vecs * np.tile(y, grid.nx)[:, None]
    x_el = vecs.T @ xw
    y_el = vecs.T @ yw
    x_el = 0.5 * (x_el + x_el.T)
    y_el = 0.5 * (y_el + y_el.T)

    states = vecs.T.reshape(-1, grid.nx, grid.ny) / np.sqrt(dx * dy)
    edge = max(np.abs(states[:, 0, :]).max(), np.abs(states[:, -1, :]).max(),
               np.abs(states[:, :, 0]).max(), np.abs(states[:, :, -1]).max())
    if edge > 1e-8 * np.abs(states).max():
        raise ConfigurationError(
            f"grid: eigenstates reach the box edge (relative amplitude "
            f"{edge / np.abs(states).max():.2e}); enlarge the halfwidths")
    return EigenSystem(params, grid, vals, states, x_el, y_el, method)


def solve_eigensystem(params: SquidParams, grid: GridSpec | None = None,
                      n_states: int = 4, method: str = "dvr") -> EigenSystem:
    """Solve for the lowest `n_states` stationary states.

    Grids up to 8192 points are handled by a dense symmetric
    eigensolver; larger ones fall back to a matrix-free Lanczos
    iteration.
    """
    if grid is None:
        grid = GridSpec.centered(params)
    n = grid.nx * grid.ny
    if n_states < 2 or n_states > n:
        raise ConfigurationError("n_states must be between 2 and the grid size")

    if n <= _DENSE_LIMIT:
        h = build_hamiltonian(params, grid, method)
        vals, vecs = sla.eigh(h, subset_by_index=[0, n_states - 1],
                              overwrite_a=True)
        del h
    else:
        tx, ty = _kinetic_matrices(params, grid, method)
        x, y = grid.axes()
        v = potential(params, x[:, None], y[None, :])

        def matvec(psi):
            p = psi.reshape(grid.nx, grid.ny)
            return (tx @ p + p @ ty.T + v * p).ravel()

        op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
        try:
            vals, vecs = spla.eigsh(op, k=n_states, which="SA",
                                    maxiter=20000, tol=1e-12)
        except spla.ArpackNoConvergence as exc:
            raise NumericError(
                f"Lanczos eigensolver did not converge on the {grid.nx}x{grid.ny} "
                f"grid: {exc}") from exc
    return _postprocess(params, grid, vals, vecs, method)


@functools.lru_cache(maxsize=8)
def cached_eigensystem(params: SquidParams, grid: GridSpec | None = None,
                       n_states: int = 4, method: str = "dvr") -> EigenSystem:
    """Memoised variant of :func:`solve_eigensystem`.

    Safe because parameter records are frozen and the returned arrays
    are marked read-only.
    """
    return solve_eigensystem(params, grid, n_states, method)


def sweep_spectrum(params: SquidParams, x_bias_values, grid: GridSpec | None = None,
                   n_states: int = 4, method: str = "dvr") -> list[EigenSystem]:
    """Eigensystems for a list of common-mode bias points.

    When no explicit grid is given, the box is re-centered on each bias
    point.  The solves run serially: each dense factorisation already
    uses threaded BLAS and holds a large workspace.
    """
    from dataclasses import replace

    out = []
    for xv in x_bias_values:
        p = replace(params, x_e=float(xv))
        g = grid if grid is not None else GridSpec.centered(p)
        out.append(solve_eigensystem(p, g, n_states, method))
    return out
