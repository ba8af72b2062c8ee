"""Decoherence simulator for a driven two-dimensional SQUID flux qubit.

The pipeline: solve the two-dimensional flux eigenproblem, evaluate the
admittance noise of the attached control and readout circuits, build
the damping-rate matrix in the qubit eigenbasis, propagate the density
matrix with a split-step integrator, and extract decay times and Rabi
parameters by least-squares fits.
"""

from .analytic import (CharacteristicTimes, bare_rabi_frequency,
                       free_decay_times, kappa_rates, observed_rabi_frequency,
                       power_law_fit, quadratic_rate_model)
from .bath import BathModel, ControlCircuitParams, ReadoutCircuitParams
from .config import RunConfig, SweepSpec, load_config
from .dissipator import (RateMatrix, absorption_rate, damping_rate_matrix,
                         emission_rate, flatten_index, lamb_shift_matrix)
from .errors import ConfigurationError, FitError, FluxsimError, NumericError
from .fitkit import (FitResult, TimeSeries, fit_damped_sine,
                     fit_driven_coherence, fit_driven_inversion,
                     fit_driven_population, fit_exponential_decay,
                     fit_free_coherence, fit_free_inversion)
from .liouville import (DrivePulse, Liouvillian, equal_superposition_density,
                        ground_state_density, propagate)
from .qubit import (EigenSystem, GridSpec, SquidParams, build_hamiltonian,
                    cached_eigensystem, harmonic_frequencies, potential,
                    solve_eigensystem, sweep_spectrum)

__version__ = "1.0.0"

__all__ = [
    "BathModel", "CharacteristicTimes", "ConfigurationError",
    "ControlCircuitParams", "DrivePulse", "EigenSystem", "FitError",
    "FitResult", "FluxsimError", "GridSpec", "Liouvillian", "NumericError",
    "RateMatrix", "ReadoutCircuitParams", "RunConfig", "SquidParams",
    "SweepSpec", "TimeSeries", "absorption_rate", "bare_rabi_frequency",
    "build_hamiltonian", "cached_eigensystem", "damping_rate_matrix",
    "emission_rate", "equal_superposition_density", "fit_damped_sine",
    "fit_driven_coherence", "fit_driven_inversion", "fit_driven_population",
    "fit_exponential_decay", "fit_free_coherence", "fit_free_inversion",
    "flatten_index", "free_decay_times", "ground_state_density",
    "harmonic_frequencies", "kappa_rates", "lamb_shift_matrix", "load_config",
    "observed_rabi_frequency", "potential", "power_law_fit", "propagate",
    "quadratic_rate_model",
    "solve_eigensystem", "sweep_spectrum",
]
