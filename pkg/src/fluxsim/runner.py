"""High-level run orchestration.

Each ``run_*`` function executes one pipeline stage end to end --
eigensolve, bath evaluation, propagation, fitting -- and writes its
delimited output (plus optional figures and a JSON summary) into an
output directory.  These are exactly the entry points the command-line
interface exposes.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import fitkit, io
from .analytic import free_decay_times, observed_rabi_frequency
from .bath import BathModel
from .config import RunConfig, apply_sweep_value
from .dissipator import damping_rate_matrix
from .errors import ConfigurationError, FitError
from .liouville import (DrivePulse, Liouvillian, equal_superposition_density,
                        ground_state_density, propagate)
from .qubit import cached_eigensystem

RECORD_CAP = 2_000_000
#: target sample density on the fastest oscillation of a driven record
SAMPLES_PER_PERIOD = 48


def resolve_threads(requested: int | None = None) -> int:
    """Worker count: explicit argument, FLUXSIM_THREADS, then a default."""
    if requested is not None:
        if requested < 1:
            raise ConfigurationError("threads: must be at least 1")
        return requested
    env = os.environ.get("FLUXSIM_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigurationError(
                f"FLUXSIM_THREADS: expected an integer, got '{env}'") from None
        if n < 1:
            raise ConfigurationError("FLUXSIM_THREADS: must be at least 1")
        return n
    return min(4, os.cpu_count() or 1)


def _eigensystem(cfg: RunConfig):
    n = max(4, cfg.n_levels)
    return cached_eigensystem(cfg.squid, cfg.grid, n, cfg.method)


def _fit_info(fit: fitkit.FitResult) -> dict:
    status = "converged" if fit.converged else "unconverged"
    if fit.model_mismatch:
        status = "model-mismatch"
    return {
        "model": fit.model,
        "status": status,
        "params": {k: float(v) for k, v in fit.params.items()},
        "rms_residual": fit.rms_residual,
        "signal_range": fit.signal_range,
        "iterations": fit.iterations,
        **fit.meta,
    }


# -- spectrum ----------------------------------------------------------------

def run_spectrum(cfg: RunConfig, out_dir: str, plot: bool = True) -> dict:
    """Eigenenergies and flux matrix elements along the bias axis.

    One row per configured ``x_e`` value; with an empty list only the
    header is emitted.  Energies are in units of omega_LC, matrix
    elements in flux quanta.
    """
    n = max(4, cfg.n_levels)
    columns = ["x_e"] + [f"energy_{k}" for k in range(n)] + \
        [f"x_{m}{k}" for m in range(n) for k in range(m, n)]
    rows = []
    for xv in cfg.spectrum_x_values:
        params = replace(cfg.squid, x_e=float(xv))
        grid = replace(cfg.grid, x_center=float(xv))
        eig = cached_eigensystem(params, grid, n, cfg.method)
        row = [float(xv)] + [float(e) for e in eig.energies]
        row += [float(eig.x_elements[m, k])
                for m in range(n) for k in range(m, n)]
        rows.append(row)

    csv_path = io.write_csv(os.path.join(out_dir, "spectrum.csv"), columns, rows)
    summary = {"mode": "spectrum", "csv": csv_path, "points": len(rows)}
    if rows:
        eig = cached_eigensystem(replace(cfg.squid, x_e=rows[0][0]),
                                 replace(cfg.grid, x_center=rows[0][0]),
                                 n, cfg.method)
        summary["first_point"] = {
            "splitting_10": eig.splitting(1, 0),
            "splitting_20": eig.splitting(2, 0),
            "x_01": float(eig.x_elements[0, 1]),
        }
    if plot and rows:
        from . import plots
        summary["figure"] = plots.render_spectrum(
            csv_path, os.path.join(out_dir, "spectrum.png"))
    io.write_summary(os.path.join(out_dir, "spectrum_summary.json"), summary)
    return summary


# -- bath --------------------------------------------------------------------

def run_bath(cfg: RunConfig, out_dir: str, plot: bool = True) -> dict:
    """Admittances and noise spectral densities on a frequency grid."""
    bath = cfg.bath_model()
    omega = np.linspace(0.0, cfg.bath_omega_max, cfg.bath_points)
    w_si = omega * cfg.squid.omega_lc
    y_c = bath.control_admittance(w_si)
    y_r = bath.readout_admittance(w_si)
    j_c = bath.spectral_density(w_si, "control")
    j_r = bath.spectral_density(w_si, "readout")
    j_t = j_c + j_r

    columns = ["omega", "y_control", "y_readout", "y_total",
               "j_control", "j_readout", "j_total"]
    rows = [[float(omega[i]), float(y_c[i]), float(y_r[i]),
             float(y_c[i] + y_r[i]), float(j_c[i]), float(j_r[i]),
             float(j_t[i])] for i in range(omega.size)]
    csv_path = io.write_csv(os.path.join(out_dir, "bath.csv"), columns, rows)

    peak = int(np.argmax(j_t))
    summary = {
        "mode": "bath",
        "csv": csv_path,
        "balanced_readout": bath.readout.is_balanced,
        "peak_omega": float(omega[peak]),
        "peak_j_total": float(j_t[peak]),
    }
    if plot:
        from . import plots
        summary["figure"] = plots.render_bath(
            csv_path, os.path.join(out_dir, "bath.png"))
    io.write_summary(os.path.join(out_dir, "bath_summary.json"), summary)
    return summary


# -- shared propagation helpers ----------------------------------------------

def _record_stride(n_steps: int, records: int, n_sub: int | None,
                   fastest_period_steps: float | None) -> int:
    """Stride satisfying the record target, sampling density and cap."""
    stride = max(1, n_steps // records)
    if fastest_period_steps is not None:
        by_sampling = max(1, int(fastest_period_steps / SAMPLES_PER_PERIOD))
        stride = min(stride, by_sampling)
    if n_sub is not None:  # keep the drive-periodic fast path available
        stride = max(n_sub, (stride // n_sub) * n_sub)
    while n_steps // stride > RECORD_CAP:
        stride *= 2
    return stride


def _propagate_free(cfg: RunConfig, eig, rates, t_final_s: float,
                    divisor: int | None = None) -> tuple[fitkit.TimeSeries, dict]:
    divisor = divisor or cfg.dt_divisor
    dt = 2.0 * np.pi / (eig.splitting(1, 0) * divisor)
    t_total = t_final_s * cfg.squid.omega_lc
    n_steps = max(1, int(round(t_total / dt)))
    stride = _record_stride(n_steps, cfg.records, None, None)
    liou = Liouvillian(eig, rates, None, cfg.n_levels)
    series = propagate(liou, equal_superposition_density(cfg.n_levels),
                       n_steps * dt, dt, stride)
    info = {"dt": dt, "dt_divisor": divisor, "steps": n_steps,
            "record_stride": stride, "t_final_s": t_final_s}
    return series, info


def _propagate_driven(cfg: RunConfig, eig, rates, drive: DrivePulse,
                      t_final_s: float, omega_obs: float, n_levels: int,
                      divisor: int | None = None) -> tuple[fitkit.TimeSeries, dict]:
    divisor = divisor or cfg.dt_divisor
    dt = 2.0 * np.pi / (drive.frequency * divisor)
    t_total = t_final_s * cfg.squid.omega_lc
    n_steps = max(divisor, int(round(t_total / dt)))
    period_steps = None
    if omega_obs > 0.0:
        period_steps = (2.0 * np.pi / omega_obs) / dt
    stride = _record_stride(n_steps, cfg.records, divisor, period_steps)
    liou = Liouvillian(eig, rates, drive, n_levels)
    series = propagate(liou, ground_state_density(n_levels),
                       n_steps * dt, dt, stride)
    info = {"dt": dt, "dt_divisor": divisor, "steps": n_steps,
            "record_stride": stride, "t_final_s": t_final_s}
    return series, info


def _series_rows(series: fitkit.TimeSeries):
    cols = ["time_s"] + [f"rho_{k}{k}" for k in range(series.n_levels)] + \
        ["re_rho_01", "im_rho_01", "coherence_sq"]
    csq = series.coherence_sq()
    rows = []
    for i, t in enumerate(series.times):
        row = [float(t)] + [float(p) for p in series.populations[i]]
        row += [float(series.coherence[i].real), float(series.coherence[i].imag),
                float(csq[i])]
        rows.append(row)
    return cols, rows


def _pure_dephasing_time(t1: float, t2: float) -> float:
    rate = 1.0 / t2 - 0.5 / t1
    return 1.0 / rate if rate > 0.0 else np.inf


# -- free decay ----------------------------------------------------------------

def run_free_decay(cfg: RunConfig, out_dir: str, plot: bool = True,
                   dt_refine: bool = False) -> dict:
    """Undriven decay of an equal superposition: T1, T2 and T_phi."""
    eig = _eigensystem(cfg)
    bath = cfg.bath_model()
    rates = damping_rate_matrix(eig, bath, cfg.n_levels)
    ref = free_decay_times(eig, bath)
    t_final_s = cfg.t_final if cfg.t_final is not None else 3.5 * ref.t1

    series, info = _propagate_free(cfg, eig, rates, t_final_s)
    fit_inv = fitkit.fit_free_inversion(series)
    fit_coh = fitkit.fit_free_coherence(series)
    if not (fit_inv.usable and fit_coh.usable):
        bad = fit_inv if not fit_inv.usable else fit_coh
        raise FitError(f"free decay: {bad.model} fit is "
                       f"{'a model mismatch' if bad.model_mismatch else 'unconverged'} "
                       f"(rms {bad.rms_residual:.2e} on range {bad.signal_range:.2e})")

    t1 = float(fit_inv.params["tau"])
    t2 = float(fit_coh.params["tau"])
    summary = {
        "mode": "free-decay",
        "fitted": {"t1_s": t1, "t2_s": t2,
                   "t_phi_s": float(_pure_dephasing_time(t1, t2))},
        "analytic": {"t1_s": ref.t1, "t2_s": ref.t2, "t_phi_s": ref.t_phi,
                     "kappa1_per_s": ref.kappa1, "kappa2_per_s": ref.kappa2},
        "fits": {"inversion": _fit_info(fit_inv), "coherence": _fit_info(fit_coh)},
        "propagation": info,
        "n_levels": cfg.n_levels,
    }

    if dt_refine:
        fine, fine_info = _propagate_free(cfg, eig, rates, t_final_s,
                                          divisor=2 * cfg.dt_divisor)
        f_inv = fitkit.fit_free_inversion(fine)
        f_coh = fitkit.fit_free_coherence(fine)
        summary["dt_refinement"] = {
            "dt": fine_info["dt"],
            "t1_relative_drift": abs(f_inv.params["tau"] - t1) / t1,
            "t2_relative_drift": abs(f_coh.params["tau"] - t2) / t2,
        }

    cols, rows = _series_rows(series)
    csv_path = io.write_csv(os.path.join(out_dir, "free_decay.csv"), cols, rows)
    summary["csv"] = csv_path
    if plot:
        from . import plots
        summary["figure"] = plots.render_timeseries(
            csv_path, os.path.join(out_dir, "free_decay.png"),
            title="free decay")
    io.write_summary(os.path.join(out_dir, "free_decay_summary.json"), summary)
    return summary


# -- driven evolution ----------------------------------------------------------

def _default_driven_window(cfg: RunConfig, ref, omega_obs: float) -> float:
    """Default driven window: >= 10 us, two Rabi periods, 3.5 driven lifetimes."""
    t = max(10e-6, 3.5 * ref.t1_driven)
    if omega_obs > 0.0:
        t = max(t, 2.0 * (2.0 * np.pi / omega_obs) / cfg.squid.omega_lc)
    return t


def run_driven(cfg: RunConfig, out_dir: str, plot: bool = True,
               dt_refine: bool = False) -> dict:
    """Resonantly driven evolution from the ground state: Rabi parameters."""
    if cfg.drive is None or cfg.drive.amplitude <= 0.0:
        raise ConfigurationError(
            "driven run needs a [drive] section with amplitude > 0; "
            "for free decay (zero amplitude) use the free-decay command")
    eig = _eigensystem(cfg)
    bath = cfg.bath_model()
    rates = damping_rate_matrix(eig, bath, cfg.n_levels)
    ref = free_decay_times(eig, bath)
    omega_obs = observed_rabi_frequency(eig, bath, cfg.drive.amplitude)
    t_final_s = cfg.t_final if cfg.t_final is not None else \
        _default_driven_window(cfg, ref, omega_obs)

    series, info = _propagate_driven(cfg, eig, rates, cfg.drive, t_final_s,
                                     omega_obs, cfg.n_levels)
    hint = omega_obs * cfg.squid.omega_lc if omega_obs > 0.0 else None
    fit_inv = fitkit.fit_driven_inversion(series, hint)
    fit_pop = fitkit.fit_driven_population(series, hint)
    coh_hint = fit_inv.params["omega"] if fit_inv.usable else hint
    fit_coh = fitkit.fit_driven_coherence(series, coh_hint)
    for fit in (fit_inv, fit_pop, fit_coh):
        if not fit.usable:
            raise FitError(
                f"driven run: {fit.model} fit is "
                f"{'a model mismatch' if fit.model_mismatch else 'unconverged'} "
                f"(rms {fit.rms_residual:.2e} on range {fit.signal_range:.2e})")

    omega_lc = cfg.squid.omega_lc
    summary = {
        "mode": "driven",
        "drive": {"amplitude": cfg.drive.amplitude,
                  "frequency": cfg.drive.frequency},
        "fitted": {
            "rabi_frequency": float(fit_inv.params["omega"] / omega_lc),
            "t1_driven_s": float(fit_inv.params["tau"]),
            "t22_driven_s": float(fit_coh.params["tau"]),
            "population_tau_s": float(fit_pop.params["tau"]),
        },
        "analytic": {
            "rabi_frequency_observed": omega_obs,
            "t1_driven_s": ref.t1_driven,
            "t22_driven_s": ref.t22_driven,
            "t21_driven_s": ref.t21_driven,
        },
        "fits": {"inversion": _fit_info(fit_inv),
                 "population": _fit_info(fit_pop),
                 "coherence": _fit_info(fit_coh)},
        "propagation": info,
        "n_levels": cfg.n_levels,
    }

    if dt_refine:
        fine, fine_info = _propagate_driven(cfg, eig, rates, cfg.drive,
                                            t_final_s, omega_obs, cfg.n_levels,
                                            divisor=2 * cfg.dt_divisor)
        f_inv = fitkit.fit_driven_inversion(fine, hint)
        summary["dt_refinement"] = {
            "dt": fine_info["dt"],
            "t1_driven_relative_drift":
                abs(f_inv.params["tau"] - fit_inv.params["tau"])
                / fit_inv.params["tau"],
            "rabi_relative_drift":
                abs(f_inv.params["omega"] - fit_inv.params["omega"])
                / fit_inv.params["omega"],
        }

    cols, rows = _series_rows(series)
    csv_path = io.write_csv(os.path.join(out_dir, "driven.csv"), cols, rows)
    summary["csv"] = csv_path
    if plot:
        from . import plots
        summary["figure"] = plots.render_timeseries(
            csv_path, os.path.join(out_dir, "driven.png"),
            title="driven evolution")
    io.write_summary(os.path.join(out_dir, "driven_summary.json"), summary)
    return summary


# -- amplitude table -----------------------------------------------------------

def _table_cell_times(cfg: RunConfig, eig, bath, amplitude: float,
                      n_levels: int, frequency: float) -> dict:
    """Relaxation/decoherence times for one (amplitude, level-count) cell."""
    rates = damping_rate_matrix(eig, bath, n_levels)
    ref = free_decay_times(eig, bath)
    if amplitude == 0.0:
        t_final_s = cfg.t_final if cfg.t_final is not None else 3.5 * ref.t1
        cfg_n = replace(cfg, n_levels=n_levels)
        series, _ = _propagate_free(cfg_n, eig, rates, t_final_s)
        fit_relax = fitkit.fit_free_inversion(series)
        fit_decoh = fitkit.fit_free_coherence(series)
    else:
        drive = DrivePulse(amplitude=amplitude, frequency=frequency)
        omega_obs = observed_rabi_frequency(eig, bath, amplitude)
        t_final_s = cfg.t_final if cfg.t_final is not None else \
            _default_driven_window(cfg, ref, omega_obs)
        hint = omega_obs * cfg.squid.omega_lc if omega_obs > 0.0 else None
        series, _ = _propagate_driven(cfg, eig, rates, drive, t_final_s,
                                      omega_obs, n_levels)
        fit_relax = fitkit.fit_driven_inversion(series, hint)
        coh_hint = fit_relax.params["omega"] if fit_relax.usable else hint
        fit_decoh = fitkit.fit_driven_coherence(series, coh_hint)
    return {
        "relaxation_s": float(fit_relax.params["tau"]) if fit_relax.usable else None,
        "decoherence_s": float(fit_decoh.params["tau"]) if fit_decoh.usable else None,
        "fits": {"relaxation": _fit_info(fit_relax),
                 "decoherence": _fit_info(fit_decoh)},
    }


def run_table2(cfg: RunConfig, out_dir: str, plot: bool = True,
               threads: int | None = None) -> dict:
    """Decay times versus drive amplitude, with four and two levels.

    Zero amplitude rows fall back to the free-decay protocol.  Cells
    whose fit does not describe the data are emitted as "-".
    """
    eig = _eigensystem(cfg)
    bath = cfg.bath_model()
    frequency = cfg.drive.frequency if cfg.drive is not None \
        else eig.splitting(1, 0)
    level_counts = (4, 2)
    tasks = [(amp, n) for amp in cfg.table2_amplitudes for n in level_counts]

    workers = resolve_threads(threads)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(
            lambda task: _table_cell_times(cfg, eig, bath, task[0], task[1],
                                           frequency), tasks))
    cells = {task: res for task, res in zip(tasks, results)}

    columns = ["amplitude",
               "relaxation_n4_s", "relaxation_n2_s",
               "decoherence_n4_s", "decoherence_n2_s"]
    rows = []
    detail = {}
    for amp in cfg.table2_amplitudes:
        row = [float(amp)]
        for key in ("relaxation_s", "decoherence_s"):
            for n in level_counts:
                val = cells[(amp, n)][key]
                row.append("-" if val is None else float(val))
        rows.append(row)
        detail[f"{amp:.3e}"] = {f"n{n}": cells[(amp, n)]["fits"]
                                for n in level_counts}

    csv_path = io.write_csv(os.path.join(out_dir, "table2.csv"), columns, rows)
    summary = {"mode": "table2", "csv": csv_path,
               "drive_frequency": frequency, "threads": workers,
               "cells": detail}
    if plot:
        from . import plots
        summary["figure"] = plots.render_table2(
            csv_path, os.path.join(out_dir, "table2.png"))
    io.write_summary(os.path.join(out_dir, "table2_summary.json"), summary)
    return summary


# -- parameter sweep -----------------------------------------------------------

def run_sweep(cfg: RunConfig, out_dir: str, plot: bool = True,
              threads: int | None = None) -> dict:
    """Closed-form decoherence times along one bath-side parameter axis.

    Every sweepable parameter enters only through the bath circuits, so
    a single eigensolve serves the whole sweep and each point costs a
    handful of admittance evaluations.
    """
    if cfg.sweep is None:
        raise ConfigurationError("sweep run needs a [sweep] section")
    eig = _eigensystem(cfg)

    def work(value: float):
        control, readout, temperature = apply_sweep_value(cfg, value)
        bath = BathModel(control, readout, cfg.squid.L, temperature)
        return free_decay_times(eig, bath)

    workers = resolve_threads(threads)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(work, cfg.sweep.values))

    columns = [cfg.sweep.parameter, "t1_s", "t2_s", "t_phi_s",
               "t1_driven_s", "t21_driven_s", "t22_driven_s",
               "kappa1_per_s", "kappa2_per_s"]
    rows = [[float(v), t.t1, t.t2, t.t_phi, t.t1_driven, t.t21_driven,
             t.t22_driven, t.kappa1, t.kappa2]
            for v, t in zip(cfg.sweep.values, results)]
    csv_path = io.write_csv(os.path.join(out_dir, "sweep.csv"), columns, rows)
    summary = {"mode": "sweep", "csv": csv_path,
               "parameter": cfg.sweep.parameter,
               "points": len(rows), "threads": workers}
    if plot:
        from . import plots
        summary["figure"] = plots.render_sweep(
            csv_path, os.path.join(out_dir, "sweep.png"))
    io.write_summary(os.path.join(out_dir, "sweep_summary.json"), summary)
    return summary
