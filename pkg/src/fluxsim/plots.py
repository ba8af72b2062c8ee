"""Figure rendering for the CSV artifacts.

Each function reads one of the package's delimited output files and
writes a PNG next to it.  Rendering is headless (Agg) and optional:
runs stay fully usable from the CSVs alone.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import read_csv  # noqa: E402


def _style():
    plt.rcParams.update({
        "figure.figsize": (7.0, 4.5),
        "figure.dpi": 130,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "lines.linewidth": 1.4,
        "font.size": 10,
    })


def _numeric(rows, col):
    return np.array([float(r[col]) for r in rows])


def render_spectrum(csv_path: str, png_path: str) -> str:
    """Energy levels (and the lowest splitting) against the bias flux."""
    header, rows = read_csv(csv_path)
    _style()
    x = _numeric(rows, 0)
    n_energy = sum(1 for h in header if h.startswith("energy_"))
    fig, ax = plt.subplots()
    for k in range(n_energy):
        e = _numeric(rows, 1 + k)
        if x.size > 1:
            ax.plot(x, e, label=f"level {k}")
        else:
            ax.axhline(e[0], color=f"C{k}", label=f"level {k}")
    ax.set_xlabel("bias flux x_e (flux quanta)")
    ax.set_ylabel("energy (units of $\\omega_{LC}$)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)
    return png_path


def render_bath(csv_path: str, png_path: str) -> str:
    """Admittance noise spectra of the two circuits and their sum."""
    header, rows = read_csv(csv_path)
    _style()
    w = _numeric(rows, header.index("omega"))
    fig, ax = plt.subplots()
    for name, label in (("j_control", "control line"),
                        ("j_readout", "readout bridge"),
                        ("j_total", "total")):
        ax.plot(w, _numeric(rows, header.index(name)), label=label)
    ax.set_xlabel("frequency (units of $\\omega_{LC}$)")
    ax.set_ylabel("spectral density J ($\\mathrm{C^2/s}$)")
    ax.set_yscale("log")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)
    return png_path


def render_timeseries(csv_path: str, png_path: str, title: str = "") -> str:
    """Populations and squared coherence of a recorded propagation."""
    header, rows = read_csv(csv_path)
    _style()
    t = _numeric(rows, header.index("time_s")) * 1e6  # us
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True,
                                   figsize=(7.0, 6.0))
    for col, name in enumerate(header):
        if name.startswith("rho_") and name[4] == name[5]:
            ax1.plot(t, _numeric(rows, col), label=name)
    ax1.set_ylabel("populations")
    ax1.legend(loc="best", fontsize=8)
    ax2.plot(t, _numeric(rows, header.index("coherence_sq")), color="C3")
    ax2.set_ylabel("$|\\rho_{01}|^2$")
    ax2.set_xlabel("time ($\\mu$s)")
    if title:
        ax1.set_title(title)
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)
    return png_path


def render_table2(csv_path: str, png_path: str) -> str:
    """Decay times against drive amplitude (dashes are skipped points)."""
    header, rows = read_csv(csv_path)
    _style()
    fig, ax = plt.subplots()
    amp = _numeric(rows, 0)
    floor = amp[amp > 0].min() / 10.0 if np.any(amp > 0) else 1e-8
    amp = np.where(amp > 0, amp, floor)  # show the zero-amplitude row too
    for col, name in enumerate(header[1:], start=1):
        vals, mask = [], []
        for r in rows:
            ok = r[col] != "-"
            mask.append(ok)
            vals.append(float(r[col]) * 1e6 if ok else np.nan)
        ax.plot(amp[np.array(mask)], np.array(vals)[np.array(mask)],
                marker="o", label=name.replace("_s", ""))
    ax.set_xscale("log")
    ax.set_xlabel("drive amplitude (flux quanta)")
    ax.set_ylabel("decay time ($\\mu$s)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)
    return png_path


def render_sweep(csv_path: str, png_path: str) -> str:
    """Characteristic times along the swept parameter, log-log."""
    header, rows = read_csv(csv_path)
    _style()
    x = _numeric(rows, 0)
    fig, ax = plt.subplots()
    for name in ("t1_s", "t2_s", "t_phi_s"):
        y = _numeric(rows, header.index(name)) * 1e6
        finite = np.isfinite(y)
        ax.plot(x[finite], y[finite], marker=".",
                label=name.replace("_s", "").replace("_", " "))
    if np.all(x > 0) and x.max() / max(x.min(), 1e-300) > 30:
        ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(header[0])
    ax.set_ylabel("time ($\\mu$s)")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)
    return png_path
