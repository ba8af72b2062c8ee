"""INI run configuration with SI unit suffixes.

A run is described by an INI file with sections ``[squid]``, ``[grid]``,
``[control]``, ``[readout]``, ``[run]``, ``[drive]``, ``[bath]``,
``[spectrum]``, ``[table2]`` and ``[sweep]``.  Every key has a default
(the reference device of the documentation), so a config file only
lists what it overrides.  Quantities accept an optional unit suffix
("205 pH", "30 mK", "70 ohm", "12 us"); bare numbers are SI base
units, except the drive frequency where a bare number is angular in
units of omega_LC and a Hz-family suffix is converted.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, replace

import numpy as np

from .bath import BathModel, ControlCircuitParams, ReadoutCircuitParams
from .errors import ConfigurationError
from .liouville import DrivePulse
from .qubit import GridSpec, SquidParams

_PREFIX = {"f": 1e-15, "p": 1e-12, "n": 1e-9, "u": 1e-6, "m": 1e-3,
           "": 1.0, "k": 1e3, "M": 1e6}


def _family(base: str, prefixes: str) -> dict[str, float]:
    table = {base if p == "" else p + base: _PREFIX[p] for p in prefixes}
    table[""] = 1.0
    return table


_UNITS: dict[str, dict[str, float]] = {
    "inductance": _family("H", "fpnum") | {"H": 1.0},
    "capacitance": _family("F", "fpnum") | {"F": 1.0},
    "resistance": {"": 1.0, "ohm": 1.0, "Ohm": 1.0, "kohm": 1e3,
                   "kOhm": 1e3, "Mohm": 1e6, "MOhm": 1e6},
    "temperature": {"": 1.0, "K": 1.0, "mK": 1e-3, "uK": 1e-6},
    "time": {"": 1.0, "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    "dimensionless": {"": 1.0},
}

_QUANTITY_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*([A-Za-z]*)\s*$")


def parse_quantity(text: str, kind: str, where: str) -> float:
    """One number with an optional unit suffix, converted to SI base units."""
    m = _QUANTITY_RE.match(text)
    if not m:
        raise ConfigurationError(f"{where}: cannot parse quantity '{text}'")
    value, unit = m.groups()
    table = _UNITS[kind]
    if unit not in table:
        raise ConfigurationError(
            f"{where}: unsupported unit '{unit}' for {kind} "
            f"(accepted: {', '.join(u for u in table if u)})")
    try:
        return float(value) * table[unit]
    except ValueError:
        raise ConfigurationError(f"{where}: invalid number '{value}'") from None


def parse_drive_frequency(text: str, omega_lc: float, where: str) -> float:
    """Drive frequency in units of omega_LC.

    Bare numbers are already angular frequencies in omega_LC; a
    Hz-family suffix denotes an ordinary frequency and is converted to
    angular before rescaling.
    """
    m = _QUANTITY_RE.match(text)
    if not m:
        raise ConfigurationError(f"{where}: cannot parse quantity '{text}'")
    value, unit = m.groups()
    try:
        v = float(value)
    except ValueError:
        raise ConfigurationError(f"{where}: invalid number '{value}'") from None
    if unit == "":
        return v
    table = _UNITS["frequency"]
    if unit not in table:
        raise ConfigurationError(
            f"{where}: unsupported unit '{unit}' for a drive frequency")
    return 2.0 * np.pi * v * table[unit] / omega_lc


def parse_value_list(text: str, kind: str, where: str) -> tuple[float, ...]:
    """A sweep axis: comma-separated quantities, or lin/logspace(a, b, n).

    The lin/logspace forms take an optional trailing unit applying to
    the generated values, e.g. ``logspace(0.01, 4, 25) pH``.
    """
    text = text.strip()
    if not text:
        return ()
    m = re.match(r"^(logspace|linspace)\(([^)]*)\)\s*([A-Za-z]*)\s*$", text)
    if m:
        fn, args, unit = m.groups()
        table = _UNITS[kind]
        if unit not in table:
            raise ConfigurationError(f"{where}: unsupported unit '{unit}' for {kind}")
        parts = [p.strip() for p in args.split(",")]
        if len(parts) != 3:
            raise ConfigurationError(f"{where}: {fn} needs (start, stop, count)")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigurationError(f"{where}: bad {fn} arguments '{args}'") from None
        if n < 1:
            raise ConfigurationError(f"{where}: {fn} count must be >= 1")
        if fn == "logspace":
            if a <= 0 or b <= 0:
                raise ConfigurationError(f"{where}: logspace endpoints must be positive")
            vals = np.logspace(np.log10(a), np.log10(b), n)
        else:
            vals = np.linspace(a, b, n)
        return tuple(float(v) * table[unit] for v in vals)
    return tuple(parse_quantity(tok, kind, where)
                 for tok in text.split(","))


#: sweep parameter -> (config section, dataclass field, unit kind)
SWEEP_TARGETS: dict[str, tuple[str, str, str]] = {
    "M_x": ("control", "m_x", "inductance"),
    "L_x": ("control", "l_x", "inductance"),
    "C_x": ("control", "c_x", "capacitance"),
    "R_x": ("control", "r_x", "resistance"),
    "R_x0": ("control", "r_x0", "resistance"),
    "M_m": ("readout", "m_m", "inductance"),
    "L_10": ("readout", "l_10", "inductance"),
    "L_20": ("readout", "l_20", "inductance"),
    "L_J1": ("readout", "l_j1", "inductance"),
    "L_J2": ("readout", "l_j2", "inductance"),
    "C_m": ("readout", "c_m", "capacitance"),
    "R_m": ("readout", "r_m", "resistance"),
    "R_m0": ("readout", "r_m0", "resistance"),
    "temperature": ("run", "temperature", "temperature"),
    "T": ("run", "temperature", "temperature"),
}


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class RunConfig:
    """Validated, unit-resolved description of everything a run needs."""

    squid: SquidParams
    grid: GridSpec
    control: ControlCircuitParams
    readout: ReadoutCircuitParams
    temperature: float  # K
    n_levels: int = 4
    t_final: float | None = None  # s; None lets each runner pick a default
    dt_divisor: int = 200
    records: int = 3000
    seed: int = 20240814
    method: str = "dvr"
    drive: DrivePulse | None = None
    spectrum_x_values: tuple[float, ...] = ()
    bath_omega_max: float = 3.0
    bath_points: int = 1201
    sweep: SweepSpec | None = None
    table2_amplitudes: tuple[float, ...] = (
        0.0, 1e-7, 5e-7, 1e-6, 5e-6, 1e-5, 5e-5, 1e-4)

    def bath_model(self, control=None, readout=None, temperature=None) -> BathModel:
        """Bath for the configured (or overridden) circuit parameters."""
        return BathModel(control or self.control, readout or self.readout,
                         self.squid.L, self.temperature if temperature is None
                         else temperature)


_SECTION_KEYS = {
    "squid": {"L", "C", "g", "beta_L", "delta_beta_L", "x_e", "y_e"},
    "grid": {"nx", "ny", "x_halfwidth", "y_halfwidth", "x_center", "y_center",
             "method"},
    "control": {"L_x", "C_x", "R_x", "R_x0", "M_x"},
    "readout": {"L_10", "L_20", "L_J1", "L_J2", "C_m", "R_m", "R_m0", "M_m"},
    "run": {"temperature", "n_levels", "t_final", "dt_divisor", "records",
            "seed"},
    "drive": {"amplitude", "frequency", "phase"},
    "bath": {"omega_max", "n_points"},
    "spectrum": {"x_e_values"},
    "table2": {"amplitudes"},
    "sweep": {"parameter", "values"},
}


def _check_keys(parser: configparser.ConfigParser):
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SECTION_KEYS[section]:
                raise ConfigurationError(
                    f"[{section}] {key}: unknown key (accepted: "
                    f"{', '.join(sorted(_SECTION_KEYS[section]))})")


def _get(parser, section, key, default=None):
    if parser.has_option(section, key):
        return parser.get(section, key)
    return default


def _get_float(parser, section, key, kind, default):
    raw = _get(parser, section, key)
    if raw is None:
        return default
    return parse_quantity(raw, kind, f"[{section}] {key}")


def _get_int(parser, section, key, default):
    raw = _get(parser, section, key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"[{section}] {key}: expected an integer, "
                                 f"got '{raw}'") from None


def load_config(path: str | None = None) -> RunConfig:
    """Parse an INI file into a :class:`RunConfig` (defaults when no path)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    # keys are case-sensitive: L_J1 and similar must survive round trips
    parser.optionxform = str
    if path is not None:
        read = parser.read(path)
        if not read:
            raise ConfigurationError(f"config file '{path}' not found or unreadable")
    _check_keys(parser)

    squid = SquidParams(
        L=_get_float(parser, "squid", "L", "inductance", 205e-12),
        C=_get_float(parser, "squid", "C", "capacitance", 32.5e-15),
        g=_get_float(parser, "squid", "g", "dimensionless", 17.0),
        beta_l=_get_float(parser, "squid", "beta_L", "dimensionless", 3.7),
        delta_beta_l=_get_float(parser, "squid", "delta_beta_L",
                                "dimensionless", 0.0),
        x_e=_get_float(parser, "squid", "x_e", "dimensionless", 0.4991),
        y_e=_get_float(parser, "squid", "y_e", "dimensionless", 0.387),
    )
    grid = GridSpec(
        x_center=_get_float(parser, "grid", "x_center", "dimensionless",
                            squid.x_e),
        y_center=_get_float(parser, "grid", "y_center", "dimensionless",
                            squid.y_e),
        x_halfwidth=_get_float(parser, "grid", "x_halfwidth",
                               "dimensionless", 0.6),
        y_halfwidth=_get_float(parser, "grid", "y_halfwidth",
                               "dimensionless", 0.4),
        nx=_get_int(parser, "grid", "nx", 128),
        ny=_get_int(parser, "grid", "ny", 64),
    )
    method = _get(parser, "grid", "method", "dvr")
    if method not in ("dvr", "fd2"):
        raise ConfigurationError(f"[grid] method: must be 'dvr' or 'fd2', "
                                 f"got '{method}'")
    control = ControlCircuitParams(
        l_x=_get_float(parser, "control", "L_x", "inductance", 100e-12),
        c_x=_get_float(parser, "control", "C_x", "capacitance", 25e-12),
        r_x=_get_float(parser, "control", "R_x", "resistance", 70.0),
        r_x0=_get_float(parser, "control", "R_x0", "resistance", 1e3),
        m_x=_get_float(parser, "control", "M_x", "inductance", 1.0e-12),
    )
    readout = ReadoutCircuitParams(
        l_10=_get_float(parser, "readout", "L_10", "inductance", 20e-12),
        l_20=_get_float(parser, "readout", "L_20", "inductance", 20e-12),
        l_j1=_get_float(parser, "readout", "L_J1", "inductance", 100e-12),
        l_j2=_get_float(parser, "readout", "L_J2", "inductance", 550e-12),
        c_m=_get_float(parser, "readout", "C_m", "capacitance", 20e-12),
        r_m=_get_float(parser, "readout", "R_m", "resistance", 70.0),
        r_m0=_get_float(parser, "readout", "R_m0", "resistance", 2e4),
        m_m=_get_float(parser, "readout", "M_m", "inductance", 3.3e-12),
    )

    temperature = _get_float(parser, "run", "temperature", "temperature", 0.030)
    if temperature < 0:
        raise ConfigurationError("[run] temperature: must be non-negative")
    n_levels = _get_int(parser, "run", "n_levels", 4)
    if n_levels < 2:
        raise ConfigurationError("[run] n_levels: must be at least 2")
    t_final_raw = _get(parser, "run", "t_final")
    t_final = None if t_final_raw is None else \
        parse_quantity(t_final_raw, "time", "[run] t_final")
    if t_final is not None and t_final <= 0:
        raise ConfigurationError("[run] t_final: must be positive")
    dt_divisor = _get_int(parser, "run", "dt_divisor", 200)
    if dt_divisor < 10:
        raise ConfigurationError("[run] dt_divisor: must be at least 10")
    records = _get_int(parser, "run", "records", 3000)
    if not 8 <= records <= 2_000_000:
        raise ConfigurationError("[run] records: must lie in [8, 2e6]")
    seed = _get_int(parser, "run", "seed", 20240814)

    drive = None
    if parser.has_section("drive"):
        amplitude = _get_float(parser, "drive", "amplitude", "dimensionless", 0.0)
        freq_raw = _get(parser, "drive", "frequency")
        if freq_raw is None:
            raise ConfigurationError("[drive] frequency: required when a drive "
                                     "section is present")
        frequency = parse_drive_frequency(freq_raw, squid.omega_lc,
                                          "[drive] frequency")
        phase = _get_float(parser, "drive", "phase", "dimensionless", 0.0)
        drive = DrivePulse(amplitude=amplitude, frequency=frequency, phase=phase)

    spectrum_raw = _get(parser, "spectrum", "x_e_values")
    if spectrum_raw is None:
        spectrum_x = (squid.x_e,)
    else:
        spectrum_x = parse_value_list(spectrum_raw, "dimensionless",
                                      "[spectrum] x_e_values")

    bath_omega_max = _get_float(parser, "bath", "omega_max", "dimensionless", 3.0)
    if bath_omega_max <= 0:
        raise ConfigurationError("[bath] omega_max: must be positive")
    bath_points = _get_int(parser, "bath", "n_points", 1201)
    if bath_points < 2:
        raise ConfigurationError("[bath] n_points: must be at least 2")

    sweep = None
    if parser.has_section("sweep"):
        pname = _get(parser, "sweep", "parameter")
        if pname is None or pname not in SWEEP_TARGETS:
            raise ConfigurationError(
                f"[sweep] parameter: must be one of {', '.join(sorted(SWEEP_TARGETS))}")
        values_raw = _get(parser, "sweep", "values")
        if values_raw is None:
            raise ConfigurationError("[sweep] values: required")
        kind = SWEEP_TARGETS[pname][2]
        values = parse_value_list(values_raw, kind, "[sweep] values")
        if not values:
            raise ConfigurationError("[sweep] values: list is empty")
        sweep = SweepSpec(parameter=pname, values=values)

    table2_raw = _get(parser, "table2", "amplitudes")
    table2 = RunConfig.table2_amplitudes if table2_raw is None else \
        parse_value_list(table2_raw, "dimensionless", "[table2] amplitudes")

    return RunConfig(
        squid=squid, grid=grid, control=control, readout=readout,
        temperature=temperature, n_levels=n_levels, t_final=t_final,
        dt_divisor=dt_divisor, records=records, seed=seed, method=method,
        drive=drive, spectrum_x_values=tuple(spectrum_x),
        bath_omega_max=bath_omega_max, bath_points=bath_points,
        sweep=sweep, table2_amplitudes=tuple(table2),
    )


def apply_sweep_value(config: RunConfig, value: float):
    """Control/readout/temperature triple with one sweep value applied."""
    if config.sweep is None:
        raise ConfigurationError("no [sweep] section in this configuration")
    section, fieldname, _ = SWEEP_TARGETS[config.sweep.parameter]
    control, readout, temperature = config.control, config.readout, config.temperature
    if section == "control":
        control = replace(control, **{fieldname: value})
    elif section == "readout":
        readout = replace(readout, **{fieldname: value})
    else:
        temperature = value
    return control, readout, temperature
