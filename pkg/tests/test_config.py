"""Tests for INI configuration parsing and deterministic file output.

Unit-suffix parsing is pinned against hand-converted SI values, the
default (reference-device) configuration against its documented
numbers, and every validation branch against its error message.  The
CSV/JSON writers are checked for exact round-trips and byte-identical
repeated output, which the golden-file workflow depends on.
"""

import dataclasses

import numpy as np
import pytest

from fluxsim import io
from fluxsim.config import (
    SWEEP_TARGETS,
    SweepSpec,
    apply_sweep_value,
    load_config,
    parse_drive_frequency,
    parse_quantity,
    parse_value_list,
)
from fluxsim.errors import ConfigurationError

OMEGA_LC = 387419422113.02985  # rad/s for L = 205 pH, C = 32.5 fF


def write_ini(tmp_path, text):
    path = tmp_path / "run.ini"
    path.write_text(text)
    return str(path)


class TestParseQuantity:
    @pytest.mark.parametrize("text,kind,expected", [
        ("205 pH", "inductance", 205e-12),
        ("205pH", "inductance", 205e-12),
        ("0.1 nH", "inductance", 1e-10),
        ("1e-12", "inductance", 1e-12),          # bare value is SI
        ("32.5 fF", "capacitance", 32.5e-15),
        ("25 pF", "capacitance", 25e-12),
        ("70 ohm", "resistance", 70.0),
        ("70 Ohm", "resistance", 70.0),
        ("1 kohm", "resistance", 1e3),
        ("0.02 MOhm", "resistance", 2e4),
        ("30 mK", "temperature", 0.030),
        ("4.2 K", "temperature", 4.2),
        ("12 us", "time", 12e-6),
        ("3 ns", "time", 3e-9),
        ("0.4991", "dimensionless", 0.4991),
    ])
    def test_accepted_forms(self, text, kind, expected):
        assert parse_quantity(text, kind, "here") == \
            pytest.approx(expected, rel=1e-15, abs=0.0)

    def test_rejects_unknown_unit(self):
        with pytest.raises(ConfigurationError, match="unsupported unit 'lightyear'"):
            parse_quantity("3 lightyear", "inductance", "[squid] L")

    def test_rejects_unit_of_wrong_kind(self):
        with pytest.raises(ConfigurationError, match="unsupported unit 'pH'"):
            parse_quantity("30 pH", "temperature", "[run] temperature")

    def test_rejects_garbage(self):
        with pytest.raises(ConfigurationError, match="cannot parse"):
            parse_quantity("not-a-number pH", "inductance", "x")

    def test_error_carries_field_path(self):
        with pytest.raises(ConfigurationError, match=r"\[squid\] L"):
            parse_quantity("3 lightyear", "inductance", "[squid] L")


class TestParseDriveFrequency:
    def test_bare_number_is_angular_in_natural_units(self):
        assert parse_drive_frequency("0.127", OMEGA_LC, "f") == 0.127

    @pytest.mark.parametrize("text,hz", [
        ("15.95 GHz", 15.95e9),
        ("10 MHz", 10e6),
        ("3 kHz", 3e3),
        ("5 Hz", 5.0),
    ])
    def test_hz_family_converts_to_angular(self, text, hz):
        expected = 2.0 * np.pi * hz / OMEGA_LC
        assert parse_drive_frequency(text, OMEGA_LC, "f") == \
            pytest.approx(expected, rel=1e-15, abs=0.0)

    def test_rejects_non_frequency_unit(self):
        with pytest.raises(ConfigurationError, match="unsupported unit 'pH'"):
            parse_drive_frequency("3 pH", OMEGA_LC, "f")


class TestParseValueList:
    def test_comma_separated_with_units(self):
        vals = parse_value_list("10 pH, 20 pH, 0.1 nH", "inductance", "x")
        assert vals == pytest.approx((1e-11, 2e-11, 1e-10), rel=1e-15, abs=0.0)

    def test_linspace(self):
        assert parse_value_list("linspace(1, 3, 3)", "dimensionless", "x") == \
            pytest.approx((1.0, 2.0, 3.0), rel=1e-15, abs=0.0)

    def test_logspace_with_trailing_unit(self):
        vals = parse_value_list("logspace(0.01, 100, 5) pH", "inductance", "x")
        assert vals == pytest.approx(
            (1e-14, 1e-13, 1e-12, 1e-11, 1e-10), rel=1e-12, abs=0.0)

    def test_empty_text_gives_empty_tuple(self):
        assert parse_value_list("", "dimensionless", "x") == ()

    @pytest.mark.parametrize("text,message", [
        ("logspace(-1, 10, 5)", "endpoints must be positive"),
        ("linspace(1, 10)", r"needs \(start, stop, count\)"),
        ("linspace(1, 10, 0)", "count must be >= 1"),
        ("linspace(1, 10, 5) lightyear", "unsupported unit"),
        ("linspace(a, b, 5)", "bad linspace arguments"),
    ])
    def test_rejects_malformed_axes(self, text, message):
        with pytest.raises(ConfigurationError, match=message):
            parse_value_list(text, "inductance", "x")


class TestDefaults:
    def test_reference_device(self):
        cfg = load_config(None)
        assert cfg.squid.L == pytest.approx(205e-12, rel=1e-15, abs=0.0)
        assert cfg.squid.C == pytest.approx(32.5e-15, rel=1e-15, abs=0.0)
        assert cfg.squid.g == 17.0
        assert cfg.squid.beta_l == 3.7
        assert cfg.squid.delta_beta_l == 0.0
        assert cfg.squid.x_e == 0.4991
        assert cfg.squid.y_e == 0.387
        assert cfg.grid.nx == 128 and cfg.grid.ny == 64
        assert cfg.control.m_x == pytest.approx(1e-12, rel=1e-15, abs=0.0)
        assert cfg.control.r_x0 == 1e3
        assert cfg.readout.l_j2 == pytest.approx(550e-12, rel=1e-15, abs=0.0)
        assert cfg.readout.r_m0 == 2e4
        assert cfg.readout.m_m == pytest.approx(3.3e-12, rel=1e-15, abs=0.0)
        assert cfg.temperature == 0.030
        assert cfg.n_levels == 4
        assert cfg.t_final is None
        assert cfg.drive is None
        assert cfg.sweep is None
        assert cfg.method == "dvr"
        # grid centered on the bias point by default
        assert cfg.grid.x_center == cfg.squid.x_e
        assert cfg.grid.y_center == cfg.squid.y_e

    def test_bath_model_uses_configured_circuits(self):
        cfg = load_config(None)
        bath = cfg.bath_model()
        assert bath.temperature == cfg.temperature
        assert bath.control is cfg.control
        assert bath.readout is cfg.readout
        colder = cfg.bath_model(temperature=0.010)
        assert colder.temperature == 0.010


class TestLoadConfig:
    def test_overrides_and_unit_suffixes(self, tmp_path):
        path = write_ini(tmp_path, """
[squid]
L = 300 pH   # inline comment survives
x_e = 0.5

[grid]
nx = 64
ny = 32

[control]
M_x = 0.5 pH

[readout]
L_J1 = 300 pH

[run]
temperature = 25 mK
n_levels = 2
t_final = 12 us
""")
        cfg = load_config(path)
        assert cfg.squid.L == pytest.approx(300e-12, rel=1e-15, abs=0.0)
        assert cfg.squid.x_e == 0.5
        assert cfg.grid.nx == 64 and cfg.grid.ny == 32
        assert cfg.control.m_x == pytest.approx(0.5e-12, rel=1e-15, abs=0.0)
        assert cfg.readout.l_j1 == pytest.approx(300e-12, rel=1e-15, abs=0.0)
        assert cfg.temperature == pytest.approx(0.025, rel=1e-15, abs=0.0)
        assert cfg.n_levels == 2
        assert cfg.t_final == pytest.approx(12e-6, rel=1e-15, abs=0.0)
        # untouched sections keep their defaults
        assert cfg.readout.l_j2 == pytest.approx(550e-12, rel=1e-15, abs=0.0)

    def test_missing_file(self):
        with pytest.raises(ConfigurationError, match="not found or unreadable"):
            load_config("/nonexistent/run.ini")

    def test_unknown_section(self, tmp_path):
        path = write_ini(tmp_path, "[squib]\nL = 205 pH\n")
        with pytest.raises(ConfigurationError, match=r"unknown config section \[squib\]"):
            load_config(path)

    def test_unknown_key_lists_accepted_ones(self, tmp_path):
        path = write_ini(tmp_path, "[squid]\ninductance = 205 pH\n")
        with pytest.raises(ConfigurationError, match="unknown key .*beta_L"):
            load_config(path)

    def test_keys_are_case_sensitive(self, tmp_path):
        # L_J1 and similar mixed-case keys must not be lowercased
        path = write_ini(tmp_path, "[readout]\nl_j1 = 300 pH\n")
        with pytest.raises(ConfigurationError, match="unknown key"):
            load_config(path)

    @pytest.mark.parametrize("body,message", [
        ("[run]\ntemperature = -1 mK\n", "must be non-negative"),
        ("[run]\nn_levels = 1\n", "at least 2"),
        ("[run]\nn_levels = four\n", "expected an integer"),
        ("[run]\nt_final = 0 us\n", "must be positive"),
        ("[run]\ndt_divisor = 5\n", "at least 10"),
        ("[run]\nrecords = 4\n", r"\[8, 2e6\]"),
        ("[grid]\nmethod = spectral\n", "must be 'dvr' or 'fd2'"),
        ("[drive]\namplitude = 1e-5\n", r"\[drive\] frequency: required"),
        ("[bath]\nomega_max = 0\n", "must be positive"),
        ("[bath]\nn_points = 1\n", "at least 2"),
        ("[sweep]\nparameter = bogus\nvalues = 1,2\n", "must be one of"),
        ("[sweep]\nparameter = M_x\n", r"\[sweep\] values: required"),
        ("[sweep]\nparameter = M_x\nvalues =\n", "list is empty"),
    ])
    def test_validation_errors(self, tmp_path, body, message):
        path = write_ini(tmp_path, body)
        with pytest.raises(ConfigurationError, match=message):
            load_config(path)

    def test_drive_section(self, tmp_path):
        path = write_ini(tmp_path, """
[drive]
amplitude = 1e-5
frequency = 0.127
phase = 0.25
""")
        cfg = load_config(path)
        assert cfg.drive is not None
        assert cfg.drive.amplitude == 1e-5
        assert cfg.drive.frequency == 0.127
        assert cfg.drive.phase == 0.25

    def test_drive_frequency_in_hertz(self, tmp_path):
        path = write_ini(tmp_path, "[drive]\namplitude = 1e-5\n"
                                   "frequency = 7.83 GHz\n")
        cfg = load_config(path)
        expected = 2.0 * np.pi * 7.83e9 / cfg.squid.omega_lc
        assert cfg.drive.frequency == pytest.approx(expected, rel=1e-12,
                                                    abs=0.0)

    def test_sweep_section(self, tmp_path):
        path = write_ini(tmp_path, "[sweep]\nparameter = M_x\n"
                                   "values = logspace(0.01, 10, 4) pH\n")
        cfg = load_config(path)
        assert cfg.sweep.parameter == "M_x"
        assert len(cfg.sweep.values) == 4
        assert cfg.sweep.values[0] == pytest.approx(1e-14, rel=1e-12, abs=0.0)
        assert cfg.sweep.values[-1] == pytest.approx(1e-11, rel=1e-12, abs=0.0)

    def test_spectrum_and_table_axes(self, tmp_path):
        path = write_ini(tmp_path, "[spectrum]\nx_e_values = 0.49, 0.4991\n"
                                   "[table2]\namplitudes = 0, 1e-6\n")
        cfg = load_config(path)
        assert cfg.spectrum_x_values == pytest.approx((0.49, 0.4991),
                                                      rel=1e-15, abs=0.0)
        assert cfg.table2_amplitudes == pytest.approx((0.0, 1e-6),
                                                      rel=1e-15, abs=0.0)

    def test_spectrum_defaults_to_bias_point(self):
        cfg = load_config(None)
        assert cfg.spectrum_x_values == (cfg.squid.x_e,)


class TestSweepTargets:
    def test_every_documented_axis_is_sweepable(self):
        documented = {"M_x", "M_m", "L_J1", "L_J2", "L_10", "L_20", "C_m",
                      "R_m", "R_m0", "L_x", "C_x", "R_x", "R_x0", "T"}
        assert documented <= set(SWEEP_TARGETS)

    def test_targets_name_real_fields(self):
        cfg = load_config(None)
        for section, fieldname, kind in SWEEP_TARGETS.values():
            owner = {"control": cfg.control, "readout": cfg.readout,
                     "run": cfg}.get(section)
            if section == "run":
                assert fieldname == "temperature"
            else:
                assert hasattr(owner, fieldname)
            assert kind in ("inductance", "capacitance", "resistance",
                            "temperature")

    def test_apply_sweep_value(self):
        base = load_config(None)
        cfg = dataclasses.replace(
            base, sweep=SweepSpec(parameter="M_x", values=(2e-12,)))
        control, readout, temperature = apply_sweep_value(cfg, 2e-12)
        assert control.m_x == 2e-12
        assert readout is cfg.readout and temperature == cfg.temperature

        cfg = dataclasses.replace(
            base, sweep=SweepSpec(parameter="L_J1", values=(3e-10,)))
        control, readout, temperature = apply_sweep_value(cfg, 3e-10)
        assert readout.l_j1 == 3e-10
        assert control is cfg.control

        for name in ("temperature", "T"):
            cfg = dataclasses.replace(
                base, sweep=SweepSpec(parameter=name, values=(0.01,)))
            control, readout, temperature = apply_sweep_value(cfg, 0.01)
            assert temperature == 0.01

    def test_apply_sweep_value_without_sweep(self):
        with pytest.raises(ConfigurationError, match="no .sweep. section"):
            apply_sweep_value(load_config(None), 1.0)


class TestCsvFiles:
    def test_round_trip_is_exact(self, tmp_path):
        path = str(tmp_path / "out" / "data.csv")
        values = [np.pi, 1.0 / 3.0, 2.243e-6, -1.7e30, 0.0]
        io.write_csv(path, ["idx", "value"],
                     [[i, v] for i, v in enumerate(values)])
        header, rows = io.read_csv(path)
        assert header == ["idx", "value"]
        assert [float(r[1]) for r in rows] == values  # bit-exact round trip
        assert [int(r[0]) for r in rows] == list(range(len(values)))

    def test_signature_line(self, tmp_path):
        path = str(tmp_path / "data.csv")
        io.write_csv(path, ["a"], [[1.0]])
        first = open(path).readline().rstrip("\n")
        assert first == io.CSV_SIGNATURE == "# fluxsim v1"

    def test_rejects_unsigned_file(self, tmp_path):
        path = tmp_path / "alien.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="signature"):
            io.read_csv(str(path))

    def test_rejects_ragged_rows(self, tmp_path):
        with pytest.raises(ValueError, match="row width 3 does not match 2"):
            io.write_csv(str(tmp_path / "x.csv"), ["a", "b"], [[1, 2, 3]])

    def test_repeated_writes_are_byte_identical(self, tmp_path):
        rows = [[k, np.sin(k) * 1e-6, "-"] for k in range(50)]
        p1 = str(tmp_path / "one.csv")
        p2 = str(tmp_path / "two.csv")
        io.write_csv(p1, ["k", "v", "flag"], rows)
        io.write_csv(p2, ["k", "v", "flag"], rows)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_format_value_types(self):
        assert io.format_value(True) == "True"      # bool before int
        assert io.format_value(3) == "3"
        assert io.format_value("-") == "-"
        assert io.format_value(1.5) == "1.5000000000000000e+00"

    def test_summary_is_deterministic(self, tmp_path):
        p1 = str(tmp_path / "one.json")
        p2 = str(tmp_path / "two.json")
        io.write_summary(p1, {"b": 1, "a": {"y": 2.0, "x": [3, 4]}})
        io.write_summary(p2, {"a": {"x": [3, 4], "y": 2.0}, "b": 1})
        blob1, blob2 = open(p1, "rb").read(), open(p2, "rb").read()
        assert blob1 == blob2
        assert blob1.decode().index('"a"') < blob1.decode().index('"b"')
