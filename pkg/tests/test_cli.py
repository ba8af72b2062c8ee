"""End-to-end tests of the command-line interface.

Each subcommand is driven through ``main()`` exactly as a shell would,
on a reduced 48x48 grid that reproduces the reference device's times to
a few parts in 1e6 while solving in under a second.  The contracts
checked here are the process-level ones: exit codes, the stdout
summary line, byte-identical reruns, thread-count independence, figure
emission, and that every number in a summary can be reproduced from
the emitted CSV alone.
"""

import json
import os

import numpy as np
import pytest

from fluxsim import runner
from fluxsim.cli import main
from fluxsim.errors import ConfigurationError, FitError, NumericError
from fluxsim.fitkit import TimeSeries, fit_free_coherence, fit_free_inversion
from fluxsim.io import CSV_SIGNATURE, read_csv

#: coarsest grid that passes the eigensolver's resolution checks
FAST_GRID = "[grid]\nnx = 48\nny = 48\n"


def ini(tmp_path, body, name="run.ini"):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


def column(header, rows, name):
    idx = header.index(name)
    return np.array([float(r[idx]) for r in rows])


def load_summary(out_dir, name):
    with open(os.path.join(out_dir, name)) as fh:
        return json.load(fh)


class TestExitCodes:
    def test_success_prints_artifact_path(self, tmp_path, capsys):
        cfg = ini(tmp_path, "[bath]\nn_points = 101\n")
        out = str(tmp_path / "out")
        assert main(["bath", "--config", cfg, "--out", out, "--no-plot"]) == 0
        stdout = capsys.readouterr().out
        assert "fluxsim bath: wrote" in stdout
        assert "bath.csv" in stdout

    def test_missing_config_file(self, tmp_path, capsys):
        ret = main(["bath", "--config", str(tmp_path / "nope.ini"),
                    "--out", str(tmp_path)])
        assert ret == 2
        assert "configuration error" in capsys.readouterr().err

    def test_invalid_config_content(self, tmp_path, capsys):
        cfg = ini(tmp_path, "[squib]\nL = 205 pH\n")
        assert main(["bath", "--config", cfg, "--out", str(tmp_path)]) == 2
        assert "unknown config section" in capsys.readouterr().err

    def test_driven_without_amplitude_points_to_free_decay(self, tmp_path,
                                                           capsys):
        cfg = ini(tmp_path, FAST_GRID +
                  "[drive]\namplitude = 0\nfrequency = 0.127\n")
        ret = main(["driven", "--config", cfg, "--out", str(tmp_path / "out")])
        assert ret == 2
        assert "free-decay" in capsys.readouterr().err

    def test_sweep_without_section(self, tmp_path, capsys):
        cfg = ini(tmp_path, FAST_GRID)
        ret = main(["sweep", "--config", cfg, "--out", str(tmp_path / "out")])
        assert ret == 2
        assert "needs a [sweep] section" in capsys.readouterr().err

    def test_numeric_failure_maps_to_3(self, tmp_path, capsys, monkeypatch):
        def boom(*args, **kwargs):
            raise NumericError("propagation lost the trace")
        monkeypatch.setattr(runner, "run_bath", boom)
        ret = main(["bath", "--out", str(tmp_path)])
        assert ret == 3
        assert "numerical failure: propagation lost the trace" in \
            capsys.readouterr().err

    def test_fit_failure_maps_to_4(self, tmp_path, capsys, monkeypatch):
        def boom(*args, **kwargs):
            raise FitError("free decay: free-inversion fit is unconverged")
        monkeypatch.setattr(runner, "run_free_decay", boom)
        ret = main(["free-decay", "--out", str(tmp_path)])
        assert ret == 4
        assert "fit failure" in capsys.readouterr().err

    def test_missing_subcommand_is_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main([])
        assert excinfo.value.code == 2

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
        assert "fluxsim 1.0" in capsys.readouterr().out


class TestSpectrumCommand:
    def test_rows_follow_input_order(self, tmp_path):
        cfg = ini(tmp_path, FAST_GRID +
                  "[spectrum]\nx_e_values = 0.4991, 0.499\n")
        out = str(tmp_path / "out")
        assert main(["spectrum", "--config", cfg, "--out", out]) == 0
        header, rows = read_csv(os.path.join(out, "spectrum.csv"))
        assert header[0] == "x_e"
        assert [float(r[0]) for r in rows] == [0.4991, 0.499]
        # four levels solved by default
        assert "energy_3" in header and "x_01" in header
        # figure rendered when plotting is on
        png = os.path.join(out, "spectrum.png")
        assert os.path.exists(png) and os.path.getsize(png) > 0
        summary = load_summary(out, "spectrum_summary.json")
        assert summary["points"] == 2
        assert summary["first_point"]["splitting_10"] == \
            pytest.approx(0.127009, rel=1e-4, abs=0.0)

    def test_empty_axis_writes_header_only(self, tmp_path):
        cfg = ini(tmp_path, FAST_GRID + "[spectrum]\nx_e_values =\n")
        out = str(tmp_path / "out")
        assert main(["spectrum", "--config", cfg, "--out", out]) == 0
        header, rows = read_csv(os.path.join(out, "spectrum.csv"))
        assert header[0] == "x_e"
        assert rows == []
        assert not os.path.exists(os.path.join(out, "spectrum.png"))
        assert load_summary(out, "spectrum_summary.json")["points"] == 0


class TestBathCommand:
    def test_total_spectrum_is_the_sum_of_circuits(self, tmp_path):
        cfg = ini(tmp_path, "[bath]\nn_points = 301\n")
        out = str(tmp_path / "out")
        assert main(["bath", "--config", cfg, "--out", out, "--no-plot"]) == 0
        header, rows = read_csv(os.path.join(out, "bath.csv"))
        j_c = column(header, rows, "j_control")
        j_r = column(header, rows, "j_readout")
        j_t = column(header, rows, "j_total")
        assert np.all(np.abs(j_t - (j_c + j_r)) <= 1e-14 * j_t.max())
        assert column(header, rows, "omega")[-1] == pytest.approx(3.0)

    def test_uncoupled_circuits_produce_zero_noise(self, tmp_path):
        cfg = ini(tmp_path, "[control]\nM_x = 0\n[readout]\nM_m = 0\n"
                            "[bath]\nn_points = 101\n")
        out = str(tmp_path / "out")
        assert main(["bath", "--config", cfg, "--out", out, "--no-plot"]) == 0
        header, rows = read_csv(os.path.join(out, "bath.csv"))
        for name in ("j_control", "j_readout", "j_total"):
            assert np.all(column(header, rows, name) == 0.0)

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = ini(tmp_path, "[bath]\nn_points = 201\n")
        out1, out2 = str(tmp_path / "one"), str(tmp_path / "two")
        assert main(["bath", "--config", cfg, "--out", out1, "--no-plot"]) == 0
        assert main(["bath", "--config", cfg, "--out", out2, "--no-plot"]) == 0
        blob1 = open(os.path.join(out1, "bath.csv"), "rb").read()
        blob2 = open(os.path.join(out2, "bath.csv"), "rb").read()
        assert blob1 == blob2
        assert blob1.startswith(CSV_SIGNATURE.encode())

    def test_no_plot_flag_controls_figure(self, tmp_path):
        cfg = ini(tmp_path, "[bath]\nn_points = 101\n")
        plain = str(tmp_path / "plain")
        plotted = str(tmp_path / "plotted")
        assert main(["bath", "--config", cfg, "--out", plain,
                     "--no-plot"]) == 0
        assert not os.path.exists(os.path.join(plain, "bath.png"))
        assert "figure" not in load_summary(plain, "bath_summary.json")
        assert main(["bath", "--config", cfg, "--out", plotted]) == 0
        png = os.path.join(plotted, "bath.png")
        assert os.path.exists(png) and os.path.getsize(png) > 0
        assert load_summary(plotted, "bath_summary.json")["figure"] == png


class TestFreeDecayCommand:
    def test_summary_is_reproducible_from_csv(self, tmp_path):
        cfg = ini(tmp_path, FAST_GRID)
        out = str(tmp_path / "out")
        assert main(["free-decay", "--config", cfg, "--out", out]) == 0
        summary = load_summary(out, "free_decay_summary.json")
        fitted = summary["fitted"]

        # fitted and closed-form times agree on this well-resolved problem
        assert fitted["t1_s"] == pytest.approx(summary["analytic"]["t1_s"],
                                               rel=1e-2, abs=0.0)
        assert fitted["t2_s"] == pytest.approx(summary["analytic"]["t2_s"],
                                               rel=1e-2, abs=0.0)
        # the reported pure-dephasing time is exactly the one implied by
        # the reported t1 and t2
        implied = 1.0 / (1.0 / fitted["t2_s"] - 0.5 / fitted["t1_s"])
        assert fitted["t_phi_s"] == pytest.approx(implied, rel=1e-12, abs=0.0)

        # refitting the emitted record reproduces the summary numbers
        header, rows = read_csv(summary["csv"])
        times = column(header, rows, "time_s")
        pops = np.column_stack([column(header, rows, f"rho_{k}{k}")
                                for k in range(4)])
        coh = np.sqrt(column(header, rows, "coherence_sq")).astype(complex)
        series = TimeSeries(times=times, populations=pops, coherence=coh)
        assert fit_free_inversion(series).params["tau"] == \
            pytest.approx(fitted["t1_s"], rel=1e-12, abs=0.0)
        assert fit_free_coherence(series).params["tau"] == \
            pytest.approx(fitted["t2_s"], rel=1e-12, abs=0.0)

        png = os.path.join(out, "free_decay.png")
        assert os.path.exists(png) and os.path.getsize(png) > 0

    def test_dt_refine_reports_small_drift(self, tmp_path):
        cfg = ini(tmp_path, FAST_GRID)
        out = str(tmp_path / "out")
        assert main(["free-decay", "--config", cfg, "--out", out,
                     "--no-plot", "--dt-refine"]) == 0
        drift = load_summary(out, "free_decay_summary.json")["dt_refinement"]
        assert drift["t1_relative_drift"] < 1e-3
        assert drift["t2_relative_drift"] < 1e-3


class TestDrivenCommand:
    def test_resonant_drive_pipeline(self, tmp_path):
        # stage 1: read the qubit splitting off a spectrum run, exactly as
        # a user would choose the resonant drive frequency
        cfg0 = ini(tmp_path, FAST_GRID, name="probe.ini")
        probe = str(tmp_path / "probe")
        assert main(["spectrum", "--config", cfg0, "--out", probe,
                     "--no-plot"]) == 0
        split = load_summary(probe, "spectrum_summary.json")[
            "first_point"]["splitting_10"]

        # stage 2: drive at that frequency and check the fitted dynamics
        cfg = ini(tmp_path, FAST_GRID +
                  f"[drive]\namplitude = 1e-5\nfrequency = {split:.17g}\n")
        out = str(tmp_path / "out")
        assert main(["driven", "--config", cfg, "--out", out,
                     "--no-plot"]) == 0
        summary = load_summary(out, "driven_summary.json")
        assert summary["drive"]["frequency"] == pytest.approx(split, rel=1e-15,
                                                              abs=0.0)
        fitted = summary["fitted"]
        analytic = summary["analytic"]
        assert fitted["rabi_frequency"] == pytest.approx(
            analytic["rabi_frequency_observed"], rel=1e-2, abs=0.0)
        assert fitted["t1_driven_s"] == pytest.approx(
            analytic["t1_driven_s"], rel=3e-2, abs=0.0)
        assert fitted["t22_driven_s"] == pytest.approx(
            analytic["t22_driven_s"], rel=3e-2, abs=0.0)
        header, rows = read_csv(summary["csv"])
        assert "rho_33" in header  # four levels recorded
        # populations stay physical in the file as well
        for k in range(4):
            vals = column(header, rows, f"rho_{k}{k}")
            assert np.all(vals > -1e-8) and np.all(vals < 1.0 + 1e-8)


class TestSweepCommand:
    SWEEP = (FAST_GRID +
             "[sweep]\nparameter = M_x\nvalues = logspace(0.1, 10, 5) pH\n")

    def test_thread_count_does_not_change_output(self, tmp_path):
        cfg = ini(tmp_path, self.SWEEP)
        out1, out2 = str(tmp_path / "one"), str(tmp_path / "two")
        assert main(["sweep", "--config", cfg, "--out", out1, "--no-plot",
                     "--threads", "1"]) == 0
        assert main(["sweep", "--config", cfg, "--out", out2, "--no-plot",
                     "--threads", "3"]) == 0
        blob1 = open(os.path.join(out1, "sweep.csv"), "rb").read()
        blob2 = open(os.path.join(out2, "sweep.csv"), "rb").read()
        assert blob1 == blob2

    def test_columns_and_axis_order(self, tmp_path):
        cfg = ini(tmp_path, self.SWEEP)
        out = str(tmp_path / "out")
        assert main(["sweep", "--config", cfg, "--out", out]) == 0
        header, rows = read_csv(os.path.join(out, "sweep.csv"))
        assert header[:5] == ["M_x", "t1_s", "t2_s", "t_phi_s", "t1_driven_s"]
        assert "t22_driven_s" in header and "kappa2_per_s" in header
        axis = column(header, rows, "M_x")
        assert axis[0] == pytest.approx(1e-13, rel=1e-12, abs=0.0)
        assert axis[-1] == pytest.approx(1e-11, rel=1e-12, abs=0.0)
        assert np.all(np.diff(axis) > 0)
        png = os.path.join(out, "sweep.png")
        assert os.path.exists(png) and os.path.getsize(png) > 0


class TestTable2Command:
    def test_zero_amplitude_row(self, tmp_path):
        cfg = ini(tmp_path, FAST_GRID + "[table2]\namplitudes = 0\n")
        out = str(tmp_path / "out")
        assert main(["table2", "--config", cfg, "--out", out, "--no-plot",
                     "--threads", "2"]) == 0
        header, rows = read_csv(os.path.join(out, "table2.csv"))
        assert header == ["amplitude", "relaxation_n4_s", "relaxation_n2_s",
                          "decoherence_n4_s", "decoherence_n2_s"]
        assert len(rows) == 1
        amp, r4, r2, d4, d2 = (float(c) if c != "-" else None
                               for c in rows[0])
        assert amp == 0.0
        # without a drive the level count does not matter
        assert r4 == pytest.approx(r2, rel=1e-2, abs=0.0)
        assert d4 == pytest.approx(d2, rel=1e-2, abs=0.0)
        # and the relaxation/decoherence pair is the free-decay one
        assert r4 == pytest.approx(3.429e-6, rel=2e-2, abs=0.0)
        assert d4 == pytest.approx(2.243e-6, rel=2e-2, abs=0.0)


class TestResolveThreads:
    def test_explicit_argument_wins(self, monkeypatch):
        monkeypatch.setenv("FLUXSIM_THREADS", "7")
        assert runner.resolve_threads(3) == 3

    def test_rejects_non_positive_argument(self):
        with pytest.raises(ConfigurationError, match="at least 1"):
            runner.resolve_threads(0)

    def test_environment_fallback(self, monkeypatch):
        monkeypatch.setenv("FLUXSIM_THREADS", "2")
        assert runner.resolve_threads(None) == 2

    def test_rejects_garbage_environment(self, monkeypatch):
        monkeypatch.setenv("FLUXSIM_THREADS", "many")
        with pytest.raises(ConfigurationError, match="expected an integer"):
            runner.resolve_threads(None)

    def test_rejects_non_positive_environment(self, monkeypatch):
        monkeypatch.setenv("FLUXSIM_THREADS", "0")
        with pytest.raises(ConfigurationError, match="at least 1"):
            runner.resolve_threads(None)

    def test_default_without_environment(self, monkeypatch):
        monkeypatch.delenv("FLUXSIM_THREADS", raising=False)
        assert runner.resolve_threads(None) == min(4, os.cpu_count() or 1)
