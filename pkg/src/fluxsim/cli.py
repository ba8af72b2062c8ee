"""Command-line interface.

Subcommands mirror the pipeline stages::

    fluxsim spectrum    eigenenergies / matrix elements along the bias
    fluxsim bath        circuit admittances and noise spectra
    fluxsim free-decay  undriven relaxation and decoherence times
    fluxsim driven      Rabi evolution under a resonant flux drive
    fluxsim table2      decay times versus drive amplitude (4 vs 2 levels)
    fluxsim sweep       closed-form times along one circuit parameter

Exit codes: 0 success, 2 configuration problem, 3 numerical failure,
4 fit failure (no convergence or model mismatch).
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ConfigurationError, FitError, NumericError
from . import runner

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_FIT = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluxsim",
        description="Decoherence of a driven two-dimensional SQUID flux qubit "
                    "coupled to dissipative control and readout circuits.")
    parser.add_argument("--version", action="version", version="fluxsim 1.0")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None,
                        help="INI configuration file (defaults describe the "
                             "reference device)")
    common.add_argument("--out", metavar="DIR", default="fluxsim-out",
                        help="output directory (default: %(default)s)")
    common.add_argument("--no-plot", action="store_true",
                        help="skip PNG rendering, write only CSV/JSON")

    threaded = argparse.ArgumentParser(add_help=False)
    threaded.add_argument("--threads", type=int, default=None, metavar="N",
                          help="worker threads (default: FLUXSIM_THREADS or "
                               "up to 4)")

    refinable = argparse.ArgumentParser(add_help=False)
    refinable.add_argument("--dt-refine", action="store_true",
                           help="repeat with half the time step and report "
                                "the drift of the fitted times")

    sub.add_parser("spectrum", parents=[common],
                   help="eigenenergies and flux matrix elements")
    sub.add_parser("bath", parents=[common],
                   help="admittances and noise spectral densities")
    sub.add_parser("free-decay", parents=[common, refinable],
                   help="undriven decay: T1, T2, T_phi")
    sub.add_parser("driven", parents=[common, refinable],
                   help="driven evolution: Rabi frequency and driven decay times")
    sub.add_parser("table2", parents=[common, threaded],
                   help="decay times versus drive amplitude")
    sub.add_parser("sweep", parents=[common, threaded],
                   help="analytic times along a circuit-parameter sweep")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        plot = not args.no_plot
        if args.command == "spectrum":
            summary = runner.run_spectrum(cfg, args.out, plot)
        elif args.command == "bath":
            summary = runner.run_bath(cfg, args.out, plot)
        elif args.command == "free-decay":
            summary = runner.run_free_decay(cfg, args.out, plot,
                                            dt_refine=args.dt_refine)
        elif args.command == "driven":
            summary = runner.run_driven(cfg, args.out, plot,
                                        dt_refine=args.dt_refine)
        elif args.command == "table2":
            summary = runner.run_table2(cfg, args.out, plot,
                                        threads=args.threads)
        else:
            summary = runner.run_sweep(cfg, args.out, plot,
                                       threads=args.threads)
    except ConfigurationError as exc:
        print(f"fluxsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"fluxsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FitError as exc:
        print(f"fluxsim: fit failure: {exc}", file=sys.stderr)
        return EXIT_FIT
    print(f"fluxsim {args.command}: wrote {summary['csv']}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
