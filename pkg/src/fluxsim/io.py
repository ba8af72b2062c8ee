"""Deterministic CSV and JSON output.

Every CSV artifact starts with the signature line ``# fluxsim v1``,
followed by a comma-separated header and data rows.  Floats are written
with 17 significant digits in scientific notation so results
round-trip exactly and identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
import os

CSV_SIGNATURE = "# fluxsim v1"


def format_value(value) -> str:
    """Render one CSV cell; floats get the full-precision format."""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.16e}"
    if isinstance(value, int):
        return str(value)
    return str(value)


def write_csv(path: str, columns: list[str], rows) -> str:
    """Write a signed, deterministic CSV file and return its path."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    lines = [CSV_SIGNATURE, ",".join(columns)]
    for row in rows:
        cells = [format_value(v) for v in row]
        if len(cells) != len(columns):
            raise ValueError(f"write_csv: row width {len(cells)} does not match "
                             f"{len(columns)} columns")
        lines.append(",".join(cells))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    """Read a CSV produced by :func:`write_csv`; cells stay as strings."""
    with open(path) as fh:
        signature = fh.readline().rstrip("\n")
        if signature != CSV_SIGNATURE:
            raise ValueError(f"{path}: missing '{CSV_SIGNATURE}' signature line")
        header = fh.readline().rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    return header, rows


def write_summary(path: str, payload: dict) -> str:
    """Write a JSON summary with sorted keys for determinism."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
