"""Artifact persistence: CSV/JSON writers and the run manifest.

CSV floats carry 17 significant digits so a written value round-trips to the
same double; files contain no timestamps, which makes byte-identical re-runs
possible.  Every run directory gets a manifest recording the subcommand, the
fully resolved configuration and its hash, the package version and the
artifact names: the manifest alone reproduces the directory.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig

__all__ = [
    "fmt",
    "write_csv",
    "write_matrix_csv",
    "write_json",
    "write_manifest",
    "read_manifest",
    "read_csv",
]

MANIFEST_NAME = "manifest.json"


def fmt(value) -> str:
    """Lossless float formatting (17 significant digits)."""
    return f"{float(value):.17g}"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if not isinstance(v, str) else v
                              for v in row) + "\n")
    return path


def write_matrix_csv(path, first_header, first_column, value_headers,
                     values) -> Path:
    """Matrix with a leading coordinate column (e.g. t, u1..uN)."""
    values = np.asarray(values)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(",".join([first_header, *value_headers]) + "\n")
        for lead, row in zip(first_column, values):
            fh.write(fmt(lead) + "," + ",".join(fmt(v) for v in row) + "\n")
    return path


def write_json(path, payload) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_manifest(out_dir, subcommand: str, config: RunConfig,
                   artifacts, extra=None) -> Path:
    payload = {
        "subcommand": subcommand,
        "config": config.canonical_dict(),
        "config_hash": config.config_hash(),
        "version": __version__,
        "artifacts": sorted(str(a) for a in artifacts),
    }
    if extra:
        payload["extra"] = extra
    return write_json(Path(out_dir) / MANIFEST_NAME, payload)


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def read_csv(path):
    """Header list plus a float matrix (rows x columns)."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, data
