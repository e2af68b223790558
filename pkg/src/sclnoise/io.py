"""CSV / key-value / config serialization.

CSV output is RFC-4180 style with LF line endings and full round-trip
precision for floats (repr), so parse(serialize(x)) is bit-equal.
"""

from __future__ import annotations

import configparser
import csv
import io as _io
import os

import numpy as np
from dataclasses import asdict, dataclass, fields

from .errors import InvalidParameterError

__all__ = [
    "format_cell",
    "emit_csv",
    "read_csv",
    "emit_keyvalue",
    "ExperimentConfig",
]


def format_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def emit_csv(path: str, header, rows) -> str:
    """Write a rectangular table; floats keep full round-trip precision."""
    header = list(header)
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                row = list(row)
                if len(row) != len(header):
                    raise InvalidParameterError(
                        f"ragged row of width {len(row)} in table of width {len(header)}")
                w.writerow([format_cell(v) for v in row])
    except OSError as exc:
        raise OSError(f"writing CSV {path}: {exc}") from exc
    return path


def read_csv(path: str) -> tuple[list, list]:
    """Read back a CSV as (header, rows-of-strings)."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        rows = list(r)
    if not rows:
        raise InvalidParameterError(f"{path}: empty CSV, expected a header row")
    return rows[0], rows[1:]


def emit_keyvalue(path: str, mapping: dict) -> str:
    """Flat 'key = value' text block (certificates, metadata)."""
    with open(path, "w") as fh:
        for k, v in mapping.items():
            fh.write(f"{k} = {format_cell(v)}\n")
    return path


# ---------------------------------------------------------------------------
# experiment configuration


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment configuration; round-trips through INI text bit-exactly."""

    experiment: str
    T: float = 1.0
    # flux
    flux_name: str = "model"
    flux_K: float = 2.0
    flux_moll_eps: float = 0.05
    # initial data
    u0_profile: str = "indicator"
    # spatial grid
    x_min: float = -4.0
    x_max: float = 5.0
    n_cells: int = 256
    # state grid
    xi_R: float = 1.0
    xi_n_cells: int = 64
    # solver
    viscosity_eps: float = 0.01
    cfl: float = 0.45
    # noise / ensemble
    sigma: float = 1.0
    n_paths: int = 64
    base_seed: int = 1234
    out_dir: str = "out"

    _SECTIONS = {
        "experiment": ("experiment", "T", "out_dir"),
        "flux": ("flux_name", "flux_K", "flux_moll_eps"),
        "initial": ("u0_profile",),
        "grid": ("x_min", "x_max", "n_cells", "xi_R", "xi_n_cells"),
        "solver": ("viscosity_eps", "cfl"),
        "noise": ("sigma", "n_paths", "base_seed"),
    }

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str  # keys are case-sensitive (e.g. the horizon T)
        d = asdict(self)
        for section, keys in self._SECTIONS.items():
            cp[section] = {k: format_cell(d[k]) for k in keys}
        buf = _io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        cp.optionxform = str  # keys are case-sensitive (e.g. the horizon T)
        cp.read_string(text)
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for section in cp.sections():
            for k, v in cp[section].items():
                if k not in types:
                    raise InvalidParameterError(f"unknown config key {k!r}")
                t = types[k]
                if t == "float":
                    kwargs[k] = float(v)
                elif t == "int":
                    kwargs[k] = int(v)
                else:
                    kwargs[k] = v
        if "experiment" not in kwargs:
            raise InvalidParameterError("config must name an experiment")
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_ini(fh.read())

    def save(self, path: str) -> str:
        with open(path, "w") as fh:
            fh.write(self.to_ini())
        return path


def default_out_root() -> str:
    return os.environ.get("SCLNOISE_OUT", "out")
