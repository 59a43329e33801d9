"""Field files: one ASCII header line, then n*n little-endian doubles in row-major order.

    MACHLAB-FIELD n=128 L=6.283185307179586 name=omega
"""

from __future__ import annotations

import os
import re

import numpy as np

from machlab.errors import ConfigurationError
from machlab.spectral import Grid, SpectralField

MAGIC = "MACHLAB-FIELD"
_HEADER = re.compile(rb"^MACHLAB-FIELD n=(\d+) L=(\S+) name=(\S+)\n")


def write_field(path, field: SpectralField, name: str) -> None:
    if not name or any(ch.isspace() for ch in name):
        raise ConfigurationError("field names must be nonempty and contain no whitespace")
    g = field.grid
    header = f"{MAGIC} n={g.n} L={g.L!r} name={name}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_field(path) -> tuple[SpectralField, str]:
    if not os.path.exists(path):
        raise ConfigurationError(f"field file not found: {path}")
    with open(path, "rb") as fh:
        line = fh.readline()
        m = _HEADER.match(line)
        if m is None:
            raise ConfigurationError(f"{path}: not a field file (bad header)")
        n, L, name = int(m.group(1)), float(m.group(2)), m.group(3).decode("ascii")
        data = fh.read()
    if len(data) != 8 * n * n:
        raise ConfigurationError(f"{path}: expected {8 * n * n} data bytes, found {len(data)}")
    vals = np.frombuffer(data, dtype="<f8").reshape(n, n).astype(float)
    return SpectralField(Grid(n, L), values=vals), name
