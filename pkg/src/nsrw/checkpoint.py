"""Binary state checkpoints with a bit-exact round trip.

Layout: magic "NSRW", version u32, d u32, N u32, then L, t, cutoff as f64,
all little-endian, followed by each component's complex coefficients as
interleaved (re, im) f64 pairs in row-major frequency order (standard FFT
layout). Components number d.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import FOURIER, SpectralField, fourier_field, make_grid

MAGIC = b"NSRW"
VERSION = 1
_HEADER = struct.Struct("<4sIIIddd")


class CheckpointError(ValueError):
    """Malformed or incompatible checkpoint file."""


def save_checkpoint(field: SpectralField, t: float, cutoff: float, path: str | Path) -> None:
    if field.space != FOURIER:
        raise ValueError("checkpoints store fourier-space states")
    g = field.grid
    if field.ncomp != g.d:
        raise ValueError("checkpoints store one component per dimension")
    header = _HEADER.pack(MAGIC, VERSION, g.d, g.N, g.L, float(t), float(cutoff))
    payload = np.ascontiguousarray(field.data).astype("<c16", copy=False).tobytes()
    Path(path).write_bytes(header + payload)


def load_checkpoint(path: str | Path):
    """Read a checkpoint; returns (field, t, cutoff)."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise CheckpointError("checkpoint truncated: header incomplete")
    magic, version, d, N, L, t, cutoff = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    grid = make_grid(d, N, L)
    expected = d * N**d * 16
    payload = blob[_HEADER.size:]
    if len(payload) != expected:
        raise CheckpointError(
            f"checkpoint truncated: expected {expected} payload bytes, got {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<c16").reshape((d,) + grid.shape)
    return fourier_field(grid, data.astype(np.complex128)), float(t), float(cutoff)
