"""Initial-data constructors.

All fields come out divergence-free, mean-zero, Nyquist-free and real in
physical space. The borderline family is the default experiment input: a
homogeneous radial amplitude profile |xi|^(s - tilt) with tilt slightly
above d/2 puts the data just inside H^{-s} on the resolved band while
keeping the heat-decay norms exactly self-similar, so their small-time
slopes are clean at desk resolutions. Phases and directions are keyed by
integer mode, so refining N extends the same realization instead of
resampling it.
"""

from __future__ import annotations

import numpy as np

from . import _rng
from .randomization import hminus_s_norm
from .spectral import (
    Grid,
    SpectralField,
    fourier_field,
    l2_norm,
    leray_project,
    physical_field,
    transform,
    zero_mean,
    zero_nyquist,
)


def default_tilt(d: int) -> float:
    return d / 2.0 + 0.05


def _integer_modes(grid: Grid):
    k_int = np.fft.fftfreq(grid.N, d=1.0 / grid.N).astype(np.int64)
    axes = []
    for ax in range(grid.d):
        sh = [1] * grid.d
        sh[ax] = grid.N
        axes.append(np.broadcast_to(k_int.reshape(sh), grid.shape))
    return axes


def _canonical_modes(grid: Grid):
    """Sign s and canonical representative of each +-xi pair.

    The canonical mode is the one whose first nonzero integer component is
    positive; keying randomness by it makes conjugate symmetry (and hence
    real physical fields) exact by construction.
    """
    axes = _integer_modes(grid)
    sign = np.zeros(grid.shape, dtype=np.int64)
    for a in axes:
        sign = np.where(sign == 0, np.sign(a), sign)
    sign = np.where(sign == 0, 1, sign)  # xi = 0
    offset = np.int64(1 << 20)
    key = np.zeros(grid.shape, dtype=np.int64)
    for a in axes:
        key = (key << np.int64(21)) + (sign * a + offset)
    return sign, key


def _random_unit_directions(grid: Grid, seed: int, key: np.ndarray) -> np.ndarray:
    comps = []
    for c in range(grid.d):
        w0 = _rng.fold(seed, _rng.STREAM_DATA_DIRECTION, c, 0, key)
        w1 = _rng.fold(seed, _rng.STREAM_DATA_DIRECTION, c, 1, key)
        comps.append(_rng.standard_gaussian(w0, w1))
    v = np.stack(comps)
    norm = np.sqrt(np.sum(v * v, axis=0))
    return v / np.where(norm == 0.0, 1.0, norm)


def _random_field_with_profile(grid: Grid, amplitude: np.ndarray, seed: int) -> SpectralField:
    sign, key = _canonical_modes(grid)
    theta = 2.0 * np.pi * _rng.uniform01(_rng.fold(seed, _rng.STREAM_DATA_PHASE, 0, 0, key))
    phase = np.exp(1j * sign * theta)
    dirs = _random_unit_directions(grid, seed, key)
    # N^{d/2} pins the continuum Fourier-series amplitude, so the same seed
    # on a finer grid extends the same function instead of shrinking it
    scale = float(grid.N) ** (grid.d / 2.0)
    f = fourier_field(grid, dirs * (scale * amplitude * phase)[None, ...])
    f = leray_project(f)
    return zero_mean(zero_nyquist(f))


def borderline_field(
    grid: Grid,
    s: float,
    seed: int,
    tilt: float | None = None,
    normalize: bool = True,
) -> SpectralField:
    """Random divergence-free data sitting at the edge of H^{-s}.

    With normalize=True the field is scaled to unit H^{-s} norm; without
    it, mode values are resolution-independent, which refinement studies
    rely on.
    """
    rho = default_tilt(grid.d) if tilt is None else float(tilt)
    kabs_safe = np.where(grid.kabs == 0.0, 1.0, grid.kabs)
    amplitude = np.where(grid.kabs == 0.0, 0.0, kabs_safe ** (s - rho))
    f = _random_field_with_profile(grid, amplitude, seed)
    if normalize:
        nrm = hminus_s_norm(f, s)
        if nrm == 0.0:
            raise ValueError("degenerate borderline field")
        f = (1.0 / nrm) * f
    return f


def smooth_random_field(grid: Grid, seed: int, band: int = 3, amplitude: float = 1.0) -> SpectralField:
    """Band-limited random divergence-free data for manufactured runs."""
    k_int = _integer_modes(grid)
    keep = np.ones(grid.shape, dtype=bool)
    for a in k_int:
        keep &= np.abs(a) <= band
    profile = np.exp(-0.5 * grid.ksq) * keep
    f = _random_field_with_profile(grid, profile, seed)
    nrm = l2_norm(f)
    if nrm == 0.0:
        raise ValueError("degenerate smooth field")
    return (amplitude / nrm) * f


def taylor_green(grid: Grid, amplitude: float = 1.0) -> SpectralField:
    """Classical 2D cellular vortex (sin x cos y, -cos x sin y).

    Its self-advection is a pure gradient, so under the divergence-free
    projection the exact flow is plain heat decay of the data.
    """
    if grid.d != 2:
        raise ValueError("taylor_green is a 2D field")
    x, y = grid.coordinates()
    scale = 2.0 * np.pi / grid.L
    u = amplitude * np.sin(scale * x) * np.cos(scale * y)
    v = -amplitude * np.cos(scale * x) * np.sin(scale * y)
    phys = physical_field(grid, np.stack([u, v]).astype(np.complex128))
    return zero_mean(zero_nyquist(transform(phys, "forward")))
