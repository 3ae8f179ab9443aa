"""Monte Carlo verification of the averaged space-time estimates.

The central object is the weighted space-time norm

    ( integral_0^T t^{q*gamma} | (-Laplacian)^{sigma/2} e^{tD} f |_{L^p}^q dt )^{1/q}

of randomized data, which concentrates: the probability that it exceeds
lambda decays like C1 * exp(-C2 * lambda^2 / |f|_{H^{-s}}^2). The fit of
that exponent over an ensemble, and the r-th moment growth, are the two
quantitative checks here.
"""

from __future__ import annotations

from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .randomization import (
    RandomModel,
    hminus_s_norm,
    randomize,
    sample_coefficients,
)
from .spectral import FOURIER, SpectralField, ring_partition

__all__ = [
    "NormSpec",
    "TailFitResult",
    "check_admissible",
    "default_time_grid",
    "space_time_norm",
    "sample_space_time_norms",
    "fit_gaussian_tail",
    "monte_carlo_tails",
    "moment_bound_check",
]


@dataclass(frozen=True)
class NormSpec:
    """Exponent bundle (gamma, sigma, p, q, r, s, T) of a space-time norm."""

    gamma: float
    sigma: float
    p: float
    q: float
    r: float
    s: float
    T: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.s < 0:
            raise ValueError("s must be >= 0")
        if not self.T > 0:
            raise ValueError("T must be positive")


def check_admissible(spec: NormSpec) -> bool:
    """True iff (sigma + s - 2*gamma) * q < 2 and r >= p >= q >= 2."""
    ordered = spec.r >= spec.p >= spec.q >= 2
    return bool(ordered and (spec.sigma + spec.s - 2.0 * spec.gamma) * spec.q < 2.0)


def default_time_grid(T: float, points_per_decade: int = 64, decades: float = 6.0) -> np.ndarray:
    """Geometric quadrature grid on (0, T], T*10^-decades up to T."""
    npts = int(round(points_per_decade * decades)) + 1
    return np.geomspace(T * 10.0**-decades, T, npts)


def _is_hermitian(base: np.ndarray, d: int) -> bool:
    axes = tuple(range(1, 1 + d))
    mirrored = np.roll(np.flip(base, axis=axes), 1, axis=axes)
    scale = np.abs(base).max()
    if scale == 0.0:
        return True
    return bool(np.abs(np.conj(mirrored) - base).max() <= 1e-12 * scale)


_DECAY_CACHE: dict = {}
_DECAY_CACHE_MAX_ELEMS = 16_000_000


def _half_decay(grid, times: np.ndarray) -> np.ndarray | None:
    """exp(-t |xi|^2) on the rfft half-spectrum for every t, cached while
    small enough to keep; None tells the caller to stream per chunk."""
    half = grid.N // 2 + 1
    if times.size * grid.ksq.size // grid.N * half > _DECAY_CACHE_MAX_ELEMS:
        return None
    key = (grid.d, grid.N, grid.L, times.tobytes())
    hit = _DECAY_CACHE.get(key)
    if hit is None:
        ksq_half = grid.ksq[..., :half]
        shape = (-1,) + (1,) * grid.d
        hit = np.exp(-times.reshape(shape) * ksq_half[None])
        if len(_DECAY_CACHE) >= 4:
            _DECAY_CACHE.pop(next(iter(_DECAY_CACHE)))
        _DECAY_CACHE[key] = hit
    return hit


def _lp_norms_over_times(
    f: SpectralField, sigma: float, times: np.ndarray, p: float, chunk: int = 48
) -> np.ndarray:
    """|(-Laplacian)^{sigma/2} e^{tD} f|_{L^p} for every t, batched FFTs.

    Real (conjugate-symmetric) data takes a half-spectrum irfft path.
    """
    g = f.grid
    axes = tuple(range(2, 2 + g.d))
    sym = g.kabs**sigma if sigma > 0 else 1.0
    base = f.data * sym
    vol = g.cell_volume
    out = np.empty(times.size)
    sp = tuple(range(1, 1 + g.d))

    if _is_hermitian(base, g.d):
        half = g.N // 2 + 1
        base_h = np.ascontiguousarray(base[..., :half])
        cached = _half_decay(g, times)
        ksq_h = g.ksq[..., :half]
        for lo in range(0, times.size, chunk):
            tt = times[lo : lo + chunk]
            if cached is not None:
                decay = cached[lo : lo + tt.size]
            else:
                decay = np.exp(-tt.reshape((-1,) + (1,) * g.d) * ksq_h[None])
            block = np.fft.irfftn(
                base_h[None] * decay[:, None], s=g.shape, axes=axes, norm="ortho"
            )
            msq = np.sum(block * block, axis=1)
            out[lo : lo + tt.size] = (vol * np.sum(msq ** (p / 2.0), axis=sp)) ** (1.0 / p)
        return out

    for lo in range(0, times.size, chunk):
        tt = times[lo : lo + chunk]
        decay = np.exp(-tt.reshape((-1, 1) + (1,) * g.d) * g.ksq[None, None])
        block = np.fft.ifftn(base[None] * decay, axes=axes, norm="ortho")
        msq = np.sum(np.abs(block) ** 2, axis=1)
        out[lo : lo + tt.size] = (vol * np.sum(msq ** (p / 2.0), axis=sp)) ** (1.0 / p)
    return out


def _power_law_cells(times: np.ndarray, F: np.ndarray) -> float:
    """Integrate F over [times[0], times[-1]] treating each cell as a power
    law, plus the [0, times[0]] head extrapolated from the first cell."""
    total = 0.0
    t0, f0, f1 = times[0], F[0], F[1]
    # head: F ~ f0 * (t/t0)^beta on [0, t0]
    if f0 > 0 and f1 > 0:
        beta = np.log(f1 / f0) / np.log(times[1] / t0)
        if beta <= -1.0 + 1e-9:
            raise ValueError("space-time integrand is non-integrable near t = 0")
        total += f0 * t0 / (beta + 1.0)
    for i in range(times.size - 1):
        fa, fb = F[i], F[i + 1]
        ta, tb = times[i], times[i + 1]
        if fa > 0 and fb > 0:
            rho = tb / ta
            beta = np.log(fb / fa) / np.log(rho)
            if abs(beta + 1.0) < 1e-8:
                total += fa * ta * np.log(rho)
            else:
                total += fa * ta * (rho ** (beta + 1.0) - 1.0) / (beta + 1.0)
        else:
            total += 0.5 * (fa + fb) * (tb - ta)
    return total


def space_time_norm(
    f_omega: SpectralField,
    spec: NormSpec,
    time_grid: np.ndarray | None = None,
) -> float:
    """Weighted L^q-in-time, L^p-in-space norm of the heat evolution.

    Quadrature is power-law aware on a geometric grid, which resolves the
    t^{q*gamma} weight; gamma*q <= -1 is rejected as divergent.
    """
    if f_omega.space != FOURIER:
        raise ValueError("space_time_norm expects fourier-space data")
    if not check_admissible(spec):
        raise ValueError(
            f"inadmissible exponents: need (sigma+s-2*gamma)*q < 2 and r >= p >= q >= 2, "
            f"got sigma={spec.sigma}, s={spec.s}, gamma={spec.gamma}, "
            f"q={spec.q}, p={spec.p}, r={spec.r}"
        )
    if spec.q * spec.gamma <= -1.0:
        raise ValueError("gamma*q <= -1 makes the time integral divergent")
    times = default_time_grid(spec.T) if time_grid is None else np.asarray(time_grid, float)
    if times.size < 2 or not np.all(np.diff(times) > 0) or not np.all(times > 0):
        raise ValueError("time grid must be increasing and positive")
    vals = _lp_norms_over_times(f_omega, spec.sigma, times, spec.p)
    F = times ** (spec.q * spec.gamma) * vals**spec.q
    return float(_power_law_cells(times, F) ** (1.0 / spec.q))


def sample_space_time_norms(
    f: SpectralField,
    model: RandomModel,
    spec: NormSpec,
    M: int,
    time_grid: np.ndarray | None = None,
    workers: int = 1,
    sample_offset: int = 0,
) -> np.ndarray:
    """Space-time norms of M randomizations, in sample-index order.

    Each sample derives its own counter stream, so the result is identical
    for any worker count.
    """
    part = ring_partition(f.grid)
    times = default_time_grid(spec.T) if time_grid is None else np.asarray(time_grid, float)

    def one(i: int) -> float:
        draw = sample_coefficients(model, part.max_ring, sample_offset + i)
        return space_time_norm(randomize(f, draw, part), spec, times)

    if workers <= 1:
        return np.array([one(i) for i in range(M)])
    out = np.empty(M)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for i, v in enumerate(pool.map(one, range(M))):
            out[i] = v
    return out


@dataclass(frozen=True)
class TailFitResult:
    """Empirical tail of the ensemble with its Gaussian-exponent fit.

    The fit is log P(lambda) = log C1 - C2 * lambda^2 / hnorm^2 over the
    grid points whose empirical probability lies in [5/M, 0.5].
    """

    lambda_grid: np.ndarray
    empirical_prob: np.ndarray
    C1: float
    C2: float
    r_squared: float
    M: int
    samples: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.empirical_prob) > 0):
            raise ValueError("tail probabilities must be nonincreasing")


def fit_gaussian_tail(
    samples: np.ndarray,
    hnorm: float,
    lambda_grid: np.ndarray | None = None,
) -> TailFitResult:
    """Fit the quadratic-exponent tail law to an ensemble of norms."""
    values = np.asarray(samples, dtype=np.float64)
    M = values.size
    if M < 200:
        raise ValueError(f"need at least 200 samples for a tail fit, got {M}")
    if np.ptp(values) == 0.0:
        raise ValueError("all samples identical; tail is degenerate")
    if lambda_grid is None:
        lo, hi = np.quantile(values, [0.5, 0.995])
        lambda_grid = np.linspace(lo, hi, 33)
    lam = np.sort(np.asarray(lambda_grid, dtype=np.float64))
    if lam.size < 3 or np.ptp(lam) == 0.0:
        raise ValueError("degenerate lambda grid")
    sorted_vals = np.sort(values)
    prob = (M - np.searchsorted(sorted_vals, lam, side="left")) / M

    in_window = (prob >= 5.0 / M) & (prob <= 0.5)
    if in_window.sum() < 3:
        raise ValueError("fewer than 3 lambda points in the fit window [5/M, 0.5]")
    x = lam[in_window] ** 2 / hnorm**2
    y = np.log(prob[in_window])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return TailFitResult(
        lambda_grid=lam,
        empirical_prob=prob,
        C1=float(np.exp(intercept)),
        C2=float(-slope),
        r_squared=float(r2),
        M=M,
        samples=values,
    )


def monte_carlo_tails(
    f: SpectralField,
    model: RandomModel,
    spec: NormSpec,
    M: int,
    lambda_grid: np.ndarray | None = None,
    time_grid: np.ndarray | None = None,
    workers: int = 1,
) -> TailFitResult:
    """Draw M randomizations, tabulate P(norm >= lambda), fit the exponent."""
    values = sample_space_time_norms(f, model, spec, M, time_grid, workers)
    return fit_gaussian_tail(values, hminus_s_norm(f, spec.s), lambda_grid)


def moment_bound_check(
    f: SpectralField,
    model: RandomModel,
    spec: NormSpec,
    r: float | None = None,
    M: int = 400,
    time_grid: np.ndarray | None = None,
    workers: int = 1,
) -> float:
    """(E norm^r)^{1/r} / |f|_{H^{-s}} by Monte Carlo."""
    if M < 200:
        raise ValueError(f"need at least 200 samples, got {M}")
    r = spec.r if r is None else float(r)
    values = sample_space_time_norms(f, model, spec, M, time_grid, workers)
    hnorm = hminus_s_norm(f, spec.s)
    if hnorm == 0.0:
        return 0.0
    return float(np.mean(values**r) ** (1.0 / r) / hnorm)
