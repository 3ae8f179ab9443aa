"""Heat semigroup and decay-rate verification.

The semigroup is the exact diagonal symbol exp(-t|xi|^2). Decay checks fit
the small-time log-log slope of derivative norms of the evolved data and
compare pointwise against the expected envelopes:

    L2:   (1 + t^(-(s+k)/2)) * |f|_{H^{-s}}
    Linf: max(t^{-1}, t^{-(k+s+d/2)}) * |f|_{H^{-s}}           (printed form)
    Linf: (max(t^{-1}, t^{-(k+s+d/2)}))^{1/2}                  (forcing form)

The two Linf envelopes differ by a square root; both are reported, only
finiteness is asserted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .randomization import hminus_s_norm
from .spectral import (
    FOURIER,
    SpectralField,
    as_physical,
    fourier_field,
    l2_norm,
)

__all__ = [
    "heat_semigroup",
    "DecayReport",
    "LinearEstimateReport",
    "check_linear_estimates",
    "CondgReport",
    "condg_check",
    "small_time_window",
    "default_decay_time_grid",
]


def heat_semigroup(f: SpectralField, t: float) -> SpectralField:
    """Coefficientwise multiplication by exp(-t |xi|^2); t >= 0."""
    if f.space != FOURIER:
        raise ValueError("heat semigroup acts on fourier-space fields")
    if t < 0:
        raise ValueError(f"heat semigroup needs t >= 0, got {t}")
    return fourier_field(f.grid, f.data * np.exp(-t * f.grid.ksq))


@dataclass(frozen=True)
class DecayReport:
    """Sampled norm decay of one derivative order in one norm.

    bound_constant is the largest sampled ratio value/envelope; the slope
    is a least-squares fit of log(value) on log(t) over the small-time
    window where the resolved band dominates.
    """

    k: int
    norm_kind: str
    times: np.ndarray
    values: np.ndarray
    ratios: np.ndarray
    bound_constant: float
    fitted_slope: float

    def __post_init__(self):
        if not (np.all(np.diff(self.times) > 0) and np.all(self.times > 0)):
            raise ValueError("decay report times must be positive and increasing")


@dataclass(frozen=True)
class LinearEstimateReport:
    l2: DecayReport
    linf: DecayReport
    linf_sqrt_bound_constant: float


def small_time_window(grid) -> tuple[float, float]:
    """The slope-fit decade [t_min, 10 t_min], t_min = 2.5 / kmax^2.

    Below t_min the unresolved band would carry more than e^{-5} of the
    decay and grid truncation pollutes the scaling; much above it, the
    missing frequencies under 2*pi/L flatten small-s slopes instead.
    """
    t_min = 2.5 / grid.kmax**2
    return t_min, 10.0 * t_min


def default_decay_time_grid(grid, T: float, points_per_decade: int = 16) -> np.ndarray:
    lo, _ = small_time_window(grid)
    lo = min(lo, T / 10.0)
    decades = np.log10(T / lo)
    npts = max(int(round(decades * points_per_decade)) + 1, 8)
    return np.geomspace(lo, T, npts)


def _fit_loglog_slope(times: np.ndarray, values: np.ndarray, window: tuple[float, float]) -> float:
    lo, hi = window
    sel = (times >= lo * (1 - 1e-12)) & (times <= hi * (1 + 1e-12)) & (values > 0)
    if sel.sum() < 2:
        raise ValueError("time grid has fewer than 2 points in the slope-fit window")
    return float(np.polyfit(np.log(times[sel]), np.log(values[sel]), 1)[0])


def _derivative_stack(f: SpectralField, k: int) -> list[np.ndarray]:
    """All order-k derivative coefficient arrays of every component."""
    stack = [f.data]
    for _ in range(k):
        stack = [
            1j * f.grid.axis_frequency(ax) * arr
            for arr in stack
            for ax in range(f.grid.d)
        ]
    return stack


def _linf_of_derivatives(f: SpectralField, k: int) -> float:
    total = np.zeros(f.grid.shape)
    for arr in _derivative_stack(f, k):
        phys = as_physical(fourier_field(f.grid, arr))
        total += np.sum(np.abs(phys.data) ** 2, axis=0)
    return float(np.sqrt(total.max()))


def check_linear_estimates(
    f_omega: SpectralField,
    s: float,
    k: int,
    t_grid: np.ndarray,
) -> LinearEstimateReport:
    """Sample |grad^k e^{tD} f| in L2 and Linf and compare to the envelopes.

    Returns one report per norm, each carrying the max bounded-constant
    ratio and the fitted small-time slope.
    """
    if f_omega.space != FOURIER:
        raise ValueError("check_linear_estimates expects fourier-space data")
    if k not in (0, 1, 2):
        raise ValueError(f"derivative order must be 0, 1 or 2, got {k}")
    times = np.sort(np.asarray(t_grid, dtype=np.float64))
    if times.size == 0:
        raise ValueError("empty time grid")
    if not np.all(times > 0):
        raise ValueError("decay times must be positive")

    g = f_omega.grid
    hnorm = hminus_s_norm(f_omega, s)
    coeff_sq = np.sum(np.abs(f_omega.data) ** 2, axis=0)
    weight = g.ksq**k if k > 0 else 1.0

    l2_vals = np.array(
        [
            np.sqrt(g.cell_volume * np.sum(weight * np.exp(-2.0 * t * g.ksq) * coeff_sq))
            for t in times
        ]
    )
    linf_vals = np.array(
        [_linf_of_derivatives(heat_semigroup(f_omega, t), k) for t in times]
    )

    d = g.d
    l2_env = (1.0 + times ** (-(s + k) / 2.0)) * hnorm
    linf_env_core = np.maximum(times**-1.0, times ** (-(k + s + d / 2.0)))
    linf_env = linf_env_core * hnorm
    linf_env_sqrt = np.sqrt(linf_env_core) * hnorm

    window = small_time_window(g)
    l2_report = DecayReport(
        k=k,
        norm_kind="L2",
        times=times,
        values=l2_vals,
        ratios=l2_vals / l2_env,
        bound_constant=float(np.max(l2_vals / l2_env)),
        fitted_slope=_fit_loglog_slope(times, l2_vals, window),
    )
    linf_report = DecayReport(
        k=k,
        norm_kind="Linf",
        times=times,
        values=linf_vals,
        ratios=linf_vals / linf_env,
        bound_constant=float(np.max(linf_vals / linf_env)),
        fitted_slope=_fit_loglog_slope(times, linf_vals, window),
    )
    return LinearEstimateReport(
        l2=l2_report,
        linf=linf_report,
        linf_sqrt_bound_constant=float(np.max(linf_vals / linf_env_sqrt)),
    )


@dataclass(frozen=True)
class CondgReport:
    """Suprema of the forcing-envelope ratios of g = e^{tD} f."""

    times: np.ndarray
    l2_ratios: np.ndarray
    linf_ratios: dict
    sup_l2: float
    sup_linf: dict


def condg_check(f_omega: SpectralField, s: float, t_grid: np.ndarray) -> CondgReport:
    """Ratios of g's norms against the forcing envelopes (1 + t^{-s/2}) in
    L2 and the square-rooted max bracket in Linf for k = 0, 1."""
    if f_omega.space != FOURIER:
        raise ValueError("condg_check expects fourier-space data")
    times = np.sort(np.asarray(t_grid, dtype=np.float64))
    if times.size == 0 or not np.all(times > 0):
        raise ValueError("condg_check needs a nonempty positive time grid")
    g = f_omega.grid
    d = g.d

    l2_vals = np.array([l2_norm(heat_semigroup(f_omega, t)) for t in times])
    l2_ratios = l2_vals / (1.0 + times ** (-s / 2.0))

    linf_ratios = {}
    for k in (0, 1):
        vals = np.array(
            [_linf_of_derivatives(heat_semigroup(f_omega, t), k) for t in times]
        )
        env = np.sqrt(np.maximum(times**-1.0, times ** (-(k + s + d / 2.0))))
        linf_ratios[k] = vals / env

    return CondgReport(
        times=times,
        l2_ratios=l2_ratios,
        linf_ratios=linf_ratios,
        sup_l2=float(l2_ratios.max()),
        sup_linf={k: float(v.max()) for k, v in linf_ratios.items()},
    )
