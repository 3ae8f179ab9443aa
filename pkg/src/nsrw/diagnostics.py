"""Scalar time series derived from trajectories and reconstructed fields.

Everything here is pure post-processing: the energy functional, the dual
norm of dw/dt, the weighted forcing norms whose size plays the role of the
threshold lambda, and finite-difference residuals of the reconstructed
velocity against the projected equation.

H^{-1} is realized with the inhomogeneous symbol (1 + |xi|^2)^{-1/2}; the
grid has a zero mode where the homogeneous version is singular, and all
data are mean-zero anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .solver import SolverConfig, Trajectory, nonlinear_rhs
from .spectral import (
    SpectralField,
    dealias,
    fourier_field,
    leray_project,
)
from .tails import NormSpec, check_admissible, space_time_norm

__all__ = [
    "EnergySeries",
    "energy",
    "DwdtReport",
    "dwdt_norm",
    "CondtgReport",
    "condtg_check",
    "nse_residual",
]

MIN_SNAPSHOT_RATE = 32.0  # snapshots per unit time required by energy()


@dataclass(frozen=True)
class EnergySeries:
    """Kinetic energy, accumulated dissipation and their combinations.

    total is the energy functional |w|^2 + int |grad w|^2; balance carries
    the factor 2 on the dissipation, which is the combination conserved
    exactly by pure heat flow.
    """

    times: np.ndarray
    kinetic: np.ndarray
    dissipation_cum: np.ndarray
    total: np.ndarray
    balance: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.dissipation_cum) < 0):
            raise ValueError("cumulative dissipation must be nondecreasing")
        for arr in (self.kinetic, self.dissipation_cum):
            if not np.all(np.isfinite(arr)):
                raise ValueError("energy series contains non-finite entries")


def energy(trajectory: Trajectory) -> EnergySeries:
    """Energy series on the snapshot grid, dissipation by trapezoid rule."""
    times = np.asarray(trajectory.times, dtype=np.float64)
    if times.size < 2:
        raise ValueError("energy needs at least two snapshots")
    if np.max(np.diff(times)) > 1.0 / MIN_SNAPSHOT_RATE + 1e-12:
        raise ValueError(
            f"snapshot cadence too coarse for energy quadrature: need at least "
            f"{MIN_SNAPSHOT_RATE} snapshots per unit time"
        )
    grid = trajectory.w_states[0].grid
    vol = grid.cell_volume
    kinetic = np.array(
        [vol * np.sum(np.abs(w.data) ** 2) for w in trajectory.w_states]
    )
    gradsq = np.array(
        [vol * np.sum(grid.ksq * np.abs(w.data) ** 2) for w in trajectory.w_states]
    )
    diss = np.concatenate(
        [[0.0], np.cumsum(0.5 * np.diff(times) * (gradsq[:-1] + gradsq[1:]))]
    )
    return EnergySeries(
        times=times,
        kinetic=kinetic,
        dissipation_cum=diss,
        total=kinetic + diss,
        balance=kinetic + 2.0 * diss,
    )


@dataclass(frozen=True)
class DwdtReport:
    times: np.ndarray
    values: np.ndarray
    time_norm: float
    time_exponent: float


def dwdt_norm(trajectory: Trajectory, config: SolverConfig) -> DwdtReport:
    """H^{-1} size of dw/dt per snapshot and its L^{4/d}-in-time norm.

    dw/dt is reassembled from the right-hand side (heat term plus the
    truncated transport terms) at each snapshot.
    """
    grid = trajectory.w_states[0].grid
    vol = grid.cell_volume
    weight = 1.0 / (1.0 + grid.ksq)
    values = []
    for w, g in zip(trajectory.w_states, trajectory.g_states):
        rhs = nonlinear_rhs(w, g, config.cutoff).data - grid.ksq * w.data
        values.append(np.sqrt(vol * np.sum(weight * np.abs(rhs) ** 2)))
    values = np.array(values)
    times = np.asarray(trajectory.times, dtype=np.float64)
    a = 4.0 / grid.d
    time_norm = float(np.trapezoid(values**a, times) ** (1.0 / a))
    return DwdtReport(times=times, values=values, time_norm=time_norm, time_exponent=a)


@dataclass(frozen=True)
class CondtgReport:
    """Realized forcing size: the sum of the weighted space-time norms
    that the existence threshold lambda is measured in."""

    d: int
    components: dict
    lam: float


def condtg_check(
    f_omega: SpectralField,
    s: float,
    gamma: float,
    T: float,
    time_grid: np.ndarray | None = None,
) -> CondtgReport:
    """Weighted forcing norms of g = e^{tD} f.

    In 2D this is the t^gamma-weighted L^4 space-time norm; in 3D the
    three norms (two of them of [I + (-Laplacian)^{1/4}] g) are summed.
    Inadmissible (gamma, s, sigma, q) combinations are rejected.
    """
    if gamma >= 0:
        raise ValueError("condtg_check needs gamma < 0")
    grid = f_omega.grid
    d = grid.d

    def _norm(fld: SpectralField, p: float, q: float, sigma_check: float) -> float:
        spec_check = NormSpec(gamma=gamma, sigma=sigma_check, p=p, q=q, r=p, s=s, T=T)
        if not check_admissible(spec_check):
            raise ValueError(
                f"inadmissible combination for condtg: sigma={sigma_check}, s={s}, "
                f"gamma={gamma}, q={q}"
            )
        run_spec = NormSpec(gamma=gamma, sigma=0.0, p=p, q=q, r=p, s=s, T=T)
        return space_time_norm(fld, run_spec, time_grid)

    if d == 2:
        lam = _norm(f_omega, 4.0, 4.0, 0.0)
        return CondtgReport(d=2, components={"L4_L4": lam}, lam=lam)

    bracket = fourier_field(grid, f_omega.data * (1.0 + grid.kabs**0.5))
    comps = {
        "L2_L6_bracket": _norm(bracket, 6.0, 2.0, 0.5),
        "L83_L83_bracket": _norm(bracket, 8.0 / 3.0, 8.0 / 3.0, 0.5),
        "L8_L8": _norm(f_omega, 8.0, 8.0, 0.0),
    }
    return CondtgReport(d=3, components=comps, lam=float(sum(comps.values())))


def _projected_transport(u: SpectralField) -> SpectralField:
    """P div(u x u) with dealiased physical-space products."""
    grid = u.grid
    axes = tuple(range(1, grid.d + 1))
    ud = dealias(u)
    U = np.fft.ifftn(ud.data, axes=axes, norm="ortho")
    div = np.empty_like(ud.data)
    that = {}
    for i in range(grid.d):
        for j in range(i, grid.d):
            that[(i, j)] = np.fft.fftn(U[i] * U[j], norm="ortho")
    for i in range(grid.d):
        acc = np.zeros(grid.shape, dtype=np.complex128)
        for j in range(grid.d):
            tij = that[(i, j)] if i <= j else that[(j, i)]
            acc += 1j * grid.axis_frequency(j) * tij
        div[i] = acc
    return leray_project(fourier_field(grid, div))


def nse_residual(
    times: np.ndarray, u_states: list, include_nonlinear: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """H^{-1} residual of the projected equation at snapshot midpoints.

    Uses the centered difference (u(t+h) - u(t))/h against the right-hand
    side evaluated on the midpoint average, so exact solutions show O(h^2).
    """
    times = np.asarray(times, dtype=np.float64)
    if times.size < 2:
        raise ValueError("nse_residual needs at least two snapshots")
    grid = u_states[0].grid
    vol = grid.cell_volume
    weight = 1.0 / (1.0 + grid.ksq)
    mids, vals = [], []
    for j in range(times.size - 1):
        h = times[j + 1] - times[j]
        u1, u2 = u_states[j], u_states[j + 1]
        um = 0.5 * (u1 + u2)
        resid = (u2.data - u1.data) / h + grid.ksq * um.data
        if include_nonlinear:
            resid = resid + _projected_transport(um).data
        mids.append(times[j] + 0.5 * h)
        vals.append(np.sqrt(vol * np.sum(weight * np.abs(resid) ** 2)))
    return np.array(mids), np.array(vals)
