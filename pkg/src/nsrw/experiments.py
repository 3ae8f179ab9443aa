"""Experiment orchestration and artifact emission.

Each experiment writes series.csv, summary.json, plotdata/*.tsv and a
meta.json (timestamps and execution environment) under the configured
output directory, and nothing anywhere else. summary.json and series.csv
are byte-deterministic for a fixed config and seed, independent of the
worker count: every Monte Carlo sample derives its own counter stream and
results are reduced in sample-index order.
"""

from __future__ import annotations

import datetime
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig
from .data import borderline_field, smooth_random_field, taylor_green
from .diagnostics import condtg_check, dwdt_norm
from .heat import check_linear_estimates, condg_check, default_decay_time_grid
from .randomization import (
    hminus_s_norm,
    randomize,
    sample_coefficients,
    verify_subgaussian,
)
from .solver import solve
from .spectral import divergence_ratio, l2_norm, make_grid, ring_partition
from .tails import fit_gaussian_tail, monte_carlo_tails

ENERGY_TOL = 1e-8
DIVERGENCE_TOL = 1e-10
TAYLOR_GREEN_TOL = 1e-6
SUBGAUSSIAN_TOL = 1e-9
SLOPE_TOL = 0.1


@dataclass
class ExperimentResult:
    status: int
    summary: dict
    output_dir: Path


def resolve_workers(cfg: ExperimentConfig) -> int:
    cap = os.environ.get("NSRW_THREADS")
    workers = cfg.workers
    if cap is not None:
        workers = min(workers, max(int(cap), 1))
    return max(workers, 1)


def _ordered_map(fn, count: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_table(path: Path, names: list, columns: list, sep: str = ","):
    lengths = {len(c) for c in columns}
    if len(lengths) != 1:
        raise ValueError("ragged table columns")
    lines = [sep.join(names)]
    for row in zip(*columns):
        lines.append(sep.join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def build_data_field(cfg: ExperimentConfig):
    grid = make_grid(cfg.d, cfg.N, cfg.L)
    if cfg.data == "taylor_green":
        return grid, taylor_green(grid)
    if cfg.data == "smooth_random":
        return grid, smooth_random_field(grid, cfg.master_seed)
    return grid, borderline_field(
        grid, cfg.s, cfg.master_seed, tilt=cfg.data_tilt, normalize=cfg.normalize_data
    )


def _randomized_data(cfg: ExperimentConfig, grid, f, sample_index: int = 0):
    if not cfg.randomize_data:
        return f
    part = ring_partition(grid)
    model = cfg.random_model()
    return randomize(f, sample_coefficients(model, part.max_ring, sample_index), part)


# ---------------------------------------------------------------------------
# individual experiments


def _run_randomize(cfg: ExperimentConfig, workers: int):
    grid, f = build_data_field(cfg)
    part = ring_partition(grid)
    model = cfg.random_model()
    base = hminus_s_norm(f, cfg.s)
    M = cfg.monte_carlo_M

    def one(i: int) -> float:
        f_om = randomize(f, sample_coefficients(model, part.max_ring, i), part)
        return hminus_s_norm(f_om, cfg.s) / base

    ratios = np.array(_ordered_map(one, M, workers))
    report = verify_subgaussian(model, np.linspace(-10.0, 10.0, 200))
    occ = part.occupancy()

    second_moment = float(np.mean(ratios**2))
    summary = {
        "hminus_norm_base": base,
        "norm_ratio_mean": float(ratios.mean()),
        "norm_ratio_max_abs_dev": float(np.abs(ratios - 1.0).max()),
        "second_moment": second_moment,
        "second_moment_rel_err": abs(second_moment - 1.0),
        "subgaussian_family": model.family,
        "subgaussian_c": model.c,
        "subgaussian_max_margin": report.max_margin,
        "ring_count": int(part.max_ring),
        "ring_occupancy_min": int(occ.min()),
        "ring_occupancy_max": int(occ.max()),
        "ring_occupancy_mean": float(occ.mean()),
        "empty_rings": int(np.sum(occ == 0)),
        "samples": M,
    }
    failures = []
    if report.max_margin > SUBGAUSSIAN_TOL:
        failures.append(
            f"sub-gaussian margin {report.max_margin} exceeds {SUBGAUSSIAN_TOL}"
        )
    if model.family == "rademacher" and summary["norm_ratio_max_abs_dev"] > 1e-12:
        failures.append("rademacher draws must preserve the data norm to 1e-12")
    if model.family in ("rademacher", "gaussian") and M >= 2000:
        if summary["second_moment_rel_err"] > 0.05:
            failures.append(
                f"ensemble second moment off by {summary['second_moment_rel_err']} (> 5%)"
            )
    series = (["sample", "hminus_norm_ratio"], [np.arange(M), ratios])
    plotdata = {
        "subgaussian_margin": (["gamma", "margin"], [report.gammas, report.margins])
    }
    return summary, failures, series, plotdata


def _run_heatflow(cfg: ExperimentConfig, workers: int):
    grid, f = build_data_field(cfg)
    f_om = _randomized_data(cfg, grid, f)
    t_grid = default_decay_time_grid(grid, cfg.T, cfg.t_points_per_decade)

    summary = {"times": len(t_grid), "k_orders": list(cfg.k_orders)}
    failures = []
    names = ["time"]
    columns = [t_grid]
    for k in cfg.k_orders:
        rep = check_linear_estimates(f_om, cfg.s, k, t_grid)
        target = -(cfg.s + k) / 2.0
        summary[f"l2_slope_k{k}"] = rep.l2.fitted_slope
        summary[f"l2_slope_target_k{k}"] = target
        summary[f"l2_bound_constant_k{k}"] = rep.l2.bound_constant
        summary[f"linf_slope_k{k}"] = rep.linf.fitted_slope
        summary[f"linf_bound_constant_k{k}"] = rep.linf.bound_constant
        summary[f"linf_sqrt_bound_constant_k{k}"] = rep.linf_sqrt_bound_constant
        names += [f"l2_k{k}", f"linf_k{k}", f"l2_ratio_k{k}", f"linf_ratio_k{k}"]
        columns += [rep.l2.values, rep.linf.values, rep.l2.ratios, rep.linf.ratios]
        if cfg.data == "borderline":
            err = abs(rep.l2.fitted_slope - target)
            if err > SLOPE_TOL:
                failures.append(
                    f"k={k}: fitted L2 slope {rep.l2.fitted_slope} misses target "
                    f"{target} by {err} (> {SLOPE_TOL})"
                )
        if not np.isfinite(rep.l2.bound_constant) or not np.isfinite(rep.linf.bound_constant):
            failures.append(f"k={k}: non-finite bound constant")

    cg = condg_check(f_om, cfg.s, t_grid)
    summary["condg_sup_l2"] = cg.sup_l2
    summary["condg_sup_linf_k0"] = cg.sup_linf[0]
    summary["condg_sup_linf_k1"] = cg.sup_linf[1]
    plotdata = {
        "condg_ratios": (
            ["time", "l2_ratio", "linf_ratio_k0", "linf_ratio_k1"],
            [cg.times, cg.l2_ratios, cg.linf_ratios[0], cg.linf_ratios[1]],
        )
    }
    return summary, failures, (names, columns), plotdata


def _run_tails(cfg: ExperimentConfig, workers: int):
    grid, f = build_data_field(cfg)
    model = cfg.random_model()
    spec = cfg.norm_spec()
    fit = monte_carlo_tails(f, model, spec, cfg.monte_carlo_M, workers=workers)
    hnorm = hminus_s_norm(f, cfg.s)
    summary = {
        "C1": fit.C1,
        "C2": fit.C2,
        "r_squared": fit.r_squared,
        "M": fit.M,
        "hminus_norm": hnorm,
        "sample_median": float(np.quantile(fit.samples, 0.5)),
        "sample_q995": float(np.quantile(fit.samples, 0.995)),
        "sample_mean": float(fit.samples.mean()),
    }
    failures = []
    if cfg.monte_carlo_M >= 1000:
        if fit.r_squared < 0.95:
            failures.append(f"tail fit r_squared {fit.r_squared} below 0.95")
        if fit.C2 <= 0:
            failures.append(f"tail exponent C2 {fit.C2} not positive")
    series = (["lambda", "empirical_prob"], [fit.lambda_grid, fit.empirical_prob])
    mask = (fit.empirical_prob >= 5.0 / fit.M) & (fit.empirical_prob <= 0.5)
    lam2 = fit.lambda_grid[mask] ** 2 / hnorm**2
    logp = np.log(fit.empirical_prob[mask])
    fitline = np.log(fit.C1) - fit.C2 * lam2
    plotdata = {
        "tail_fit": (
            ["lambda_sq_scaled", "log_prob", "fit"],
            [lam2, logp, fitline],
        )
    }
    return summary, failures, series, plotdata


def _run_solve(cfg: ExperimentConfig, workers: int, outdir: Path, resume: str | None):
    grid, f = build_data_field(cfg)
    f_om = _randomized_data(cfg, grid, f)
    sconf = cfg.solver_config()
    if resume is not None:
        state, t0, ck_cutoff = load_checkpoint(resume)
        if state.grid != grid:
            raise ValueError("checkpoint grid does not match config")
        if not np.isclose(ck_cutoff, sconf.cutoff):
            raise ValueError("checkpoint cutoff does not match config")
        traj = solve(sconf, f_om, resume_state=state, resume_time=t0)
    else:
        traj = solve(sconf, f_om)

    log = traj.energy_log
    snap_idx = np.searchsorted(log.times, traj.times)
    w_l2 = np.sqrt(log.kinetic[snap_idx])
    div_rel = np.array([divergence_ratio(w) for w in traj.w_states])
    dwdt = dwdt_norm(traj, sconf)

    f_l2 = l2_norm(f_om)
    from .solver import reconstruct_u

    recon = reconstruct_u(traj, f_om)

    ckpt_files = []
    if cfg.write_checkpoints:
        for i, (t, w) in enumerate(zip(traj.times, traj.w_states)):
            name = f"checkpoint_{i:04d}.nsrw"
            save_checkpoint(w, float(t), sconf.cutoff, outdir / name)
            ckpt_files.append({"file": name, "time": float(t)})

    summary = {
        "steps": int(log.times.size - 1),
        "snapshots": int(traj.times.size),
        "terminal_time": float(traj.times[-1]),
        "terminal_w_l2": float(w_l2[-1]),
        "w_sup_l2": float(np.sqrt(log.kinetic.max())),
        "w_sup_ratio": float(np.sqrt(log.kinetic.max()) / f_l2) if f_l2 > 0 else 0.0,
        "data_l2": f_l2,
        "energy_sup": log.energy_sup(),
        "energy_violation_max": log.max_violation(),
        "divergence_max": float(div_rel.max()),
        "dwdt_time_norm": dwdt.time_norm,
        "nse_residual_max": float(recon.residuals.max()),
        "nse_residual_median": float(np.median(recon.residuals)),
        "checkpoints": ckpt_files,
    }
    failures = []
    if summary["energy_violation_max"] > ENERGY_TOL:
        failures.append(
            f"energy inequality violated by {summary['energy_violation_max']} (> {ENERGY_TOL})"
        )
    if summary["divergence_max"] > DIVERGENCE_TOL:
        failures.append(
            f"relative divergence {summary['divergence_max']} exceeds {DIVERGENCE_TOL}"
        )
    if cfg.data == "taylor_green" and summary["w_sup_ratio"] > TAYLOR_GREEN_TOL:
        failures.append(
            f"taylor-green fluctuation ratio {summary['w_sup_ratio']} exceeds "
            f"{TAYLOR_GREEN_TOL}"
        )

    idx = snap_idx  # energy-log entries aligned with snapshot times
    series = (
        [
            "time",
            "w_l2",
            "kinetic",
            "dissipation_cum",
            "energy_total",
            "pairing_abs_cum",
            "div_rel",
            "dwdt_hminus1",
        ],
        [
            traj.times,
            w_l2,
            log.kinetic[idx],
            log.dissipation_cum[idx],
            log.kinetic[idx] + log.dissipation_cum[idx],
            log.pairing_abs_cum[idx],
            div_rel,
            dwdt.values,
        ],
    )
    plotdata = {
        "nse_residual": (
            ["time", "residual_hminus1"],
            [recon.residual_times, recon.residuals],
        )
    }
    return summary, failures, series, plotdata


def _run_report(cfg: ExperimentConfig, workers: int):
    grid, f = build_data_field(cfg)
    part = ring_partition(grid)
    model = cfg.random_model()
    M = cfg.monte_carlo_M

    def one(i: int) -> float:
        f_om = randomize(f, sample_coefficients(model, part.max_ring, i), part)
        return condtg_check(f_om, cfg.s, cfg.gamma, cfg.T).lam

    lams = np.array(_ordered_map(one, M, workers))
    qlevels = [0.5, 0.75, 0.9, 0.95, 0.99, 0.995]
    quantiles = {f"q{int(q * 1000):03d}": float(np.quantile(lams, q)) for q in qlevels}
    summary = {
        "M": M,
        "lambda_mean": float(lams.mean()),
        "lambda_quantiles": quantiles,
    }
    if M >= 200:
        fit = fit_gaussian_tail(lams, hminus_s_norm(f, cfg.s))
        summary["tail_C1"] = fit.C1
        summary["tail_C2"] = fit.C2
        summary["tail_r_squared"] = fit.r_squared
    series = (["sample", "lambda"], [np.arange(M), lams])
    return summary, [], series, {}


def run_experiment(cfg: ExperimentConfig, resume: str | None = None) -> ExperimentResult:
    """Execute the configured experiment; exit status 0 iff all enabled
    assertions pass. Artifacts land in cfg.output_dir only."""
    if cfg.experiment not in ("randomize", "heatflow", "tails", "solve", "report"):
        raise ValueError(f"no experiment selected (got {cfg.experiment!r})")
    workers = resolve_workers(cfg)
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    started = time.time()

    if cfg.experiment == "randomize":
        summary, failures, series, plotdata = _run_randomize(cfg, workers)
    elif cfg.experiment == "heatflow":
        summary, failures, series, plotdata = _run_heatflow(cfg, workers)
    elif cfg.experiment == "tails":
        summary, failures, series, plotdata = _run_tails(cfg, workers)
    elif cfg.experiment == "solve":
        summary, failures, series, plotdata = _run_solve(cfg, workers, outdir, resume)
    else:
        summary, failures, series, plotdata = _run_report(cfg, workers)

    # workers and output_dir are execution environment, not experiment
    # identity: they live in meta.json so summaries stay byte-reproducible
    config_echo = cfg.to_dict()
    del config_echo["workers"]
    del config_echo["output_dir"]
    summary = {
        "experiment": cfg.experiment,
        "config": config_echo,
        "failures": failures,
        **summary,
    }
    summary = _jsonable(summary)
    (outdir / "summary.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n"
    )
    _write_table(outdir / "series.csv", series[0], series[1])
    if plotdata:
        pdir = outdir / "plotdata"
        pdir.mkdir(exist_ok=True)
        for name, (hdr, cols) in sorted(plotdata.items()):
            _write_table(pdir / f"{name}.tsv", hdr, cols, sep="\t")
    meta = {
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "elapsed_seconds": time.time() - started,
        "workers": workers,
        "output_dir": str(outdir),
    }
    (outdir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return ExperimentResult(
        status=0 if not failures else 1, summary=summary, output_dir=outdir
    )
