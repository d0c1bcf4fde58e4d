"""Experiment runner: simulate, extrapolate, sweep, bound report.

Each command writes deterministic artifacts into an output directory:
trajectory.csv and provenance.json from simulation; prediction.csv,
error.csv, model.json, envelope.json from extrapolation; sweep.csv and
sweep.json from window sweeps; bound.csv and bound_report.json from the
analytic-bound evaluation. Identical config and seed give byte-identical
files (no timestamps, shortest round-trip float formatting).
"""

from __future__ import annotations

import fnmatch
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

import qdmd
from qdmd.analysis import (
    BoundInputs,
    condition_number,
    empirical_error_curve,
    error_vs_m_sweep,
    global_bound_curve,
    koopman_residual_surrogate,
    t32_envelope_check,
)
from qdmd.config import ConfigError, ExperimentConfig
from qdmd.dmd import RankPolicy
from qdmd.engine import (
    StateVector,
    TrotterPlan,
    prepare_domain_wall,
    prepare_hubbard_ground_state,
)
from qdmd.ihodmd import (
    IHODMDModel,
    build_delay_matrices,
    fit_ihodmd,
    ihodmd_model_to_json,
    predict_ihodmd,
)
from qdmd.lattice import (
    HubbardParams,
    QubitHamiltonian,
    XXZParams,
    build_hubbard_h1,
    build_xxz,
    frobenius_norm,
    hamiltonian_to_json,
)
from qdmd.observables import (
    ObservableSet,
    SnapshotSeries,
    concat_observables,
    density_matrix_observables,
    momentum_rows,
    observable_set_frobenius,
    read_series_csv,
    record_trajectory,
    shot_noise_inject,
    standardize,
    total_number_observable,
    total_z_observable,
    write_series_csv,
    zz_pair_observables,
)


@dataclass
class SystemSetup:
    initial: StateVector
    plan: TrotterPlan
    observables: ObservableSet
    hamiltonian: QubitHamiltonian
    initial_state_info: dict


def build_system(cfg: ExperimentConfig) -> SystemSetup:
    """Initial state, evolution plan, and measured observable set."""
    m = cfg.model
    if m.kind == "hubbard":
        params = HubbardParams(m.sites, m.tau0, m.tau1, m.u, m.mu)
        ground = prepare_hubbard_ground_state(params)
        ham = build_hubbard_h1(params)
        obs = concat_observables(
            density_matrix_observables(m.sites), total_number_observable(m.sites)
        )
        info = {
            "kind": "hubbard_ground_state",
            "energy": ground.energy,
            "gap": ground.gap,
            "degenerate": ground.degenerate,
            "sector_dimension": ground.sector_dimension,
        }
        initial = ground.state
    else:
        initial = prepare_domain_wall(m.sites)
        ham = build_xxz(XXZParams(m.sites, m.u, m.h))
        obs = concat_observables(
            zz_pair_observables(m.sites), total_z_observable(m.sites)
        )
        info = {"kind": "domain_wall"}
    plan = TrotterPlan(ham, cfg.evolution.dt)
    return SystemSetup(initial, plan, obs, ham, info)


def simulate_series(cfg: ExperimentConfig) -> tuple[SnapshotSeries, SystemSetup]:
    """Trajectory of the measured rows plus derived momentum rows."""
    setup = build_system(cfg)
    series = record_trajectory(
        setup.initial, setup.plan, cfg.evolution.steps, setup.observables
    )
    if cfg.observables.shots > 0:
        series = shot_noise_inject(
            series, cfg.observables.shots, cfg.observables.seed
        )
    if cfg.observables.momentum_indices:
        nk_labels, nk_values = momentum_rows(
            series.labels, series.values, cfg.model.sites,
            cfg.observables.momentum_indices,
        )
        series = SnapshotSeries(
            series.labels + nk_labels,
            series.times,
            np.vstack([series.values, nk_values]),
        )
    return series, setup


def select_rows(series: SnapshotSeries, patterns) -> SnapshotSeries:
    """Sub-series of rows matching any glob pattern, original order kept."""
    keep = [
        i
        for i, lab in enumerate(series.labels)
        if any(fnmatch.fnmatchcase(lab, pat) for pat in patterns)
    ]
    if not keep:
        raise ConfigError(f"no rows match the fit patterns {list(patterns)}")
    labels = tuple(series.labels[i] for i in keep)
    return SnapshotSeries(labels, series.times.copy(), series.values[keep])


def _rank_policy(cfg: ExperimentConfig) -> RankPolicy:
    if cfg.fit.rank_policy == "fixed":
        return RankPolicy(kind="fixed", rank=cfg.fit.rank)
    return RankPolicy(kind="threshold", threshold=cfg.fit.threshold)


def _density_labels(sites: int) -> list[str]:
    labels = [f"rho_{p}_{p}" for p in range(sites)]
    pairs = [(p, q) for p in range(sites) for q in range(p + 1, sites)]
    labels += [f"rho_{p}_{q}.re" for p, q in pairs]
    labels += [f"rho_{p}_{q}.im" for p, q in pairs]
    return labels


def fit_and_extrapolate(
    cfg: ExperimentConfig, truth: SnapshotSeries, fit_window: int | None = None
) -> tuple[SnapshotSeries, IHODMDModel, SnapshotSeries]:
    """Fit the configured rows and predict them over the full truth grid.

    Returns (prediction including derived momentum rows, fitted model,
    the fitted sub-series).
    """
    window = cfg.fit.window if fit_window is None else fit_window
    fit_sub = select_rows(truth, cfg.fit.rows)
    if cfg.observables.momentum_indices:
        missing = [
            lab for lab in _density_labels(cfg.model.sites)
            if lab not in fit_sub.labels
        ]
        if missing:
            raise ConfigError(
                "momentum rows are derived from the density-matrix rows; "
                f"fit.rows leaves out {missing[:3]}..."
            )
        if any(lab.startswith("n_k_") for lab in fit_sub.labels):
            raise ConfigError(
                "momentum rows are derived, not fitted; exclude n_k_* from fit.rows"
            )
    model = fit_ihodmd(
        fit_sub,
        window,
        cfg.fit.embedding,
        policy=_rank_policy(cfg),
        mode=cfg.fit.mode,
        amplitudes=cfg.fit.amplitudes,
        stabilize=cfg.fit.stabilize,
    )
    values = predict_ihodmd(model, truth.times, readout=cfg.fit.readout)
    predicted = SnapshotSeries(fit_sub.labels, truth.times.copy(), values)
    if cfg.observables.momentum_indices:
        nk_labels, nk_values = momentum_rows(
            predicted.labels, predicted.values, cfg.model.sites,
            cfg.observables.momentum_indices,
        )
        predicted = SnapshotSeries(
            predicted.labels + nk_labels,
            predicted.times,
            np.vstack([predicted.values, nk_values]),
        )
    return predicted, model, fit_sub


def _report_rows(cfg: ExperimentConfig, fitted_labels) -> list[str]:
    if cfg.report.rows:
        return list(cfg.report.rows)
    return list(fitted_labels)


def _t_min(cfg: ExperimentConfig, times: np.ndarray, window: int) -> float:
    if cfg.report.t_min > 0:
        return cfg.report.t_min
    return float(times[window - 1])


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_provenance(
    out: Path, cfg: ExperimentConfig, setup: SystemSetup, series: SnapshotSeries
) -> None:
    payload = {
        "package_version": qdmd.__version__,
        "config": cfg.raw,
        "n_qubits": setup.hamiltonian.n_qubits,
        "hamiltonian": json.loads(hamiltonian_to_json(setup.hamiltonian)),
        "hamiltonian_frobenius": frobenius_norm(setup.hamiltonian),
        "initial_state": setup.initial_state_info,
        "labels": list(series.labels),
        "snapshots": int(series.times.size),
    }
    _write_json(out / "provenance.json", payload)


def _ensure_truth(
    cfg: ExperimentConfig, out: Path, trajectory_path
) -> SnapshotSeries:
    """Load the truth series from a file, or simulate and persist it."""
    if trajectory_path is not None:
        return read_series_csv(trajectory_path)
    series, setup = simulate_series(cfg)
    write_series_csv(out / "trajectory.csv", series)
    write_provenance(out, cfg, setup, series)
    return series


def run_simulate(cfg: ExperimentConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    series, setup = simulate_series(cfg)
    write_series_csv(out / "trajectory.csv", series)
    write_provenance(out, cfg, setup, series)
    return {
        "trajectory": str(out / "trajectory.csv"),
        "snapshots": int(series.times.size),
        "rows": len(series.labels),
    }


def run_extrapolate(cfg: ExperimentConfig, out_dir, trajectory_path=None) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    truth = _ensure_truth(cfg, out, trajectory_path)
    predicted, model, fit_sub = fit_and_extrapolate(cfg, truth)
    write_series_csv(out / "prediction.csv", predicted)
    (out / "model.json").write_text(ihodmd_model_to_json(model) + "\n")

    rows = _report_rows(cfg, fit_sub.labels)
    t_min = _t_min(cfg, truth.times, cfg.fit.window)
    aggregate = empirical_error_curve(truth, predicted, rows)
    with open(out / "error.csv", "w", newline="") as fh:
        fh.write("t,error\n")
        for t, e in zip(aggregate.times, aggregate.errors):
            fh.write(f"{float(t)!r},{float(e)!r}\n")

    verdicts = []
    for lab in rows:
        curve = empirical_error_curve(truth, predicted, lab)
        env = t32_envelope_check(curve, t_min)
        verdicts.append(
            {
                "row": lab,
                "c": env.c,
                "tail_slope": env.slope,
                "passed": env.passed,
                "t_min": env.t_min,
                "final_error": float(curve.errors[-1]),
            }
        )
    env_all = t32_envelope_check(aggregate, t_min)
    summary = {
        "rows": rows,
        "fit_window": cfg.fit.window,
        "t_min": t_min,
        "final_error": float(aggregate.errors[-1]),
        "aggregate": {
            "c": env_all.c,
            "tail_slope": env_all.slope,
            "passed": env_all.passed,
        },
        "per_row": verdicts,
    }
    _write_json(out / "envelope.json", summary)
    return summary


def run_sweep(cfg: ExperimentConfig, out_dir, trajectory_path=None) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not cfg.sweep.m_values:
        raise ConfigError("sweep requires [sweep] m_values")
    truth = _ensure_truth(cfg, out, trajectory_path)
    rows = list(cfg.sweep.rows) if cfg.sweep.rows else _report_rows(cfg, ())
    if not rows:
        raise ConfigError("sweep requires report or sweep rows")

    def fit_and_predict(m: int) -> SnapshotSeries:
        predicted, _, _ = fit_and_extrapolate(cfg, truth, fit_window=m)
        return predicted

    result = error_vs_m_sweep(
        truth, cfg.sweep.m_values, cfg.fit.embedding, fit_and_predict, rows
    )
    with open(out / "sweep.csv", "w", newline="") as fh:
        fh.write("m,error_at_T\n")
        for m, e in zip(result.m_values, result.errors):
            fh.write(f"{int(m)},{float(e)!r}\n")
    payload = {
        "rows": rows,
        "m_values": result.m_values,
        "errors": result.errors,
        "skipped": [{"m": m, "reason": why} for m, why in result.skipped],
        "final_time": float(truth.times[-1]),
    }
    _write_json(out / "sweep.json", payload)
    return payload


def _bound_inputs_for_model(
    model: IHODMDModel, fit_sub: SnapshotSeries
) -> tuple[float, float]:
    """(phi_cond, c_m) measured on the fitted model(s)."""
    window = model.fit_window
    standardized, _, _, _ = standardize(fit_sub.values, window)
    conds = []
    surrogates = []
    if model.mode == "per_row":
        for i in model.kept_rows:
            sub = model.row_models[i]
            x1, x2 = build_delay_matrices(standardized[i], model.params, window)
            conds.append(condition_number(sub.modes))
            surrogates.append(koopman_residual_surrogate(x1, x2, sub))
    else:
        blocks = [
            build_delay_matrices(standardized[i], model.params, window)
            for i in model.kept_rows
        ]
        x1 = np.vstack([b[0] for b in blocks])
        x2 = np.vstack([b[1] for b in blocks])
        conds.append(condition_number(model.joint_model.modes))
        surrogates.append(koopman_residual_surrogate(x1, x2, model.joint_model))
    return float(max(conds)), float(max(surrogates))


def run_bound_report(cfg: ExperimentConfig, out_dir, trajectory_path=None) -> dict:
    """Evaluate the analytic global bound against the measured error.

    The comparison runs in the physical observable space of the fitted
    rows: the empirical error at step n is the l2 norm across those rows,
    and the bound uses the measured Hamiltonian and observable Frobenius
    norms, the worst mode-matrix condition number, the measured one-step
    residual surrogate for c_m, and the worst in-window residual as
    Delta_m.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    truth = _ensure_truth(cfg, out, trajectory_path)
    setup = build_system(cfg)
    predicted, model, fit_sub = fit_and_extrapolate(cfg, truth)

    fitted_obs = ObservableSet(
        setup.observables.n_qubits,
        fit_sub.labels,
        tuple(
            setup.observables.rows[setup.observables.labels.index(lab)]
            for lab in fit_sub.labels
        ),
    )
    o_frob = observable_set_frobenius(fitted_obs)
    h_frob = frobenius_norm(setup.hamiltonian)
    phi_cond, c_m = _bound_inputs_for_model(model, fit_sub)

    pred_fitted = np.stack([predicted.row(lab) for lab in fit_sub.labels])
    residual = np.linalg.norm(pred_fitted - fit_sub.values, axis=0)
    window = cfg.fit.window
    delta_m = float(np.max(residual[:window]))

    dt = truth.dt
    post_cols = np.arange(window, truth.times.size)
    base = BoundInputs(
        h_frobenius=h_frob,
        o_frobenius=o_frob,
        c_m=c_m,
        delta_m=delta_m,
        phi_cond=phi_cond,
        dt=dt,
        n=window,
        m=window,
    )
    bound = global_bound_curve(base, post_cols + 1)
    empirical = residual[post_cols]
    dominated = bool(np.all(bound >= empirical))
    margin = float(np.min(bound / np.maximum(empirical, 1e-300)))

    with open(out / "bound.csv", "w", newline="") as fh:
        fh.write("t,empirical,bound\n")
        for c, b, e in zip(post_cols, bound, empirical):
            fh.write(f"{float(truth.times[c])!r},{float(e)!r},{float(b)!r}\n")
    payload = {
        "inputs": {
            "h_frobenius": h_frob,
            "o_frobenius": o_frob,
            "c_m": c_m,
            "delta_m": delta_m,
            "phi_cond": phi_cond,
            "dt": dt,
            "m": window,
            "n_max": int(truth.times.size),
        },
        "dominates_empirical": dominated,
        "min_bound_over_error": margin,
        "post_window_steps": int(post_cols.size),
        "note": (
            "the bound certifies an envelope, not tightness; with Frobenius "
            "norms of this size it sits far above the measured error"
        ),
    }
    _write_json(out / "bound_report.json", payload)
    return payload
