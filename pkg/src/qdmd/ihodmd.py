"""Higher-order DMD with per-row time-delay embedding.

Scalar observable rows carry too little spatial information for a plain
DMD fit, so each row is lifted into a delay-embedded matrix: column l of
the lifted X1 stacks n_s consecutive samples starting at index l * n_g,
and X2 is the same construction shifted by tau samples. The embedded
propagator advances time by tau * dt.

Two fit modes are provided. "per_row" fits one DMD model per observable
row on its own delay matrices. "joint" stacks the delay blocks of every
kept row into a single tall matrix and fits one shared model, which lets
the fit use cross-row structure; the readout for row j is the first
component of its block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from qdmd.dmd import (
    DMDModel,
    RankPolicy,
    fit_dmd,
    model_from_dict,
    model_to_dict,
    predict_dmd,
)
from qdmd.observables import SnapshotSeries, standardize


@dataclass(frozen=True)
class EmbeddingParams:
    """Delay order n_s, column stride n_g, and shift tau (all >= 1)."""

    n_s: int
    n_g: int
    tau: int

    def __post_init__(self):
        for name in ("n_s", "n_g", "tau"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def embedded_column_count(fit_window: int, params: EmbeddingParams) -> int:
    """n_l = floor((m - n_s - tau)/n_g) + 1 lifted columns for m snapshots."""
    return (fit_window - params.n_s - params.tau) // params.n_g + 1


def minimal_fit_window(params: EmbeddingParams) -> int:
    return params.n_s + params.tau


def build_delay_matrices(row: np.ndarray, params: EmbeddingParams, fit_window: int):
    """Lifted snapshot pair for one scalar row.

    X1[i, l] = row[l n_g + i], X2[i, l] = row[l n_g + i + tau] for
    i < n_s and l < n_l.
    """
    row = np.asarray(row)
    if row.ndim != 1:
        raise ValueError("delay embedding acts on a single scalar row")
    if fit_window > row.size:
        raise ValueError("fit window exceeds the stored snapshots")
    need = minimal_fit_window(params)
    if fit_window < need:
        raise ValueError(
            f"fit window {fit_window} too small for this embedding; "
            f"need at least n_s + tau = {need} snapshots"
        )
    n_l = embedded_column_count(fit_window, params)
    starts = np.arange(n_l) * params.n_g
    grid = starts[None, :] + np.arange(params.n_s)[:, None]
    return row[grid], row[grid + params.tau]


@dataclass
class IHODMDModel:
    """Delay-embedded DMD over a labeled row set, with standardization."""

    mode: str
    params: EmbeddingParams
    base_dt: float
    fit_window: int
    labels: tuple[str, ...]
    means: np.ndarray
    stds: np.ndarray
    skipped: np.ndarray
    row_models: list[DMDModel | None] = field(default_factory=list)
    joint_model: DMDModel | None = None
    kept_rows: list[int] = field(default_factory=list)

    @property
    def embedded_dt(self) -> float:
        return self.params.tau * self.base_dt


def fit_ihodmd(
    series: SnapshotSeries,
    fit_window: int,
    params: EmbeddingParams,
    policy: RankPolicy = RankPolicy(),
    mode: str = "per_row",
    amplitudes: str = "pinv",
    stabilize: str = "none",
) -> IHODMDModel:
    """Fit delay-embedded DMD on the first fit_window snapshots.

    Rows whose fit-window std falls below the floor are skipped and later
    predicted as their constant mean. The embedded time step is
    tau * dt, because the lifted propagator advances tau grid samples.
    """
    if mode not in ("per_row", "joint"):
        raise ValueError(f"unknown fit mode {mode!r}")
    if fit_window > series.times.size:
        raise ValueError("fit window exceeds the stored snapshots")
    dt = series.dt
    standardized, means, stds, skipped = standardize(series.values, fit_window)
    kept = [i for i in range(len(series.labels)) if not skipped[i]]
    model = IHODMDModel(
        mode=mode,
        params=params,
        base_dt=dt,
        fit_window=fit_window,
        labels=series.labels,
        means=means,
        stds=stds,
        skipped=skipped,
        row_models=[None] * len(series.labels),
        kept_rows=kept,
    )
    dt_emb = params.tau * dt
    if mode == "per_row":
        for i in kept:
            x1, x2 = build_delay_matrices(standardized[i], params, fit_window)
            model.row_models[i] = fit_dmd(
                x1, x2, dt_emb, policy, amplitudes=amplitudes, stabilize=stabilize
            )
    else:
        blocks1 = []
        blocks2 = []
        for i in kept:
            x1, x2 = build_delay_matrices(standardized[i], params, fit_window)
            blocks1.append(x1)
            blocks2.append(x2)
        if not blocks1:
            raise ValueError("every row was constant; nothing to fit")
        model.joint_model = fit_dmd(
            np.vstack(blocks1),
            np.vstack(blocks2),
            dt_emb,
            policy,
            amplitudes=amplitudes,
            stabilize=stabilize,
        )
    return model


def _readout(embedded_predict, n_s: int, offset: int, times, base_dt, readout):
    """Extract the scalar row from an embedded prediction.

    Component offset+i of the lifted state at time t estimates the row at
    t + i * base_dt, so the plain readout is component `offset` at t; the
    averaging readout evaluates component offset+i at t - i * base_dt and
    averages the n_s estimates.
    """
    if readout == "first":
        return embedded_predict(times)[offset].real
    acc = np.zeros(np.atleast_1d(times).shape, dtype=np.float64)
    for i in range(n_s):
        acc += embedded_predict(times - i * base_dt)[offset + i].real
    return acc / n_s


def predict_ihodmd(
    model: IHODMDModel, times, readout: str = "first"
) -> np.ndarray:
    """Destandardized row predictions at the requested times."""
    if readout not in ("first", "average"):
        raise ValueError(f"unknown readout {readout!r}")
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    out = np.empty((len(model.labels), times.size), dtype=np.float64)
    n_s = model.params.n_s
    if model.mode == "per_row":
        for i in range(len(model.labels)):
            if model.skipped[i]:
                out[i] = model.means[i]
                continue
            sub = model.row_models[i]
            std_row = _readout(
                lambda t, m=sub: predict_dmd(m, t), n_s, 0, times, model.base_dt, readout
            )
            out[i] = std_row * model.stds[i] + model.means[i]
    else:
        joint = model.joint_model
        cache: dict[float, np.ndarray] = {}

        def joint_predict(t):
            key = float(np.atleast_1d(t)[0])
            hit = cache.get(key)
            if hit is None:
                hit = predict_dmd(joint, t)
                cache[key] = hit
            return hit

        for i in range(len(model.labels)):
            out[i] = model.means[i]
        for block, i in enumerate(model.kept_rows):
            std_row = _readout(
                joint_predict, n_s, block * n_s, times, model.base_dt, readout
            )
            out[i] = std_row * model.stds[i] + model.means[i]
    return out


def extrapolate_series(
    series: SnapshotSeries, model: IHODMDModel, readout: str = "first"
) -> SnapshotSeries:
    """Prediction over the full grid of an existing series."""
    values = predict_ihodmd(model, series.times, readout=readout)
    return SnapshotSeries(model.labels, series.times.copy(), values)


def ihodmd_model_to_dict(model: IHODMDModel) -> dict:
    return {
        "kind": "ihodmd",
        "mode": model.mode,
        "base_dt": model.base_dt,
        "fit_window": model.fit_window,
        "n_s": model.params.n_s,
        "n_g": model.params.n_g,
        "tau": model.params.tau,
        "labels": list(model.labels),
        "means": [float(v) for v in model.means],
        "stds": [float(v) for v in model.stds],
        "skipped_rows": [model.labels[i] for i in np.nonzero(model.skipped)[0]],
        "kept_rows": list(map(int, model.kept_rows)),
        "row_models": [
            None if m is None else model_to_dict(m) for m in model.row_models
        ],
        "joint_model": None
        if model.joint_model is None
        else model_to_dict(model.joint_model),
    }


def ihodmd_model_from_dict(payload: dict) -> IHODMDModel:
    if payload.get("kind") != "ihodmd":
        raise ValueError("not a delay-embedded model payload")
    labels = tuple(payload["labels"])
    skipped_set = set(payload["skipped_rows"])
    return IHODMDModel(
        mode=payload["mode"],
        params=EmbeddingParams(payload["n_s"], payload["n_g"], payload["tau"]),
        base_dt=float(payload["base_dt"]),
        fit_window=int(payload["fit_window"]),
        labels=labels,
        means=np.array(payload["means"], dtype=np.float64),
        stds=np.array(payload["stds"], dtype=np.float64),
        skipped=np.array([lab in skipped_set for lab in labels]),
        row_models=[
            None if m is None else model_from_dict(m) for m in payload["row_models"]
        ],
        joint_model=None
        if payload["joint_model"] is None
        else model_from_dict(payload["joint_model"]),
        kept_rows=list(payload["kept_rows"]),
    )


def ihodmd_model_to_json(model: IHODMDModel) -> str:
    return json.dumps(ihodmd_model_to_dict(model), indent=2, sort_keys=True)


def ihodmd_model_from_json(text: str) -> IHODMDModel:
    return ihodmd_model_from_dict(json.loads(text))
