"""Delay-embedded DMD: index layout, spectra, readout, serialization.

A sampled sinusoid is the main oracle. After mean removal it spans a
three-dimensional linear system (the conjugate pair plus the constant),
so a three-delay embedding must recover the spectrum {1, e^{+-i w tau dt}}
to machine precision and extrapolate the tail of the grid exactly.
"""

import numpy as np
import pytest

from qdmd.dmd import RankPolicy, build_data_matrices, fit_dmd
from qdmd.ihodmd import (
    EmbeddingParams,
    build_delay_matrices,
    embedded_column_count,
    extrapolate_series,
    fit_ihodmd,
    ihodmd_model_from_json,
    ihodmd_model_to_json,
    minimal_fit_window,
    predict_ihodmd,
)
from qdmd.observables import SnapshotSeries, standardize


def sinusoid_series(omega=1.3, dt=0.05, n=200):
    times = np.arange(n) * dt
    row = np.sin(omega * times)
    return SnapshotSeries(("s",), times, row[None, :])


def test_embedded_column_count_frozen_examples():
    assert embedded_column_count(400, EmbeddingParams(10, 4, 4)) == 97
    assert embedded_column_count(200, EmbeddingParams(20, 2, 2)) == 90
    assert minimal_fit_window(EmbeddingParams(3, 2, 1)) == 4


def test_delay_matrices_index_layout():
    x1, x2 = build_delay_matrices(np.arange(10.0), EmbeddingParams(3, 2, 1), 10)
    assert np.array_equal(
        x1, [[0.0, 2.0, 4.0, 6.0], [1.0, 3.0, 5.0, 7.0], [2.0, 4.0, 6.0, 8.0]]
    )
    assert np.array_equal(x2, x1 + 1.0)


def test_delay_matrices_validation():
    params = EmbeddingParams(5, 2, 3)
    with pytest.raises(ValueError, match="need at least n_s \\+ tau = 8"):
        build_delay_matrices(np.arange(20.0), params, 6)
    with pytest.raises(ValueError, match="exceeds the stored snapshots"):
        build_delay_matrices(np.arange(20.0), params, 25)
    with pytest.raises(ValueError):
        build_delay_matrices(np.zeros((2, 10)), params, 10)
    with pytest.raises(ValueError):
        EmbeddingParams(0, 1, 1)


def test_single_delay_reduces_to_plain_dmd():
    rng = np.random.default_rng(23)
    times = np.arange(60) * 0.1
    row = np.cos(0.9 * times) * np.exp(-0.05 * times) + 0.2 * rng.normal()
    series = SnapshotSeries(("r",), times, row[None, :])
    model = fit_ihodmd(series, 40, EmbeddingParams(1, 1, 1))

    standardized, _, _, _ = standardize(series.values, 40)
    x1, x2 = build_data_matrices(standardized, 40)
    plain = fit_dmd(x1, x2, 0.1)
    assert np.max(
        np.abs(model.row_models[0].eigenvalues - plain.eigenvalues)
    ) <= 1e-12


def test_sinusoid_spectrum_recovered_exactly():
    omega, dt = 1.3, 0.05
    series = sinusoid_series(omega, dt)
    model = fit_ihodmd(series, 120, EmbeddingParams(3, 1, 3))
    assert model.embedded_dt == pytest.approx(3 * dt)
    eigs = np.array(sorted(model.row_models[0].eigenvalues, key=lambda z: z.imag))
    want = np.array(
        sorted(
            [np.exp(-3j * omega * dt), 1.0 + 0.0j, np.exp(3j * omega * dt)],
            key=lambda z: z.imag,
        )
    )
    assert np.max(np.abs(eigs - want)) <= 1e-8


def test_sinusoid_extrapolates_past_the_window():
    series = sinusoid_series()
    model = fit_ihodmd(series, 120, EmbeddingParams(3, 1, 3))
    predicted = predict_ihodmd(model, series.times)
    assert np.max(np.abs(predicted - series.values)) <= 1e-8
    tail = extrapolate_series(series, model)
    assert tail.labels == series.labels
    assert np.array_equal(tail.times, series.times)
    assert np.max(np.abs(tail.values - series.values)) <= 1e-8


def test_average_readout_agrees_on_exact_models():
    series = sinusoid_series()
    model = fit_ihodmd(series, 120, EmbeddingParams(3, 1, 3))
    first = predict_ihodmd(model, series.times, readout="first")
    average = predict_ihodmd(model, series.times, readout="average")
    assert np.max(np.abs(first - average)) <= 1e-8
    with pytest.raises(ValueError):
        predict_ihodmd(model, series.times, readout="median")


def test_constant_rows_are_skipped_and_held():
    times = np.arange(160) * 0.05
    rows = np.vstack(
        [np.sin(1.3 * times), np.cos(0.7 * times), np.full(160, 0.7)]
    )
    series = SnapshotSeries(("a", "b", "c"), times, rows)
    model = fit_ihodmd(series, 100, EmbeddingParams(3, 1, 2))
    assert model.skipped.tolist() == [False, False, True]
    assert model.kept_rows == [0, 1]
    assert model.row_models[2] is None
    predicted = predict_ihodmd(model, times)
    assert np.all(predicted[2] == model.means[2])
    assert predicted[2, 0] == pytest.approx(0.7, abs=1e-12)
    assert np.max(np.abs(predicted[:2] - rows[:2])) <= 1e-8


def test_all_constant_rows_cannot_be_fitted():
    times = np.arange(40) * 0.05
    series = SnapshotSeries(("c",), times, np.full((1, 40), 1.5))
    with pytest.raises(ValueError, match="constant"):
        fit_ihodmd(series, 30, EmbeddingParams(2, 1, 1), mode="joint")


def test_joint_mode_fits_one_model_over_stacked_blocks():
    times = np.arange(160) * 0.05
    rows = np.vstack([np.sin(1.3 * times), np.cos(0.7 * times)])
    series = SnapshotSeries(("a", "b"), times, rows)
    model = fit_ihodmd(series, 100, EmbeddingParams(3, 1, 2), mode="joint")
    assert model.mode == "joint"
    assert model.joint_model is not None
    assert all(rm is None for rm in model.row_models)
    predicted = predict_ihodmd(model, times)
    assert np.max(np.abs(predicted - rows)) <= 1e-8


def test_fit_window_validation():
    series = sinusoid_series(n=50)
    with pytest.raises(ValueError, match="exceeds the stored snapshots"):
        fit_ihodmd(series, 60, EmbeddingParams(2, 1, 1))
    with pytest.raises(ValueError, match="unknown fit mode"):
        fit_ihodmd(series, 30, EmbeddingParams(2, 1, 1), mode="stacked")


def test_model_serialization_round_trip():
    times = np.arange(160) * 0.05
    rows = np.vstack([np.sin(1.3 * times), np.full(160, 0.25)])
    series = SnapshotSeries(("a", "b"), times, rows)
    for mode in ("per_row", "joint"):
        model = fit_ihodmd(series, 100, EmbeddingParams(3, 1, 2), mode=mode)
        back = ihodmd_model_from_json(ihodmd_model_to_json(model))
        assert back.mode == model.mode
        assert back.params == model.params
        assert back.fit_window == model.fit_window
        assert back.labels == model.labels
        assert back.kept_rows == model.kept_rows
        assert np.array_equal(back.means, model.means)
        assert np.array_equal(back.stds, model.stds)
        assert np.array_equal(
            predict_ihodmd(back, times), predict_ihodmd(model, times)
        )


def test_fixed_rank_policy_reaches_row_models():
    series = sinusoid_series()
    model = fit_ihodmd(
        series, 120, EmbeddingParams(4, 1, 2), policy=RankPolicy("fixed", 1e-10, 3)
    )
    assert model.row_models[0].rank == 3
    predicted = predict_ihodmd(model, series.times)
    assert np.max(np.abs(predicted - series.values)) <= 1e-6
