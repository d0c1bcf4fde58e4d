"""End-to-end acceptance checks for the shipped experiment pipeline.

One test per headline requirement: product-formula convergence order,
exact recovery of a known linear system, extrapolation quality on the
four shipped experiments, the shape of the error-versus-window sweep,
the spatial-resolution comparison, the invariant suite, and dominance
of the analytic error bound over the measured error.  The session
fixtures in conftest.py run every statevector simulation exactly once.
"""

import time

import numpy as np
import pytest

from qdmd import verify
from qdmd.dmd import build_data_matrices, fit_dmd, predict_dmd
from qdmd.engine import (
    TrotterPlan,
    exact_evolve,
    prepare_hubbard_ground_state,
    trotter_step,
)
from qdmd.lattice import HubbardParams, build_hubbard_h1


def test_criterion_1_trotter_first_order_convergence():
    started = time.perf_counter()
    params = HubbardParams(2, 1.0, 0.1, 4.0, 2.0)
    ham = build_hubbard_h1(params)
    start = prepare_hubbard_ground_state(params).state
    exact = exact_evolve(start, ham, 1.0)
    errors = {}
    for dt in (0.01, 0.005):
        state = start
        plan = TrotterPlan(ham, dt=dt)
        for _ in range(round(1.0 / dt)):
            state = trotter_step(state, plan)
        errors[dt] = float(np.linalg.norm(state.amplitudes - exact.amplitudes))
    elapsed = time.perf_counter() - started
    ratio = errors[0.01] / errors[0.005]
    assert 1.6 <= ratio <= 2.4
    assert elapsed < 1.0


def test_criterion_2_dmd_exactness_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(11)
    basis, _ = np.linalg.qr(rng.normal(size=(8, 4)))
    blocks = np.zeros((4, 4))
    for offset, angle in ((0, 0.3), (2, 0.7)):
        c, s = np.cos(angle), np.sin(angle)
        blocks[offset : offset + 2, offset : offset + 2] = [[c, -s], [s, c]]
    propagator = basis @ blocks @ basis.T

    snapshots = np.empty((8, 50))
    snapshots[:, 0] = basis @ np.ones(4)
    for n in range(1, 50):
        snapshots[:, n] = propagator @ snapshots[:, n - 1]

    dt = 0.1
    x1, x2 = build_data_matrices(snapshots, 50)
    model = fit_dmd(x1, x2, dt)
    assert model.rank == 4

    got = model.eigenvalues[np.argsort(np.angle(model.eigenvalues))]
    want = np.exp(1j * np.array([-0.7, -0.3, 0.3, 0.7]))
    assert np.max(np.abs(got - want)) <= 1e-8

    horizon = np.arange(100)
    truth = np.empty((8, 100))
    truth[:, 0] = snapshots[:, 0]
    for n in range(1, 100):
        truth[:, n] = propagator @ truth[:, n - 1]
    predicted = predict_dmd(model, horizon * dt).real
    rel = np.linalg.norm(predicted - truth) / np.linalg.norm(truth)
    elapsed = time.perf_counter() - started
    assert rel <= 1e-6
    assert elapsed < 1.0


def test_criterion_3_hubbard_u4_extrapolation(hubbard_u4_extrapolation):
    summary, _ = hubbard_u4_extrapolation
    assert summary["rows"] == ["n_k_0"]
    assert summary["t_min"] == pytest.approx(4.0)
    agg = summary["aggregate"]
    assert agg["passed"]
    assert np.isfinite(agg["c"]) and agg["c"] > 0.0
    assert summary["final_error"] <= 1e-2


def test_criterion_4_hubbard_u8_extrapolation(hubbard_u8_extrapolation):
    summary, _ = hubbard_u8_extrapolation
    assert summary["rows"] == ["n_k_0"]
    assert summary["t_min"] == pytest.approx(4.0)
    agg = summary["aggregate"]
    assert agg["passed"]
    assert np.isfinite(agg["c"]) and agg["c"] > 0.0
    assert summary["final_error"] <= 1e-2


def test_criterion_5_xxz_envelope(xxz_l6_extrapolation, xxz_l12_extrapolation):
    for fixture, row, fit_end in (
        (xxz_l6_extrapolation, "zz_0_2", 1.99),
        (xxz_l12_extrapolation, "zz_0_5", 3.99),
    ):
        summary, _ = fixture
        assert summary["rows"] == [row]
        assert summary["t_min"] == pytest.approx(fit_end)
        agg = summary["aggregate"]
        assert agg["passed"]
        assert np.isfinite(agg["c"]) and agg["c"] > 0.0


def test_criterion_6_error_vs_m_sweep_shape(hubbard_sweep):
    assert hubbard_sweep["m_values"] == [100, 150, 200, 250, 300, 350, 400]
    assert hubbard_sweep["skipped"] == []
    errors = np.asarray(hubbard_sweep["errors"])
    assert errors.shape == (7,)
    assert np.all(errors > 0.0)
    assert errors[-1] <= errors[0]
    tail = errors[-3:]
    assert np.max(tail) / np.min(tail) <= 10.0


def test_criterion_7_spatial_resolution_plateau(xxz_l6_sweep, xxz_l12_sweep):
    plateaus = {}
    for label, payload in (("l6", xxz_l6_sweep), ("l12", xxz_l12_sweep)):
        errors = np.asarray(payload["errors"])
        assert errors.size >= 3
        plateaus[label] = float(np.median(errors[-3:]))
    assert plateaus["l12"] <= plateaus["l6"]


def test_criterion_8_property_suites():
    results = {r.name: r for r in verify.run_all()}
    failed = [name for name, r in results.items() if not r.passed]
    assert failed == []

    assert results["norm_and_number_conservation"].details["norm_drift"] <= 1e-10
    assert results["norm_and_number_conservation"].details["number_drift"] <= 1e-10
    assert results["magnetization_conservation"].details["drift"] <= 1e-10
    assert results["jw_dense_oracle"].details["max_abs_deviation"] <= 1e-12
    assert results["frobenius_identity"].details["max_rel"] <= 1e-10

    for name in ("lemma_a", "commutator_frobenius"):
        assert results[name].details["draws"] == 1000
        assert results[name].details["failures"] == 0
    assert results["delay_index_oracle"].details["draws"] == 100
    assert results["delay_index_oracle"].details["mismatches"] == 0
    assert results["ihodmd_reduction"].details["max_abs"] <= 1e-12


def test_criterion_9_bound_dominance(bound_reports):
    assert set(bound_reports) == {"hubbard_u4", "hubbard_u8", "xxz_l6", "xxz_l12"}
    for name, payload in bound_reports.items():
        assert payload["dominates_empirical"], name
        assert payload["min_bound_over_error"] >= 1.0, name
        assert payload["post_window_steps"] > 0, name
