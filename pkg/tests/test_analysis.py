"""Error curves, truncation bounds, envelope checks, inequality lemmas.

Closed-form instances freeze the bound arithmetic: the local bound on
(c_m, ||O||_F, ||H||_F, n dt) = (0.1, 1, 2, 1) evaluates to 0.3 by hand,
and the global bound reduces to the windowed residual at n = m.
"""

import numpy as np
import pytest

from qdmd.analysis import (
    BoundInputs,
    ErrorCurve,
    commutator_frobenius_check,
    condition_number,
    empirical_error_curve,
    error_vs_m_sweep,
    global_bound,
    global_bound_curve,
    koopman_residual_surrogate,
    lemma_a_check,
    local_bound,
    t32_envelope_check,
)
from qdmd.dmd import build_data_matrices, fit_dmd
from qdmd.ihodmd import EmbeddingParams
from qdmd.observables import SnapshotSeries

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)


def inputs(**overrides):
    base = dict(
        h_frobenius=2.0,
        o_frobenius=1.0,
        c_m=0.1,
        delta_m=0.0,
        phi_cond=1.0,
        dt=0.01,
        n=100,
        m=100,
    )
    base.update(overrides)
    return BoundInputs(**base)


def test_local_bound_frozen_instance():
    assert local_bound(inputs()) == pytest.approx(0.3, abs=1e-15)
    assert local_bound(inputs(c_m=0.0)) == 0.0
    assert local_bound(inputs(dt=0.0)) == pytest.approx(0.1, abs=1e-15)


def test_global_bound_reduces_to_residual_at_the_window():
    at_window = inputs(phi_cond=2.0, delta_m=0.25)
    assert global_bound(at_window) == pytest.approx(0.5, abs=1e-15)


def test_global_bound_grows_monotonically_past_the_window():
    curve = global_bound_curve(inputs(delta_m=0.25), [100, 150, 200, 400])
    assert np.all(np.diff(curve) > 0)
    assert curve[0] == pytest.approx(0.25, abs=1e-15)


def test_global_bound_validation():
    with pytest.raises(ValueError):
        inputs(n=50)
    with pytest.raises(ValueError):
        inputs(c_m=-0.1)


def test_global_bound_tail_scales_as_t_three_halves():
    base = inputs(m=0, delta_m=0.0)
    n_values = np.logspace(4, 6, 9).astype(int)
    bounds = global_bound_curve(base, n_values)
    slope = np.polyfit(np.log(n_values * base.dt), np.log(bounds), 1)[0]
    assert 1.45 <= slope <= 1.55


def test_envelope_zero_curve_passes_with_zero_constant():
    times = np.linspace(0.5, 10.0, 40)
    result = t32_envelope_check(ErrorCurve(times, np.zeros(40)), 2.0)
    assert result.c == 0.0
    assert result.passed


def test_envelope_on_exact_power_laws():
    times = np.linspace(0.5, 10.0, 80)
    cubic_half = t32_envelope_check(ErrorCurve(times, times**1.5), 1.0)
    assert cubic_half.c == pytest.approx(1.0, rel=1e-12)
    assert cubic_half.slope == pytest.approx(1.5, abs=1e-9)
    assert cubic_half.passed

    quadratic = t32_envelope_check(ErrorCurve(times, 1e-3 * times**2), 1.0)
    assert quadratic.slope == pytest.approx(2.0, abs=1e-9)
    assert not quadratic.passed


def test_envelope_validation():
    times = np.linspace(1.0, 5.0, 10)
    with pytest.raises(ValueError):
        t32_envelope_check(ErrorCurve(times, np.zeros(10)), 7.0)
    with pytest.raises(ValueError):
        t32_envelope_check(ErrorCurve(np.array([]), np.array([])), 1.0)
    with pytest.raises(ValueError):
        ErrorCurve(times, -np.ones(10))


def test_condition_number():
    assert condition_number(np.eye(3)) == pytest.approx(1.0)
    assert condition_number(np.diag([1.0, 10.0])) == pytest.approx(10.0)
    rng = np.random.default_rng(31)
    a = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
    assert condition_number(a) == pytest.approx(np.linalg.cond(a), rel=1e-10)
    deficient = np.column_stack([a[:, 0], a[:, 0]])
    assert condition_number(deficient) == np.inf


def test_lemma_chain_on_closed_forms():
    modulus, spectral, frobenius, passed = lemma_a_check(
        np.eye(4, dtype=complex), np.array([1, 0, 0, 0], dtype=complex)
    )
    assert (modulus, spectral, frobenius) == pytest.approx((1.0, 1.0, 2.0))
    assert passed

    modulus, spectral, frobenius, passed = lemma_a_check(
        PAULI_Z, np.array([1, 0], dtype=complex)
    )
    assert (modulus, spectral, frobenius) == pytest.approx((1.0, 1.0, np.sqrt(2.0)))
    assert passed


def test_lemma_chain_on_random_draws():
    rng = np.random.default_rng(33)
    for _ in range(200):
        a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        psi = rng.normal(size=6) + 1j * rng.normal(size=6)
        psi /= np.linalg.norm(psi)
        modulus, spectral, frobenius, passed = lemma_a_check(a, psi)
        assert passed
        assert modulus <= spectral + 1e-12
        assert spectral <= frobenius + 1e-12


def test_lemma_validation():
    with pytest.raises(ValueError):
        lemma_a_check(np.eye(2), np.array([2.0, 0.0], dtype=complex))
    with pytest.raises(ValueError):
        lemma_a_check(np.ones((2, 3)), np.array([1.0, 0.0], dtype=complex))
    with pytest.raises(ValueError):
        lemma_a_check(np.eye(3), np.array([1.0, 0.0], dtype=complex))


def test_commutator_bound_with_boundary_case():
    # [X, Z] = -2iY saturates ||[A,B]||_F^2 = 2 ||A||_F^2 ||B||_F^2.
    assert commutator_frobenius_check(PAULI_X, PAULI_Z)
    assert commutator_frobenius_check(PAULI_Z, PAULI_Z)
    rng = np.random.default_rng(35)
    for _ in range(100):
        a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        b = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        assert commutator_frobenius_check(a, b)
    with pytest.raises(ValueError):
        commutator_frobenius_check(PAULI_X, np.eye(3))


def test_koopman_residual_surrogate_on_clean_and_noisy_data():
    theta = 0.3
    rot = np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]]
    )
    cols = [np.array([1.0, 0.0])]
    for _ in range(24):
        cols.append(rot @ cols[-1])
    data = np.array(cols).T
    x1, x2 = build_data_matrices(data, 25)
    model = fit_dmd(x1, x2, 0.1)
    assert koopman_residual_surrogate(x1, x2, model) <= 1e-12

    rng = np.random.default_rng(37)
    x2_noisy = x2 + 1e-3 * rng.normal(size=x2.shape)
    assert koopman_residual_surrogate(x1, x2_noisy, model) >= 1e-4


def test_empirical_error_curve_single_row_and_offset():
    times = np.arange(5) * 0.1
    truth = SnapshotSeries(("a", "b"), times, np.ones((2, 5)))
    same = empirical_error_curve(truth, truth, "a")
    assert np.all(same.errors == 0.0)
    shifted = SnapshotSeries(
        ("a", "b"), times, np.vstack([np.ones(5) + 0.25, np.ones(5)])
    )
    offset = empirical_error_curve(truth, shifted, "a")
    assert offset.errors == pytest.approx(np.full(5, 0.25))
    both = empirical_error_curve(truth, shifted, ["a", "b"])
    assert both.errors == pytest.approx(np.full(5, 0.25))
    assert both.metadata["rows"] == ["a", "b"]


def test_empirical_error_curve_combines_complex_pairs():
    times = np.arange(4) * 0.1
    truth = SnapshotSeries(("r_0_1.re", "r_0_1.im"), times, np.zeros((2, 4)))
    predicted = SnapshotSeries(
        ("r_0_1.re", "r_0_1.im"),
        times,
        np.vstack([np.full(4, 3e-3), np.full(4, 4e-3)]),
    )
    curve = empirical_error_curve(truth, predicted, "r_0_1")
    assert curve.errors == pytest.approx(np.full(4, 5e-3))
    with pytest.raises(KeyError):
        empirical_error_curve(truth, predicted, "missing")


def test_empirical_error_curve_rejects_mismatched_grids():
    a = SnapshotSeries(("a",), np.arange(4) * 0.1, np.zeros((1, 4)))
    b = SnapshotSeries(("a",), np.arange(4) * 0.2, np.zeros((1, 4)))
    with pytest.raises(ValueError):
        empirical_error_curve(a, b, "a")
    with pytest.raises(ValueError):
        empirical_error_curve(a, a, [])


def test_error_vs_m_sweep_skips_infeasible_windows():
    times = np.arange(30) * 0.1
    series = SnapshotSeries(("a",), times, np.sin(times)[None, :])
    result = error_vs_m_sweep(
        series,
        [3, 10, 20, 50],
        EmbeddingParams(4, 1, 2),
        lambda m: series,
        ["a"],
    )
    assert result.m_values == [10, 20]
    assert result.errors == pytest.approx([0.0, 0.0])
    assert [m for m, _ in result.skipped] == [3, 50]
    assert "n_s + tau" in result.skipped[0][1]
    assert "only" in result.skipped[1][1]
    assert result.as_table().shape == (2, 2)
