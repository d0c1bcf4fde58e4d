"""Prediction-error analysis: empirical curves, analytic bounds, sweeps.

The analytic side evaluates the local and global truncation bounds of the
linear-surrogate theory: the local bound couples the surrogate quality
constant c_m to the observable and Hamiltonian Frobenius norms, and the
global bound multiplies the accumulated local terms by the mode-matrix
condition number. Both are printed formulas, evaluated verbatim; c_m is
not computable from its definition, so a measured surrogate (maximal
normalized one-step residual over the fitting window) is provided.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from qdmd.dmd import DMDModel
from qdmd.ihodmd import EmbeddingParams, minimal_fit_window
from qdmd.observables import SnapshotSeries

ENVELOPE_SLOPE_LIMIT = 1.5 + 0.2
POSITIVE_FLOOR = 1e-16


@dataclass
class ErrorCurve:
    """|Delta(t)| on a time grid, for one row or an l2 aggregate."""

    times: np.ndarray
    errors: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.errors = np.asarray(self.errors, dtype=np.float64)
        if self.times.shape != self.errors.shape:
            raise ValueError("times and errors must have equal shapes")
        if np.any(self.errors < 0):
            raise ValueError("error values must be nonnegative")


def _row_abs_error(truth: SnapshotSeries, predicted: SnapshotSeries, label: str):
    """|Delta| for one reported row; paired .re/.im rows combine as a modulus."""
    if label in truth.labels:
        return np.abs(truth.row(label) - predicted.row(label))
    re_lab, im_lab = label + ".re", label + ".im"
    if re_lab in truth.labels and im_lab in truth.labels:
        return np.hypot(
            truth.row(re_lab) - predicted.row(re_lab),
            truth.row(im_lab) - predicted.row(im_lab),
        )
    raise KeyError(f"row {label!r} not present in the series")


def empirical_error_curve(
    truth: SnapshotSeries, predicted: SnapshotSeries, rows
) -> ErrorCurve:
    """Per-time |Delta| for one row, or the l2 aggregate over several rows.

    A bare label that only exists as a `.re`/`.im` pair is treated as the
    complex entry and reported as the modulus of the complex difference.
    """
    if truth.times.shape != predicted.times.shape or not np.allclose(
        truth.times, predicted.times, rtol=1e-12, atol=1e-12
    ):
        raise ValueError("truth and prediction grids differ")
    rows = [rows] if isinstance(rows, str) else list(rows)
    if not rows:
        raise ValueError("need at least one row")
    stacked = np.stack([_row_abs_error(truth, predicted, lab) for lab in rows])
    errors = stacked[0] if len(rows) == 1 else np.linalg.norm(stacked, axis=0)
    return ErrorCurve(truth.times.copy(), errors, {"rows": rows})


@dataclass(frozen=True)
class BoundInputs:
    """Measured quantities entering the truncation bounds."""

    h_frobenius: float
    o_frobenius: float
    c_m: float
    delta_m: float
    phi_cond: float
    dt: float
    n: int
    m: int

    def __post_init__(self):
        values = (
            self.h_frobenius,
            self.o_frobenius,
            self.c_m,
            self.delta_m,
            self.phi_cond,
            self.dt,
        )
        if any(v < 0 for v in values):
            raise ValueError("bound inputs must be nonnegative")
        if self.n < self.m:
            raise ValueError("n must be >= m")


def local_bound(inputs: BoundInputs) -> float:
    """c_m ||O||_F (1 + 2 n dt ||H||_F^2)^{1/2}."""
    return float(
        inputs.c_m
        * inputs.o_frobenius
        * np.sqrt(1.0 + 2.0 * inputs.n * inputs.dt * inputs.h_frobenius**2)
    )


def global_bound(inputs: BoundInputs) -> float:
    """phi_cond * (delta_m + (n - m) * local_bound)."""
    return float(
        inputs.phi_cond * (inputs.delta_m + (inputs.n - inputs.m) * local_bound(inputs))
    )


def global_bound_curve(inputs: BoundInputs, n_values) -> np.ndarray:
    """Global bound evaluated at each step count in n_values."""
    return np.array(
        [global_bound(replace(inputs, n=int(n))) for n in np.asarray(n_values)]
    )


@dataclass
class EnvelopeResult:
    c: float
    slope: float
    passed: bool
    t_min: float
    n_points: int


def t32_envelope_check(curve: ErrorCurve, t_min: float) -> EnvelopeResult:
    """Fit C = max |Delta(t)|/t^{3/2} over t >= t_min and check the tail slope.

    The envelope |Delta(t)| <= C t^{3/2} holds by construction once C is
    the maximum ratio; the check fails only if C is not finite or the
    least-squares slope of log|Delta| vs log t over the tail exceeds
    1.5 + 0.2. An all-zero tail passes with C = 0.
    """
    if curve.times.size == 0:
        raise ValueError("empty error curve")
    if t_min < curve.times[0] or t_min > curve.times[-1]:
        raise ValueError("t_min outside the curve range")
    tail = curve.times >= t_min - 1e-12
    t = curve.times[tail]
    e = curve.errors[tail]
    positive = (e > POSITIVE_FLOOR) & (t > 0)
    if not np.any(positive):
        return EnvelopeResult(0.0, 0.0, True, t_min, int(tail.sum()))
    c = float(np.max(e[positive] / t[positive] ** 1.5))
    if np.count_nonzero(positive) >= 2:
        slope = float(np.polyfit(np.log(t[positive]), np.log(e[positive]), 1)[0])
    else:
        slope = 0.0
    passed = bool(np.isfinite(c) and slope <= ENVELOPE_SLOPE_LIMIT)
    return EnvelopeResult(c, slope, passed, t_min, int(tail.sum()))


def condition_number(modes: np.ndarray) -> float:
    """sigma_max / sigma_min of the mode matrix; inf when rank deficient."""
    modes = np.asarray(modes)
    s = np.linalg.svd(modes, compute_uv=False)
    floor = s[0] * np.finfo(np.float64).eps * max(modes.shape)
    if s[0] == 0 or s[-1] <= floor:
        return float("inf")
    return float(s[0] / s[-1])


def koopman_residual_surrogate(
    x1: np.ndarray, x2: np.ndarray, model: DMDModel
) -> float:
    """Measured stand-in for c_m: worst normalized one-step residual.

    Advances every fitting column with the fitted propagator
    Phi Lambda Phi^+ and returns max ||X2_col - advanced|| / ||X1_col||.
    """
    pinv_modes = np.linalg.pinv(model.modes)
    advanced = model.modes @ (
        model.eigenvalues[:, None] * (pinv_modes @ x1.astype(np.complex128))
    )
    residual = np.linalg.norm(x2 - advanced, axis=0)
    scale = np.linalg.norm(x1, axis=0)
    scale = np.where(scale > POSITIVE_FLOOR, scale, 1.0)
    return float(np.max(residual / scale))


@dataclass
class SweepResult:
    m_values: list[int]
    errors: list[float]
    skipped: list[tuple[int, str]]

    def as_table(self) -> np.ndarray:
        return np.column_stack([self.m_values, self.errors])


def error_vs_m_sweep(
    series: SnapshotSeries,
    m_values,
    params: EmbeddingParams,
    fit_and_predict,
    rows,
    t_index: int = -1,
) -> SweepResult:
    """Final-time |Delta| for each fitting-window size.

    fit_and_predict(m) must return the predicted SnapshotSeries on the
    truth grid. Infeasible window sizes (too small for the embedding or
    larger than the series) are skipped with a notice instead of failing
    the whole sweep. The truth series is computed once by the caller and
    reused across all m.
    """
    kept_m: list[int] = []
    errors: list[float] = []
    skipped: list[tuple[int, str]] = []
    need = minimal_fit_window(params)
    for m in m_values:
        m = int(m)
        if m < need:
            skipped.append((m, f"needs at least n_s + tau = {need} snapshots"))
            continue
        if m > series.times.size:
            skipped.append((m, f"series has only {series.times.size} snapshots"))
            continue
        predicted = fit_and_predict(m)
        curve = empirical_error_curve(series, predicted, rows)
        kept_m.append(m)
        errors.append(float(curve.errors[t_index]))
    return SweepResult(kept_m, errors, skipped)


def lemma_a_check(operator: np.ndarray, psi: np.ndarray):
    """(|<psi|O|psi>|, ||O||_2, ||O||_F, pass) for a unit vector psi.

    Checks the chain |<psi|O|psi>| <= ||O||_2 <= ||O||_F in the modulus
    form, which is the form the error-bound proof uses.
    """
    operator = np.asarray(operator)
    psi = np.asarray(psi, dtype=np.complex128)
    if operator.ndim != 2 or operator.shape[0] != operator.shape[1]:
        raise ValueError("operator must be square")
    if psi.shape != (operator.shape[0],):
        raise ValueError("vector length does not match the operator")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
        raise ValueError("psi must be normalized")
    lhs = float(abs(np.vdot(psi, operator @ psi)))
    mid = float(np.linalg.norm(operator, ord=2))
    rhs = float(np.linalg.norm(operator, ord="fro"))
    passed = bool(lhs <= mid + 1e-12 and mid <= rhs + 1e-12)
    return lhs, mid, rhs, passed


def commutator_frobenius_check(a: np.ndarray, b: np.ndarray) -> bool:
    """||AB - BA||_F^2 <= 2 ||A||_F^2 ||B||_F^2, with a small slack."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("need two square matrices of equal shape")
    lhs = np.linalg.norm(a @ b - b @ a, ord="fro") ** 2
    rhs = 2.0 * np.linalg.norm(a, ord="fro") ** 2 * np.linalg.norm(b, ord="fro") ** 2
    return bool(lhs <= rhs + 1e-10)
