"""Dynamic mode decomposition: truncated-SVD fit, spectrum, prediction.

Given snapshot matrices X1 (columns 1..m-1) and X2 (columns 2..m) sampled
at spacing dt, the fit computes the reduced propagator
A~ = U* X2 V S^{-1}, its eigenpairs (Lambda, W), exact modes
Phi = X2 V S^{-1} W, continuous exponents Omega = log(Lambda)/dt on the
principal branch, and amplitudes b from the first snapshot.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

NUMERICAL_RANK_FLOOR = 1e-14


@dataclass(frozen=True)
class RankPolicy:
    """SVD truncation rule: relative threshold or fixed rank."""

    kind: str = "threshold"
    threshold: float = 1e-10
    rank: int | None = None

    def __post_init__(self):
        if self.kind not in ("threshold", "fixed"):
            raise ValueError(f"unknown rank policy kind {self.kind!r}")
        if self.kind == "threshold":
            if not 0 < self.threshold <= 1:
                raise ValueError("threshold must be in (0, 1]")
        else:
            if self.rank is None or self.rank < 1:
                raise ValueError("fixed policy needs rank >= 1")


@dataclass
class DMDModel:
    """Fitted linear surrogate x(t) ~ Phi exp(Omega t) b."""

    eigenvalues: np.ndarray
    exponents: np.ndarray
    modes: np.ndarray
    amplitudes: np.ndarray
    dt: float
    rank: int
    metadata: dict = field(default_factory=dict)


def build_data_matrices(values: np.ndarray, fit_window: int):
    """Shifted snapshot pair (X1, X2) from the first fit_window columns."""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("values must be a 2-D snapshot matrix")
    if fit_window < 3:
        raise ValueError("need at least three snapshots to form a shifted pair")
    if fit_window > values.shape[1]:
        raise ValueError(
            f"fit window {fit_window} exceeds the {values.shape[1]} stored snapshots"
        )
    return values[:, : fit_window - 1], values[:, 1:fit_window]


def truncated_svd(x: np.ndarray, policy: RankPolicy):
    """SVD of x truncated per policy; returns (U_r, S_r, V_r, r).

    Threshold policy keeps singular values >= threshold * sigma_1. Fixed
    policy keeps exactly `rank` values but never below the numerical-rank
    floor; a clamp emits a warning. r >= 1 always.
    """
    u, s, vh = np.linalg.svd(np.asarray(x, dtype=np.complex128), full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        raise ValueError("cannot truncate an all-zero data matrix")
    numerical = int(np.sum(s > NUMERICAL_RANK_FLOOR * s[0]))
    if policy.kind == "threshold":
        r = int(np.sum(s >= policy.threshold * s[0]))
    else:
        r = int(policy.rank)
        if r > numerical:
            warnings.warn(
                f"requested rank {r} exceeds numerical rank {numerical}; clamped",
                stacklevel=2,
            )
            r = numerical
    r = max(1, min(r, numerical))
    return u[:, :r], s[:r], vh[:r].conj().T, r


def fit_dmd(
    x1: np.ndarray,
    x2: np.ndarray,
    dt: float,
    policy: RankPolicy = RankPolicy(),
    amplitudes: str = "pinv",
    stabilize: str = "none",
) -> DMDModel:
    """Fit the DMD surrogate of the map X1 -> X2.

    amplitudes: "pinv" solves min ||Phi b - x_1||_2 (least squares on the
    first snapshot); "adjoint" applies the conjugate transpose literally,
    b = Phi* x_1, which coincides with the least-squares fit only for
    orthonormal modes and exists for comparison.

    stabilize: "unit_circle" rescales any eigenvalue with |lambda| > 1
    back to the unit circle before exponents and amplitudes are computed.
    The underlying dynamics here are unitary, so true discrete eigenvalues
    have unit modulus; growth beyond it is a finite-rank artifact. Default
    is "none".
    """
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    if x1.shape != x2.shape:
        raise ValueError("snapshot matrices must have equal shapes")
    if dt <= 0:
        raise ValueError("dt must be positive")
    if amplitudes not in ("pinv", "adjoint"):
        raise ValueError(f"unknown amplitude mode {amplitudes!r}")
    if stabilize not in ("none", "unit_circle"):
        raise ValueError(f"unknown stabilization mode {stabilize!r}")

    u, s, v, r = truncated_svd(x1, policy)
    b_mat = (x2 @ v) / s
    a_tilde = u.conj().T @ b_mat
    lam, w = np.linalg.eig(a_tilde)
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    w = w[:, order]
    phi = b_mat @ w

    n_rescaled = 0
    if stabilize == "unit_circle":
        mags = np.abs(lam)
        over = mags > 1.0
        n_rescaled = int(np.count_nonzero(over))
        lam = np.where(over, lam / np.where(over, mags, 1.0), lam)

    if np.any(np.abs(lam) < 1e-300):
        raise ValueError("zero DMD eigenvalue; reduce the rank or the threshold")
    # principal branch; the negative real axis maps to +i pi
    omega = np.log(lam) / dt

    x_first = x1[:, 0].astype(np.complex128)
    if amplitudes == "pinv":
        amps = np.linalg.lstsq(phi, x_first, rcond=None)[0]
    else:
        amps = phi.conj().T @ x_first

    w_cond = float(np.linalg.cond(w))
    metadata = {
        "n_rows": int(x1.shape[0]),
        "n_pairs": int(x1.shape[1]),
        "policy_kind": policy.kind,
        "policy_threshold": policy.threshold,
        "policy_rank": policy.rank,
        "amplitudes": amplitudes,
        "stabilize": stabilize,
        "n_rescaled_eigenvalues": n_rescaled,
        "eigvec_condition": w_cond,
        "defective": bool(w_cond > 1e12),
        "sigma_max": float(s[0]),
        "sigma_min_kept": float(s[-1]),
    }
    return DMDModel(
        eigenvalues=lam,
        exponents=omega,
        modes=phi,
        amplitudes=amps,
        dt=float(dt),
        rank=r,
        metadata=metadata,
    )


def predict_dmd(model: DMDModel, times) -> np.ndarray:
    """Phi exp(Omega t) b at each requested time; complex (n_rows, n_times)."""
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    dynamics = np.exp(np.outer(model.exponents, times)) * model.amplitudes[:, None]
    return model.modes @ dynamics


def predict_discrete(model: DMDModel, n: int) -> np.ndarray:
    """Phi Lambda^n b; equals predict_dmd at t = n dt when |lambda| > 0."""
    return model.modes @ (model.eigenvalues**n * model.amplitudes)


def reconstruct(model: DMDModel, n_times: int) -> np.ndarray:
    """Prediction on the training grid t = 0, dt, ..., (n_times-1) dt."""
    return predict_dmd(model, np.arange(n_times) * model.dt)


def _complex_to_pairs(arr: np.ndarray):
    arr = np.asarray(arr, dtype=np.complex128)
    if arr.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in arr]
    # column-major storage for 2-D arrays
    return [[[float(z.real), float(z.imag)] for z in arr[:, c]] for c in range(arr.shape[1])]


def _pairs_to_complex(pairs, ndim: int) -> np.ndarray:
    if ndim == 1:
        return np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
    cols = [np.array([complex(re, im) for re, im in col]) for col in pairs]
    return np.column_stack(cols) if cols else np.zeros((0, 0), dtype=np.complex128)


def model_to_dict(model: DMDModel) -> dict:
    return {
        "kind": "dmd",
        "dt": model.dt,
        "rank": model.rank,
        "eigenvalues": _complex_to_pairs(model.eigenvalues),
        "exponents": _complex_to_pairs(model.exponents),
        "modes": _complex_to_pairs(model.modes),
        "amplitudes": _complex_to_pairs(model.amplitudes),
        "metadata": model.metadata,
    }


def model_from_dict(payload: dict) -> DMDModel:
    if payload.get("kind") != "dmd":
        raise ValueError("not a DMD model payload")
    return DMDModel(
        eigenvalues=_pairs_to_complex(payload["eigenvalues"], 1),
        exponents=_pairs_to_complex(payload["exponents"], 1),
        modes=_pairs_to_complex(payload["modes"], 2),
        amplitudes=_pairs_to_complex(payload["amplitudes"], 1),
        dt=float(payload["dt"]),
        rank=int(payload["rank"]),
        metadata=dict(payload.get("metadata", {})),
    )


def model_to_json(model: DMDModel) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True)


def model_from_json(text: str) -> DMDModel:
    return model_from_dict(json.loads(text))
