"""Statevector engine: state preparation, Trotter evolution, exact oracle.

Pauli strings act on the 2^n amplitude vector without materializing any
matrix: a string with X/Y support permutes basis indices by an XOR mask,
and Y/Z support contributes a diagonal sign computed from bit parities.
Compiled actions (permutation + sign vector) are cached per string.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from itertools import combinations
from math import exp, log, sqrt

import numpy as np

from qdmd.lattice import (
    DENSE_QUBIT_LIMIT,
    HubbardParams,
    PauliTerm,
    QubitHamiltonian,
    build_hubbard_h0,
    dense_matrix,
)

CHECKPOINT_MAGIC = b"QKSV"
CHECKPOINT_VERSION = 1


@dataclass
class StateVector:
    """Normalized wavefunction on n qubits, little-endian basis order."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise ValueError(
                f"amplitude vector of length {self.amplitudes.shape} does not "
                f"match {self.n_qubits} qubits"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


def basis_state(n_qubits: int, index: int) -> StateVector:
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


_ACTION_CACHE: dict[tuple[int, str], tuple[np.ndarray, np.ndarray, complex]] = {}


def _compiled_action(n_qubits: int, operators: str):
    """Return (source indices, signs, prefactor) so that

    (P psi)[i] = prefactor * signs[i] * psi[source[i]].
    """
    key = (n_qubits, operators)
    hit = _ACTION_CACHE.get(key)
    if hit is not None:
        return hit
    if len(operators) != n_qubits:
        raise ValueError(
            f"string of length {len(operators)} on {n_qubits} qubits"
        )
    xmask = ymask = zmask = 0
    for j, ch in enumerate(operators):
        bit = 1 << j
        if ch == "X":
            xmask |= bit
        elif ch == "Y":
            ymask |= bit
        elif ch == "Z":
            zmask |= bit
        elif ch != "I":
            raise ValueError(f"invalid Pauli character {ch!r}")
    dim = 1 << n_qubits
    idx = np.arange(dim, dtype=np.uint64)
    src = idx ^ np.uint64(xmask | ymask)
    parity = (np.bitwise_count(src & np.uint64(ymask | zmask)) & 1).astype(np.float64)
    signs = 1.0 - 2.0 * parity
    prefactor = 1j ** (bin(ymask).count("1") % 4)
    _ACTION_CACHE[key] = (src, signs, complex(prefactor))
    return _ACTION_CACHE[key]


def apply_pauli_string(operators: str, amplitudes: np.ndarray) -> np.ndarray:
    """P |psi> for a bare Pauli string (no coefficient)."""
    src, signs, pref = _compiled_action(len(operators), operators)
    return pref * (signs * amplitudes[src])


def pauli_expectation(state: StateVector, operators: str) -> float:
    """<psi|P|psi> for a single Pauli string; real for any Pauli string."""
    val = np.vdot(state.amplitudes, apply_pauli_string(operators, state.amplitudes))
    return float(val.real)


def expectation(state: StateVector, ham: QubitHamiltonian) -> float:
    """Expectation of a real-coefficient Pauli sum (Hermitian by construction)."""
    if ham.n_qubits != state.n_qubits:
        raise ValueError("Hamiltonian and state sizes differ")
    return float(
        sum(t.coefficient * pauli_expectation(state, t.operators) for t in ham.terms)
    )


def apply_pauli_exponential(
    state: StateVector, term: PauliTerm, theta: float
) -> StateVector:
    """exp(-i * theta * P)|psi> = cos(theta)|psi> - i sin(theta) P|psi>.

    P is the term's Pauli string; the term coefficient is not folded in,
    callers pass the full rotation angle. Valid because P^2 = I.
    """
    if term.n_qubits != state.n_qubits:
        raise ValueError("term and state sizes differ")
    rotated = apply_pauli_string(term.operators, state.amplitudes)
    amps = np.cos(theta) * state.amplitudes - 1j * np.sin(theta) * rotated
    return StateVector(state.n_qubits, amps)


@dataclass
class TrotterPlan:
    """Fixed-order product formula for one time step."""

    hamiltonian: QubitHamiltonian
    dt: float
    term_order: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        n = len(self.hamiltonian.terms)
        if not self.term_order:
            self.term_order = tuple(range(n))
        if sorted(self.term_order) != list(range(n)):
            raise ValueError("term_order must be a permutation of the term indices")


def trotter_step(state: StateVector, plan: TrotterPlan) -> StateVector:
    """Apply exp(-i c_j dt P_j) for every term once, in plan order."""
    if plan.hamiltonian.n_qubits != state.n_qubits:
        raise ValueError("plan and state sizes differ")
    amps = state.amplitudes
    for j in plan.term_order:
        term = plan.hamiltonian.terms[j]
        theta = term.coefficient * plan.dt
        rotated = apply_pauli_string(term.operators, amps)
        amps = np.cos(theta) * amps - 1j * np.sin(theta) * rotated
    return StateVector(state.n_qubits, amps)


def evolve_and_record(
    state: StateVector, plan: TrotterPlan, steps: int, recorder
) -> tuple[np.ndarray, np.ndarray]:
    """Run `steps` Trotter steps, recording at t=0 and after each step.

    recorder maps a StateVector to a 1-D float array; the outputs are
    stacked as columns of the returned (n_rows, steps+1) matrix on the
    grid t_n = n * dt. steps=0 yields the single t=0 column.
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    times = np.arange(steps + 1) * plan.dt
    current = state
    columns = [np.asarray(recorder(current), dtype=np.float64)]
    for _ in range(steps):
        current = trotter_step(current, plan)
        columns.append(np.asarray(recorder(current), dtype=np.float64))
    return times, np.column_stack(columns)


def exact_evolve(state: StateVector, ham: QubitHamiltonian, t: float) -> StateVector:
    """e^{-iHt}|psi> by dense eigendecomposition; oracle for small registers."""
    if ham.n_qubits > DENSE_QUBIT_LIMIT:
        raise ValueError(
            f"exact evolution limited to {DENSE_QUBIT_LIMIT} qubits, got {ham.n_qubits}"
        )
    if ham.n_qubits != state.n_qubits:
        raise ValueError("Hamiltonian and state sizes differ")
    h = dense_matrix(ham)
    evals, evecs = np.linalg.eigh(h)
    coeffs = evecs.conj().T @ state.amplitudes
    amps = evecs @ (np.exp(-1j * evals * t) * coeffs)
    return StateVector(state.n_qubits, amps)


def prepare_domain_wall(sites: int) -> StateVector:
    """Product state with the first half up (|0>) and the second half down."""
    if sites < 2 or sites % 2:
        raise ValueError("domain wall needs an even site count >= 2")
    index = 0
    for j in range(sites // 2, sites):
        index |= 1 << j
    return basis_state(sites, index)


@dataclass
class GroundStateResult:
    state: StateVector
    energy: float
    gap: float
    degenerate: bool
    sector_dimension: int


def _sector_indices(sites: int) -> np.ndarray:
    """Basis indices with exactly sites/2 particles in each spin block."""
    half = sites // 2
    ups = [sum(1 << j for j in c) for c in combinations(range(sites), half)]
    downs = [b << sites for b in ups]
    out = [u | d for d in downs for u in ups]
    return np.array(sorted(out), dtype=np.int64)


def prepare_hubbard_ground_state(params: HubbardParams) -> GroundStateResult:
    """Ground state of the non-interacting chain in the half-filled sector.

    The fixed particle-number sector is enumerated explicitly and the
    projected Hamiltonian diagonalized densely; the eigenvector of the
    lowest eigenvalue is embedded back in the full register. A degenerate
    lowest level is reported via the flag, not an error. The global phase
    is fixed by making the largest-magnitude amplitude real positive.
    """
    h0 = build_hubbard_h0(params)
    indices = _sector_indices(params.sites)
    pos = {int(b): i for i, b in enumerate(indices)}
    dim = len(indices)
    mat = np.zeros((dim, dim), dtype=np.complex128)
    for term in h0.terms:
        src, signs, pref = _compiled_action(h0.n_qubits, term.operators)
        for col, b in enumerate(indices):
            # P|b> = pref * signs[t] |t> with t = b xor flip = src[b]
            target = int(src[b])
            row = pos.get(target)
            if row is None:
                continue
            mat[row, col] += term.coefficient * pref * signs[target]
    herm_defect = np.max(np.abs(mat - mat.conj().T))
    if herm_defect > 1e-10:
        raise RuntimeError(f"projected Hamiltonian not Hermitian ({herm_defect:.2e})")
    evals, evecs = np.linalg.eigh(mat)
    gap = float(evals[1] - evals[0]) if dim > 1 else float("inf")
    vec = evecs[:, 0]
    k = int(np.argmax(np.abs(vec)))
    phase = vec[k] / abs(vec[k])
    vec = vec * np.conj(phase)
    amps = np.zeros(2**h0.n_qubits, dtype=np.complex128)
    amps[indices] = vec
    return GroundStateResult(
        state=StateVector(h0.n_qubits, amps),
        energy=float(evals[0]),
        gap=gap,
        degenerate=gap < 1e-10,
        sector_dimension=dim,
    )


def save_checkpoint(path, state: StateVector) -> None:
    """Binary checkpoint: 16-byte header + interleaved (re, im) LE doubles."""
    header = CHECKPOINT_MAGIC + struct.pack(
        "<III", CHECKPOINT_VERSION, state.n_qubits, 0
    )
    interleaved = np.empty(2 * state.amplitudes.size, dtype="<f8")
    interleaved[0::2] = state.amplitudes.real
    interleaved[1::2] = state.amplitudes.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(interleaved.tobytes())


def load_checkpoint(path) -> StateVector:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != CHECKPOINT_MAGIC:
            raise ValueError("not a statevector checkpoint")
        version, n_qubits, _ = struct.unpack("<III", header[4:])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != 2 ** (n_qubits + 1):
        raise ValueError("truncated checkpoint payload")
    amps = raw[0::2] + 1j * raw[1::2]
    return StateVector(n_qubits, amps)


def trotter_step_count_bound(n_terms: int, tau: float, eps: float) -> float:
    """Sufficient step count 4 J^2 tau exp(2 sqrt(ln 5) ln(J tau / eps)).

    J is the Hamiltonian term count and tau = ||H|| T. The exponent uses
    ln(J tau / eps) literally; a variant reading places a square root
    around that logarithm, which gives a much slower growth. The bound is
    diagnostic, not used to pick step counts. Requires 0 < eps < J * tau.
    """
    if n_terms < 1:
        raise ValueError("need at least one term")
    if tau <= 0:
        raise ValueError("tau must be positive")
    if not 0 < eps < n_terms * tau:
        raise ValueError("need 0 < eps < J * tau for a positive logarithm")
    return 4.0 * n_terms**2 * tau * exp(2.0 * sqrt(log(5.0)) * log(n_terms * tau / eps))
