"""Pauli-string Hamiltonians for Hubbard and XXZ chains.

Fermions are encoded with the Jordan-Wigner transformation: spin-up modes
live on qubits 0..L-1, spin-down modes on qubits L..2L-1, |1> means
occupied, and the number operator is n = (I - Z)/2. Basis indices are
little-endian (qubit j is bit j of the index).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

PAULI_CHARS = "IXYZ"

_SINGLE = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=np.complex128),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=np.complex128),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128),
}

DENSE_QUBIT_LIMIT = 14


@dataclass(frozen=True)
class PauliTerm:
    """One real-coefficient Pauli string, e.g. 0.5 * XZZY."""

    coefficient: float
    operators: str

    def __post_init__(self):
        if not self.operators:
            raise ValueError("empty Pauli string")
        bad = set(self.operators) - set(PAULI_CHARS)
        if bad:
            raise ValueError(f"invalid Pauli characters: {sorted(bad)}")
        if not np.isfinite(self.coefficient):
            raise ValueError("non-finite coefficient")

    @property
    def n_qubits(self) -> int:
        return len(self.operators)


@dataclass
class QubitHamiltonian:
    """Sum of Pauli terms on a fixed qubit register."""

    n_qubits: int
    terms: list[PauliTerm] = field(default_factory=list)
    label: str = ""

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        for t in self.terms:
            if t.n_qubits != self.n_qubits:
                raise ValueError(
                    f"term on {t.n_qubits} qubits in a {self.n_qubits}-qubit Hamiltonian"
                )


def merge_terms(terms, tol: float = 1e-14) -> list[PauliTerm]:
    """Combine duplicate strings, keeping first-occurrence order.

    Terms whose merged coefficient has magnitude below tol are dropped.
    """
    order: list[str] = []
    acc: dict[str, float] = {}
    for t in terms:
        if t.operators not in acc:
            acc[t.operators] = 0.0
            order.append(t.operators)
        acc[t.operators] += t.coefficient
    return [
        PauliTerm(acc[ops], ops) for ops in order if abs(acc[ops]) > tol
    ]


def pauli_string_matrix(operators: str) -> np.ndarray:
    """Dense matrix of a Pauli string in little-endian qubit order."""
    if len(operators) > DENSE_QUBIT_LIMIT:
        raise ValueError(f"dense realization limited to {DENSE_QUBIT_LIMIT} qubits")
    out = np.array([[1.0 + 0.0j]])
    # kron(qubit_{n-1}, ..., qubit_0) puts qubit 0 on the least significant bit
    for ch in operators:
        out = np.kron(_SINGLE[ch], out)
    return out


def dense_matrix(ham: QubitHamiltonian) -> np.ndarray:
    """Dense Hermitian realization. Guarded to small registers."""
    if ham.n_qubits > DENSE_QUBIT_LIMIT:
        raise ValueError(
            f"dense realization limited to {DENSE_QUBIT_LIMIT} qubits, "
            f"got {ham.n_qubits}"
        )
    dim = 2**ham.n_qubits
    out = np.zeros((dim, dim), dtype=np.complex128)
    for t in ham.terms:
        out += t.coefficient * pauli_string_matrix(t.operators)
    return out


def frobenius_norm(ham: QubitHamiltonian) -> float:
    """Frobenius norm from coefficients alone.

    Distinct Pauli strings are orthogonal under the trace inner product
    with Tr(P^dag P) = 2^n, so ||H||_F = sqrt(2^n * sum c_j^2) once the
    term list holds each string at most once.
    """
    merged = merge_terms(ham.terms)
    csq = sum(t.coefficient**2 for t in merged)
    return float(np.sqrt(2.0**ham.n_qubits * csq))


def hamiltonian_to_json(ham: QubitHamiltonian) -> str:
    payload = {
        "n_qubits": ham.n_qubits,
        "label": ham.label,
        "terms": [
            {"coeff": t.coefficient, "string": t.operators} for t in ham.terms
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def hamiltonian_from_json(text: str) -> QubitHamiltonian:
    payload = json.loads(text)
    terms = [PauliTerm(t["coeff"], t["string"]) for t in payload["terms"]]
    return QubitHamiltonian(payload["n_qubits"], terms, payload.get("label", ""))


@dataclass(frozen=True)
class HubbardParams:
    """One-dimensional Hubbard chain at half filling, open boundaries."""

    sites: int
    tau0: float = 1.0
    tau1: float = 0.1
    u: float = 4.0
    mu: float = 2.0

    def __post_init__(self):
        if self.sites < 2:
            raise ValueError("need at least two sites")
        if self.sites % 2:
            raise ValueError("half filling requires an even site count")

    @property
    def n_qubits(self) -> int:
        return 2 * self.sites


@dataclass(frozen=True)
class XXZParams:
    """XXZ spin chain -sum(XX + YY) + U sum ZZ + h sum Z, open boundaries."""

    sites: int
    u: float = 4.0
    h: float = 0.1

    def __post_init__(self):
        if self.sites < 2:
            raise ValueError("need at least two sites")

    @property
    def n_qubits(self) -> int:
        return self.sites


def _string_with(n_qubits: int, assignments) -> str:
    chars = ["I"] * n_qubits
    for pos, ch in assignments:
        chars[pos] = ch
    return "".join(chars)


def jordan_wigner_hopping(p: int, q: int, sites: int, spin: int) -> list[PauliTerm]:
    """Hopping pair c_p^dag c_q + c_q^dag c_p within one spin block.

    Requires 0 <= p < q < sites; spin 0 selects the up block (qubits
    0..L-1), spin 1 the down block (qubits L..2L-1). The Z parity string
    fills the qubits strictly between the endpoints.
    """
    if not 0 <= p < q < sites:
        raise ValueError(f"need 0 <= p < q < sites, got p={p}, q={q}, sites={sites}")
    if spin not in (0, 1):
        raise ValueError("spin must be 0 (up) or 1 (down)")
    n_qubits = 2 * sites
    off = spin * sites
    zs = [(off + j, "Z") for j in range(p + 1, q)]
    x_string = _string_with(n_qubits, [(off + p, "X"), (off + q, "X")] + zs)
    y_string = _string_with(n_qubits, [(off + p, "Y"), (off + q, "Y")] + zs)
    return [PauliTerm(0.5, x_string), PauliTerm(0.5, y_string)]


def jordan_wigner_number(site: int, sites: int, spin: int) -> list[PauliTerm]:
    """Number operator n_{site,spin} = (I - Z)/2 on the encoded qubit."""
    if not 0 <= site < sites:
        raise ValueError(f"site {site} out of range for {sites} sites")
    if spin not in (0, 1):
        raise ValueError("spin must be 0 (up) or 1 (down)")
    n_qubits = 2 * sites
    q = spin * sites + site
    return [
        PauliTerm(0.5, "I" * n_qubits),
        PauliTerm(-0.5, _string_with(n_qubits, [(q, "Z")])),
    ]


def build_hubbard_h0(params: HubbardParams) -> QubitHamiltonian:
    """Non-interacting chain -tau0 * sum over bonds and spins of hopping."""
    terms: list[PauliTerm] = []
    for j in range(params.sites - 1):
        for spin in (0, 1):
            for t in jordan_wigner_hopping(j, j + 1, params.sites, spin):
                terms.append(PauliTerm(-params.tau0 * t.coefficient, t.operators))
    return QubitHamiltonian(params.n_qubits, merge_terms(terms), label="hubbard_h0")


def build_hubbard_h1(params: HubbardParams) -> QubitHamiltonian:
    """Interacting quench target.

    H1 = -tau1 * hopping + U * sum_j n_{j,up} n_{j,down} - mu * sum_{j,s} n_{j,s}.
    Terms are merged in construction order: hopping (bond ascending, up
    then down, X then Y string), interaction, chemical potential.
    """
    L = params.sites
    n_qubits = params.n_qubits
    terms: list[PauliTerm] = []
    for j in range(L - 1):
        for spin in (0, 1):
            for t in jordan_wigner_hopping(j, j + 1, L, spin):
                terms.append(PauliTerm(-params.tau1 * t.coefficient, t.operators))
    ident = "I" * n_qubits
    for j in range(L):
        zu = _string_with(n_qubits, [(j, "Z")])
        zd = _string_with(n_qubits, [(L + j, "Z")])
        zz = _string_with(n_qubits, [(j, "Z"), (L + j, "Z")])
        # n_up n_down = (I - Z_u - Z_d + Z_u Z_d)/4
        terms.append(PauliTerm(params.u / 4.0, ident))
        terms.append(PauliTerm(-params.u / 4.0, zu))
        terms.append(PauliTerm(-params.u / 4.0, zd))
        terms.append(PauliTerm(params.u / 4.0, zz))
    for q in range(n_qubits):
        terms.append(PauliTerm(-params.mu / 2.0, ident))
        terms.append(PauliTerm(params.mu / 2.0, _string_with(n_qubits, [(q, "Z")])))
    return QubitHamiltonian(n_qubits, merge_terms(terms), label="hubbard_h1")


def build_xxz(params: XXZParams) -> QubitHamiltonian:
    """H = -sum_j (X_j X_{j+1} + Y_j Y_{j+1}) + U sum_j Z_j Z_{j+1} + h sum_j Z_j."""
    L = params.sites
    terms: list[PauliTerm] = []
    for j in range(L - 1):
        terms.append(PauliTerm(-1.0, _string_with(L, [(j, "X"), (j + 1, "X")])))
        terms.append(PauliTerm(-1.0, _string_with(L, [(j, "Y"), (j + 1, "Y")])))
    for j in range(L - 1):
        terms.append(PauliTerm(params.u, _string_with(L, [(j, "Z"), (j + 1, "Z")])))
    for j in range(L):
        terms.append(PauliTerm(params.h, _string_with(L, [(j, "Z")])))
    return QubitHamiltonian(L, merge_terms(terms), label="xxz")
