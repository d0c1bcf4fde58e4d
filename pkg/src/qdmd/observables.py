"""Observable sets, trajectory recording, and snapshot-series utilities.

Every observable row is a Hermitian Pauli sum with real coefficients, so
a snapshot is a real vector. A complex quantity such as an off-diagonal
density-matrix element contributes two rows, labeled `<name>.re` and
`<name>.im`, which is also the CSV column contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from qdmd.engine import StateVector, TrotterPlan, evolve_and_record, pauli_expectation
from qdmd.lattice import PauliTerm, QubitHamiltonian, frobenius_norm, merge_terms

STD_FLOOR = 1e-12


@dataclass
class SnapshotSeries:
    """Real observable rows sampled on a uniform time grid."""

    labels: tuple[str, ...]
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.labels), self.times.size):
            raise ValueError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.labels)} labels x {self.times.size} times"
            )
        if self.times.size > 1:
            steps = np.diff(self.times)
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
                raise ValueError("time grid is not uniform")

    @property
    def dt(self) -> float:
        if self.times.size < 2:
            raise ValueError("grid spacing undefined for a single snapshot")
        return float(self.times[1] - self.times[0])

    def row(self, label: str) -> np.ndarray:
        return self.values[self.labels.index(label)]


@dataclass
class ObservableSet:
    """Named Hermitian Pauli sums measured together along a trajectory."""

    n_qubits: int
    labels: tuple[str, ...]
    rows: tuple[tuple[PauliTerm, ...], ...]

    def __post_init__(self):
        if len(self.labels) != len(self.rows):
            raise ValueError("labels and rows differ in length")
        for terms in self.rows:
            for t in terms:
                if t.n_qubits != self.n_qubits:
                    raise ValueError("row term size does not match the register")

    def as_hamiltonian(self, label: str) -> QubitHamiltonian:
        return QubitHamiltonian(
            self.n_qubits, list(self.rows[self.labels.index(label)]), label
        )


def _string_with(n_qubits: int, assignments) -> str:
    chars = ["I"] * n_qubits
    for pos, ch in assignments:
        chars[pos] = ch
    return "".join(chars)


def density_matrix_observables(sites: int) -> ObservableSet:
    """Single-particle density matrix rows for the spin-up block.

    Diagonal entries <n_p> are single real rows `rho_p_p`; off-diagonal
    entries <c_p^dag c_q> (p < q) split into `rho_p_q.re` with operator
    (X Z..Z X + Y Z..Z Y)/4 and `rho_p_q.im` with (X Z..Z Y - Y Z..Z X)/4.
    Row order: all diagonals, then all real parts, then all imaginary
    parts, pairs in lexicographic order.
    """
    n_qubits = 2 * sites
    labels: list[str] = []
    rows: list[tuple[PauliTerm, ...]] = []
    ident = "I" * n_qubits
    for p in range(sites):
        labels.append(f"rho_{p}_{p}")
        rows.append(
            (
                PauliTerm(0.5, ident),
                PauliTerm(-0.5, _string_with(n_qubits, [(p, "Z")])),
            )
        )
    pairs = [(p, q) for p in range(sites) for q in range(p + 1, sites)]
    for p, q in pairs:
        zs = [(j, "Z") for j in range(p + 1, q)]
        labels.append(f"rho_{p}_{q}.re")
        rows.append(
            (
                PauliTerm(0.25, _string_with(n_qubits, [(p, "X"), (q, "X")] + zs)),
                PauliTerm(0.25, _string_with(n_qubits, [(p, "Y"), (q, "Y")] + zs)),
            )
        )
    for p, q in pairs:
        zs = [(j, "Z") for j in range(p + 1, q)]
        labels.append(f"rho_{p}_{q}.im")
        rows.append(
            (
                PauliTerm(0.25, _string_with(n_qubits, [(p, "X"), (q, "Y")] + zs)),
                PauliTerm(-0.25, _string_with(n_qubits, [(p, "Y"), (q, "X")] + zs)),
            )
        )
    return ObservableSet(n_qubits, tuple(labels), tuple(rows))


def zz_pair_observables(sites: int) -> ObservableSet:
    """<Z_p Z_q> for every pair p < q, in the +-1 Pauli normalization."""
    labels = []
    rows = []
    for p in range(sites):
        for q in range(p + 1, sites):
            labels.append(f"zz_{p}_{q}")
            rows.append(
                (PauliTerm(1.0, _string_with(sites, [(p, "Z"), (q, "Z")])),)
            )
    return ObservableSet(sites, tuple(labels), tuple(rows))


def total_number_observable(sites: int) -> ObservableSet:
    """Total particle number over both spin blocks (conservation probe)."""
    n_qubits = 2 * sites
    terms = [PauliTerm(0.5 * n_qubits, "I" * n_qubits)]
    for q in range(n_qubits):
        terms.append(PauliTerm(-0.5, _string_with(n_qubits, [(q, "Z")])))
    return ObservableSet(n_qubits, ("n_total",), (tuple(terms),))


def total_z_observable(sites: int) -> ObservableSet:
    """Total magnetization sum_j Z_j (conservation probe)."""
    terms = tuple(
        PauliTerm(1.0, _string_with(sites, [(j, "Z")])) for j in range(sites)
    )
    return ObservableSet(sites, ("z_total",), (terms,))


def concat_observables(*sets: ObservableSet) -> ObservableSet:
    n_qubits = sets[0].n_qubits
    for s in sets:
        if s.n_qubits != n_qubits:
            raise ValueError("register sizes differ")
    labels = tuple(l for s in sets for l in s.labels)
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate labels across sets")
    rows = tuple(r for s in sets for r in s.rows)
    return ObservableSet(n_qubits, labels, rows)


def measure_snapshot(state: StateVector, obs: ObservableSet) -> np.ndarray:
    """Expectation of every row; shared Pauli strings are measured once."""
    cache: dict[str, float] = {}
    out = np.empty(len(obs.rows), dtype=np.float64)
    for i, terms in enumerate(obs.rows):
        acc = 0.0
        for t in terms:
            val = cache.get(t.operators)
            if val is None:
                val = pauli_expectation(state, t.operators)
                cache[t.operators] = val
            acc += t.coefficient * val
        out[i] = acc
    return out


def record_trajectory(
    state: StateVector, plan: TrotterPlan, steps: int, obs: ObservableSet
) -> SnapshotSeries:
    times, values = evolve_and_record(
        state, plan, steps, lambda st: measure_snapshot(st, obs)
    )
    return SnapshotSeries(obs.labels, times, values)


def observable_set_frobenius(obs: ObservableSet) -> float:
    """sqrt(sum_j ||O_j||_F^2) over the rows, from coefficients alone."""
    total = 0.0
    for terms in obs.rows:
        merged = merge_terms(terms)
        total += 2.0**obs.n_qubits * sum(t.coefficient**2 for t in merged)
    return float(np.sqrt(total))


def momentum_grid(sites: int) -> np.ndarray:
    """Allowed momenta k_j = 2 pi j / L for j = 0..L-1."""
    return 2.0 * np.pi * np.arange(sites) / sites


def momentum_occupation(rho: np.ndarray, k: float) -> float:
    """n_k = (1/L) sum_pq rho_pq e^{-ik(p-q)} for a Hermitian rho."""
    rho = np.asarray(rho)
    sites = rho.shape[0]
    if rho.shape != (sites, sites):
        raise ValueError("density matrix must be square")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-8:
        raise ValueError("density matrix must be Hermitian")
    p = np.arange(sites)
    phase = np.exp(-1j * k * (p[:, None] - p[None, :]))
    return float(np.real(np.sum(rho * phase)) / sites)


def density_matrix_at(series: SnapshotSeries, sites: int, column: int) -> np.ndarray:
    """Assemble the complex L x L density matrix from the rho rows."""
    rho = np.zeros((sites, sites), dtype=np.complex128)
    for p in range(sites):
        rho[p, p] = series.row(f"rho_{p}_{p}")[column]
    for p in range(sites):
        for q in range(p + 1, sites):
            val = (
                series.row(f"rho_{p}_{q}.re")[column]
                + 1j * series.row(f"rho_{p}_{q}.im")[column]
            )
            rho[p, q] = val
            rho[q, p] = np.conj(val)
    return rho


def momentum_rows(
    labels: tuple[str, ...], values: np.ndarray, sites: int, k_indices
) -> tuple[tuple[str, ...], np.ndarray]:
    """Momentum occupations on the whole grid from density-matrix rows.

    n_k = (1/L)[sum_p rho_pp + sum_{p<q} 2(cos(k(q-p)) re - sin(k(q-p)) im)].
    Works on measured rows and on predicted rows alike.
    """
    idx = {lab: i for i, lab in enumerate(labels)}
    n_cols = values.shape[1]
    out_labels = tuple(f"n_k_{j}" for j in k_indices)
    out = np.zeros((len(out_labels), n_cols), dtype=np.float64)
    ks = momentum_grid(sites)
    for row_i, j in enumerate(k_indices):
        k = ks[j]
        total = np.zeros(n_cols)
        for p in range(sites):
            total += values[idx[f"rho_{p}_{p}"]]
        for p in range(sites):
            for q in range(p + 1, sites):
                ang = k * (q - p)
                total += 2.0 * (
                    np.cos(ang) * values[idx[f"rho_{p}_{q}.re"]]
                    - np.sin(ang) * values[idx[f"rho_{p}_{q}.im"]]
                )
        out[row_i] = total / sites
    return out_labels, out


def standardize(
    values: np.ndarray, fit_window: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-row zero-mean unit-std transform computed on the fit window.

    Uses the population std (ddof=0) over the first fit_window columns.
    Rows with std below 1e-12 are flagged as skipped and zeroed; their
    prediction is the constant mean.
    """
    if not 1 <= fit_window <= values.shape[1]:
        raise ValueError("fit window outside the series")
    window = values[:, :fit_window]
    means = window.mean(axis=1)
    stds = window.std(axis=1)
    skipped = stds < STD_FLOOR
    safe = np.where(skipped, 1.0, stds)
    standardized = (values - means[:, None]) / safe[:, None]
    standardized[skipped] = 0.0
    return standardized, means, stds, skipped


def shot_noise_inject(series: SnapshotSeries, shots: int, seed: int) -> SnapshotSeries:
    """Replace each entry by the mean of `shots` projective +-1 samples.

    Entries are clipped into [-1, 1] and treated as the expectation of a
    +-1-valued measurement with p(+1) = (1 + x)/2; the binomial draw is
    seeded for reproducibility.
    """
    if shots < 1:
        raise ValueError("shots must be positive")
    rng = np.random.default_rng(seed)
    p = (1.0 + np.clip(series.values, -1.0, 1.0)) / 2.0
    counts = rng.binomial(shots, p)
    noisy = 2.0 * counts / shots - 1.0
    return SnapshotSeries(series.labels, series.times.copy(), noisy)


def write_series_csv(path, series: SnapshotSeries) -> None:
    """CSV with header `t,<label>,...`; floats use shortest round-trip form."""
    with open(path, "w", newline="") as fh:
        fh.write("t," + ",".join(series.labels) + "\n")
        for col in range(series.times.size):
            cells = [repr(float(series.times[col]))]
            cells.extend(repr(float(v)) for v in series.values[:, col])
            fh.write(",".join(cells) + "\n")


def read_series_csv(path) -> SnapshotSeries:
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip().split(",")
        if header[:1] != ["t"]:
            raise ValueError("first column must be t")
        labels = tuple(header[1:])
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return SnapshotSeries(labels, data[:, 0], data[:, 1:].T)
