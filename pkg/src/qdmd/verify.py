"""Self-contained property suite runnable from the command line.

Each check is a plain function returning a CheckResult; `run_all` collects
them into a machine-readable report. The negative-control mode flips one
sign inside the fermion-encoding comparison on purpose and succeeds only
if the oracle catches the mutation, which guards the oracle itself
against silent weakening.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qdmd.analysis import commutator_frobenius_check, lemma_a_check
from qdmd.dmd import RankPolicy, build_data_matrices, fit_dmd, predict_dmd
from qdmd.engine import (
    TrotterPlan,
    evolve_and_record,
    exact_evolve,
    prepare_domain_wall,
    prepare_hubbard_ground_state,
    trotter_step,
)
from qdmd.ihodmd import EmbeddingParams, build_delay_matrices, fit_ihodmd
from qdmd.lattice import (
    HubbardParams,
    PauliTerm,
    QubitHamiltonian,
    XXZParams,
    build_hubbard_h1,
    build_xxz,
    dense_matrix,
    frobenius_norm,
    jordan_wigner_hopping,
    jordan_wigner_number,
)
from qdmd.observables import (
    SnapshotSeries,
    measure_snapshot,
    total_number_observable,
    total_z_observable,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)


def _dense_ladder(mode: int, n_modes: int) -> np.ndarray:
    """Annihilation operator with Z parity string, little-endian kron order."""
    lower = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=np.complex128)
    z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
    eye = np.eye(2, dtype=np.complex128)
    out = np.array([[1.0 + 0.0j]])
    for k in range(n_modes):
        if k < mode:
            factor = z
        elif k == mode:
            factor = lower
        else:
            factor = eye
        out = np.kron(factor, out)
    return out


def check_jw_dense_oracle(mutate_sign: bool = False) -> CheckResult:
    """Encoded hopping and number operators vs dense fermionic algebra.

    All pairs and both spin blocks at 2, 3, and 4 sites. With mutate_sign
    the Y-string coefficient is flipped, which must be detected.
    """
    worst = 0.0
    for sites in (2, 3, 4):
        n_modes = 2 * sites
        for spin in (0, 1):
            off = spin * sites
            for p in range(sites):
                for q in range(p + 1, sites):
                    terms = jordan_wigner_hopping(p, q, sites, spin)
                    if mutate_sign:
                        terms = [
                            terms[0],
                            PauliTerm(-terms[1].coefficient, terms[1].operators),
                        ]
                    encoded = dense_matrix(QubitHamiltonian(n_modes, terms))
                    cp = _dense_ladder(off + p, n_modes)
                    cq = _dense_ladder(off + q, n_modes)
                    target = cp.conj().T @ cq + cq.conj().T @ cp
                    worst = max(worst, float(np.max(np.abs(encoded - target))))
            for j in range(sites):
                terms = jordan_wigner_number(j, sites, spin)
                encoded = dense_matrix(QubitHamiltonian(n_modes, terms))
                cj = _dense_ladder(off + j, n_modes)
                target = cj.conj().T @ cj
                worst = max(worst, float(np.max(np.abs(encoded - target))))
    return CheckResult(
        "jw_dense_oracle", worst <= 1e-12, {"max_abs_deviation": worst}
    )


def check_norm_and_number_conservation() -> CheckResult:
    """1000 interacting-quench steps: unit norm and constant particle count."""
    params = HubbardParams(sites=2, tau0=1.0, tau1=0.1, u=4.0, mu=2.0)
    ground = prepare_hubbard_ground_state(params)
    plan = TrotterPlan(build_hubbard_h1(params), dt=0.01)
    obs = total_number_observable(params.sites)
    state = ground.state
    norm_drift = 0.0
    numbers = [measure_snapshot(state, obs)[0]]
    for _ in range(1000):
        state = trotter_step(state, plan)
        norm_drift = max(norm_drift, abs(state.norm() - 1.0))
        numbers.append(measure_snapshot(state, obs)[0])
    number_drift = float(np.max(np.abs(np.array(numbers) - params.sites)))
    passed = norm_drift <= 1e-10 and number_drift <= 1e-10
    return CheckResult(
        "norm_and_number_conservation",
        passed,
        {"norm_drift": norm_drift, "number_drift": number_drift},
    )


def check_magnetization_conservation() -> CheckResult:
    """1000 spin-chain steps from the domain wall: total Z constant."""
    sites = 4
    plan = TrotterPlan(build_xxz(XXZParams(sites, u=4.0, h=0.1)), dt=0.01)
    obs = total_z_observable(sites)
    _, values = evolve_and_record(
        prepare_domain_wall(sites), plan, 1000,
        lambda st: measure_snapshot(st, obs),
    )
    drift = float(np.max(np.abs(values[0] - values[0, 0])))
    return CheckResult("magnetization_conservation", drift <= 1e-10, {"drift": drift})


def check_frobenius_identity(seed: int = 7) -> CheckResult:
    """Coefficient-space Frobenius norm vs the dense matrix norm."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n_qubits in (2, 4, 6):
        strings = set()
        while len(strings) < 12:
            strings.add("".join(rng.choice(list("IXYZ"), size=n_qubits)))
        terms = [PauliTerm(float(rng.normal()), s) for s in sorted(strings)]
        ham = QubitHamiltonian(n_qubits, terms)
        dense = float(np.linalg.norm(dense_matrix(ham), ord="fro"))
        fast = frobenius_norm(ham)
        worst = max(worst, abs(dense - fast) / dense)
    ham = build_hubbard_h1(HubbardParams(sites=2))
    dense = float(np.linalg.norm(dense_matrix(ham), ord="fro"))
    worst = max(worst, abs(dense - frobenius_norm(ham)) / dense)
    return CheckResult("frobenius_identity", worst <= 1e-10, {"max_rel": worst})


def check_heisenberg_norm_constancy(seed: int = 11) -> CheckResult:
    """||e^{iHt} O e^{-iHt}||_F equals ||O||_F (so ||O||_F is measured once)."""
    rng = np.random.default_rng(seed)
    dim = 2**6
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = (h + h.conj().T) / 2
    o = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    evals, evecs = np.linalg.eigh(h)
    worst = 0.0
    base = np.linalg.norm(o, ord="fro")
    for t in (0.3, 0.7, 2.0):
        u = evecs @ (np.exp(1j * evals * t)[:, None] * evecs.conj().T)
        rotated = u @ o @ u.conj().T
        worst = max(worst, float(abs(np.linalg.norm(rotated, ord="fro") - base) / base))
    return CheckResult("heisenberg_norm_constancy", worst <= 1e-10, {"max_rel": worst})


def check_lemma_a(seed: int = 3, draws: int = 1000, dim: int = 16) -> CheckResult:
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(draws):
        o = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        psi /= np.linalg.norm(psi)
        _, _, _, ok = lemma_a_check(o, psi)
        failures += not ok
    return CheckResult("lemma_a", failures == 0, {"failures": failures, "draws": draws})


def check_commutator_frobenius(seed: int = 5, draws: int = 1000, dim: int = 16) -> CheckResult:
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(draws):
        a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        b = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        failures += not commutator_frobenius_check(a, b)
    return CheckResult(
        "commutator_frobenius", failures == 0, {"failures": failures, "draws": draws}
    )


def check_delay_index_oracle(seed: int = 13, draws: int = 100) -> CheckResult:
    """Vectorized delay matrices vs an index-by-index reference."""
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(draws):
        n_s = int(rng.integers(1, 12))
        n_g = int(rng.integers(1, 6))
        tau = int(rng.integers(1, 6))
        params = EmbeddingParams(n_s, n_g, tau)
        m = int(rng.integers(n_s + tau, n_s + tau + 60))
        row = rng.normal(size=m)
        x1, x2 = build_delay_matrices(row, params, m)
        n_l = (m - n_s - tau) // n_g + 1
        ref1 = np.empty((n_s, n_l))
        ref2 = np.empty((n_s, n_l))
        for i in range(n_s):
            for l in range(n_l):
                ref1[i, l] = row[l * n_g + i]
                ref2[i, l] = row[l * n_g + i + tau]
        if not (np.array_equal(x1, ref1) and np.array_equal(x2, ref2)):
            mismatches += 1
    return CheckResult(
        "delay_index_oracle", mismatches == 0, {"mismatches": mismatches, "draws": draws}
    )


def check_dmd_exactness(seed: int = 17) -> CheckResult:
    """Noiseless linear system: spectrum and 2x-horizon prediction recovered."""
    rng = np.random.default_rng(seed)
    n = 8
    angles = (0.3, 0.7)
    blocks = np.zeros((n, n))
    for k, ang in enumerate(angles):
        c, s = np.cos(ang), np.sin(ang)
        blocks[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = [[c, -s], [s, c]]
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    a = q @ blocks @ q.T
    x = np.empty((n, 50))
    x[:, 0] = q[:, :4] @ rng.normal(size=4)
    for k in range(1, 50):
        x[:, k] = a @ x[:, k - 1]
    dt = 0.1
    x1, x2 = build_data_matrices(x, 50)
    model = fit_dmd(x1, x2, dt, RankPolicy(kind="fixed", rank=4))
    expected = np.exp(1j * np.array([-0.7, -0.3, 0.3, 0.7]))
    got = model.eigenvalues[np.argsort(np.angle(model.eigenvalues))]
    expected = expected[np.argsort(np.angle(expected))]
    eig_err = float(np.max(np.abs(got - expected)))
    times = np.arange(100) * dt
    pred = predict_dmd(model, times).real
    full = np.empty((n, 100))
    full[:, 0] = x[:, 0]
    for k in range(1, 100):
        full[:, k] = a @ full[:, k - 1]
    rel = float(
        np.linalg.norm(pred - full) / np.linalg.norm(full)
    )
    passed = eig_err <= 1e-8 and rel <= 1e-6
    return CheckResult(
        "dmd_exactness", passed, {"eigenvalue_error": eig_err, "relative_prediction": rel}
    )


def check_ihodmd_reduction(seed: int = 19) -> CheckResult:
    """Order-1 embedding with unit stride and shift equals plain DMD."""
    rng = np.random.default_rng(seed)
    m = 60
    t = np.arange(m) * 0.05
    row = np.sin(1.3 * t) + 0.4 * np.cos(2.1 * t) + 0.01 * rng.normal(size=m)
    series = SnapshotSeries(("row",), t, row[None, :])
    model = fit_ihodmd(series, m, EmbeddingParams(1, 1, 1))
    std = (row - row.mean()) / row.std()
    x1, x2 = build_data_matrices(std[None, :], m)
    scalar = fit_dmd(x1, x2, 0.05)
    lam_a = np.sort_complex(model.row_models[0].eigenvalues)
    lam_b = np.sort_complex(scalar.eigenvalues)
    if lam_a.shape != lam_b.shape:
        return CheckResult("ihodmd_reduction", False, {"ranks": (lam_a.size, lam_b.size)})
    diff = float(np.max(np.abs(lam_a - lam_b)))
    return CheckResult("ihodmd_reduction", diff <= 1e-12, {"max_abs": diff})


def check_trotter_convergence() -> CheckResult:
    """Global state error halves with the step size (first-order formula)."""
    params = HubbardParams(sites=2)
    ground = prepare_hubbard_ground_state(params)
    ham = build_hubbard_h1(params)
    exact = exact_evolve(ground.state, ham, 1.0)
    errs = []
    for dt in (0.01, 0.005):
        state = ground.state
        plan = TrotterPlan(ham, dt)
        for _ in range(round(1.0 / dt)):
            state = trotter_step(state, plan)
        errs.append(float(np.linalg.norm(state.amplitudes - exact.amplitudes)))
    ratio = errs[0] / errs[1]
    return CheckResult(
        "trotter_convergence",
        1.6 <= ratio <= 2.4,
        {"error_dt": errs[0], "error_half_dt": errs[1], "ratio": ratio},
    )


ALL_CHECKS = (
    check_jw_dense_oracle,
    check_norm_and_number_conservation,
    check_magnetization_conservation,
    check_frobenius_identity,
    check_heisenberg_norm_constancy,
    check_lemma_a,
    check_commutator_frobenius,
    check_delay_index_oracle,
    check_dmd_exactness,
    check_ihodmd_reduction,
    check_trotter_convergence,
)


def run_all() -> list[CheckResult]:
    return [check() for check in ALL_CHECKS]


def run_negative_control() -> CheckResult:
    """The mutated encoding must fail the dense oracle."""
    mutated = check_jw_dense_oracle(mutate_sign=True)
    caught = not mutated.passed
    return CheckResult(
        "negative_control_jw_sign",
        caught,
        {"mutated_oracle_deviation": mutated.details["max_abs_deviation"]},
    )


def report_to_dict(results: list[CheckResult], mode: str) -> dict:
    return {
        "mode": mode,
        "all_passed": all(r.passed for r in results),
        "checks": [
            {"name": r.name, "passed": r.passed, "details": r.details}
            for r in results
        ],
    }
