"""Quench dynamics of small fermion and spin chains with DMD extrapolation.

The package simulates Hubbard and XXZ chains on a statevector engine
(Jordan-Wigner encoding, first-order Trotter product formula), records
observable trajectories, fits dynamic mode decomposition models with
time-delay embedding, and extrapolates the observables beyond the
simulated window together with analytic error bounds.
"""

from qdmd.lattice import (
    HubbardParams,
    PauliTerm,
    QubitHamiltonian,
    XXZParams,
    build_hubbard_h0,
    build_hubbard_h1,
    build_xxz,
    frobenius_norm,
)
from qdmd.engine import (
    StateVector,
    TrotterPlan,
    apply_pauli_exponential,
    exact_evolve,
    expectation,
    prepare_domain_wall,
    prepare_hubbard_ground_state,
    trotter_step,
    trotter_step_count_bound,
)
from qdmd.observables import (
    ObservableSet,
    SnapshotSeries,
    density_matrix_observables,
    momentum_occupation,
    zz_pair_observables,
)
from qdmd.dmd import DMDModel, RankPolicy, fit_dmd, predict_dmd
from qdmd.ihodmd import EmbeddingParams, IHODMDModel, fit_ihodmd, predict_ihodmd
from qdmd.analysis import (
    BoundInputs,
    ErrorCurve,
    global_bound,
    local_bound,
    t32_envelope_check,
)

__version__ = "0.1.0"

__all__ = [
    "BoundInputs",
    "DMDModel",
    "EmbeddingParams",
    "ErrorCurve",
    "HubbardParams",
    "IHODMDModel",
    "ObservableSet",
    "PauliTerm",
    "QubitHamiltonian",
    "RankPolicy",
    "SnapshotSeries",
    "StateVector",
    "TrotterPlan",
    "XXZParams",
    "apply_pauli_exponential",
    "build_hubbard_h0",
    "build_hubbard_h1",
    "build_xxz",
    "density_matrix_observables",
    "exact_evolve",
    "expectation",
    "fit_dmd",
    "fit_ihodmd",
    "frobenius_norm",
    "global_bound",
    "local_bound",
    "momentum_occupation",
    "predict_dmd",
    "predict_ihodmd",
    "prepare_domain_wall",
    "prepare_hubbard_ground_state",
    "t32_envelope_check",
    "trotter_step",
    "trotter_step_count_bound",
    "zz_pair_observables",
    "__version__",
]
