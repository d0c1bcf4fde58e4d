"""Experiment configuration: TOML parsing and validation."""

from __future__ import annotations

from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from qdmd.ihodmd import EmbeddingParams, minimal_fit_window


class ConfigError(Exception):
    """Invalid or inconsistent experiment configuration."""


QUBIT_LIMIT = 24


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    sites: int
    u: float
    tau0: float = 1.0
    tau1: float = 0.1
    mu: float = 2.0
    h: float = 0.1

    @property
    def n_qubits(self) -> int:
        return 2 * self.sites if self.kind == "hubbard" else self.sites


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 0.01
    steps: int = 1000


@dataclass(frozen=True)
class ObservablesConfig:
    kind: str
    momentum_indices: tuple[int, ...] = ()
    shots: int = 0
    seed: int = 0


@dataclass(frozen=True)
class FitConfig:
    window: int
    n_s: int
    n_g: int
    tau: int
    rank_policy: str = "threshold"
    threshold: float = 1e-10
    rank: int = 0
    mode: str = "per_row"
    amplitudes: str = "pinv"
    stabilize: str = "none"
    readout: str = "first"
    rows: tuple[str, ...] = ()

    @property
    def embedding(self) -> EmbeddingParams:
        return EmbeddingParams(self.n_s, self.n_g, self.tau)


@dataclass(frozen=True)
class ReportConfig:
    rows: tuple[str, ...] = ()
    t_min: float = 0.0


@dataclass(frozen=True)
class SweepConfig:
    m_values: tuple[int, ...] = ()
    rows: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelConfig
    evolution: EvolutionConfig
    observables: ObservablesConfig
    fit: FitConfig
    report: ReportConfig
    sweep: SweepConfig
    raw: dict = field(default_factory=dict, compare=False)


def _section(data: dict, name: str) -> dict:
    sec = data.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return dict(sec)


def _take(sec: dict, key: str, default=None, required: bool = False):
    if key in sec:
        return sec.pop(key)
    if required:
        raise ConfigError(f"missing required key {key!r}")
    return default


def _reject_leftovers(sec: dict, name: str) -> None:
    if sec:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(sec)}")


def parse_config(data: dict) -> ExperimentConfig:
    raw = {k: dict(v) if isinstance(v, dict) else v for k, v in data.items()}
    known = {"model", "evolution", "observables", "fit", "report", "sweep"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    sec = _section(data, "model")
    kind = _take(sec, "kind", required=True)
    if kind not in ("hubbard", "xxz"):
        raise ConfigError(f"model.kind must be 'hubbard' or 'xxz', got {kind!r}")
    sites = int(_take(sec, "sites", required=True))
    model = ModelConfig(
        kind=kind,
        sites=sites,
        u=float(_take(sec, "u", 4.0)),
        tau0=float(_take(sec, "tau0", 1.0)),
        tau1=float(_take(sec, "tau1", 0.1)),
        mu=float(_take(sec, "mu", 2.0)),
        h=float(_take(sec, "h", 0.1)),
    )
    _reject_leftovers(sec, "model")
    if model.kind == "hubbard" and sites % 2:
        raise ConfigError("hubbard at half filling needs an even site count")
    if sites < 2:
        raise ConfigError("need at least two sites")

    sec = _section(data, "evolution")
    evolution = EvolutionConfig(
        dt=float(_take(sec, "dt", 0.01)),
        steps=int(_take(sec, "steps", 1000)),
    )
    _reject_leftovers(sec, "evolution")
    if evolution.dt <= 0:
        raise ConfigError("evolution.dt must be positive")
    if evolution.steps < 0:
        raise ConfigError("evolution.steps must be nonnegative")

    sec = _section(data, "observables")
    default_obs = "density_matrix" if model.kind == "hubbard" else "zz_pairs"
    obs_kind = _take(sec, "kind", default_obs)
    if obs_kind not in ("density_matrix", "zz_pairs"):
        raise ConfigError(f"unknown observable set {obs_kind!r}")
    if obs_kind == "density_matrix" and model.kind != "hubbard":
        raise ConfigError("density_matrix observables require the hubbard model")
    default_momenta = tuple(range(sites)) if obs_kind == "density_matrix" else ()
    momenta = _take(sec, "momentum_indices", None)
    momenta = default_momenta if momenta is None else tuple(int(j) for j in momenta)
    observables = ObservablesConfig(
        kind=obs_kind,
        momentum_indices=momenta,
        shots=int(_take(sec, "shots", 0)),
        seed=int(_take(sec, "seed", 0)),
    )
    _reject_leftovers(sec, "observables")
    if observables.shots < 0:
        raise ConfigError("observables.shots must be nonnegative")
    if any(not 0 <= j < sites for j in observables.momentum_indices):
        raise ConfigError("momentum indices must lie in 0..sites-1")
    if observables.momentum_indices and obs_kind != "density_matrix":
        raise ConfigError("momentum rows require density_matrix observables")

    sec = _section(data, "fit")
    default_rows = ("rho_*",) if obs_kind == "density_matrix" else ("zz_*",)
    rows = _take(sec, "rows", None)
    fit = FitConfig(
        window=int(_take(sec, "window", required=True)),
        n_s=int(_take(sec, "n_s", required=True)),
        n_g=int(_take(sec, "n_g", required=True)),
        tau=int(_take(sec, "tau", required=True)),
        rank_policy=_take(sec, "rank_policy", "threshold"),
        threshold=float(_take(sec, "threshold", 1e-10)),
        rank=int(_take(sec, "rank", 0)),
        mode=_take(sec, "mode", "per_row"),
        amplitudes=_take(sec, "amplitudes", "pinv"),
        stabilize=_take(sec, "stabilize", "none"),
        readout=_take(sec, "readout", "first"),
        rows=default_rows if rows is None else tuple(rows),
    )
    _reject_leftovers(sec, "fit")
    if fit.rank_policy not in ("threshold", "fixed"):
        raise ConfigError("fit.rank_policy must be 'threshold' or 'fixed'")
    if fit.rank_policy == "fixed" and fit.rank < 1:
        raise ConfigError("fixed rank policy needs fit.rank >= 1")
    if fit.mode not in ("per_row", "joint"):
        raise ConfigError("fit.mode must be 'per_row' or 'joint'")
    if fit.amplitudes not in ("pinv", "adjoint"):
        raise ConfigError("fit.amplitudes must be 'pinv' or 'adjoint'")
    if fit.stabilize not in ("none", "unit_circle"):
        raise ConfigError("fit.stabilize must be 'none' or 'unit_circle'")
    if fit.readout not in ("first", "average"):
        raise ConfigError("fit.readout must be 'first' or 'average'")
    if min(fit.n_s, fit.n_g, fit.tau) < 1:
        raise ConfigError("embedding parameters must be >= 1")
    if fit.window > evolution.steps + 1:
        raise ConfigError(
            f"fit.window {fit.window} exceeds the {evolution.steps + 1} snapshots"
        )
    if fit.window < minimal_fit_window(fit.embedding):
        raise ConfigError(
            f"fit.window {fit.window} is below the minimal feasible window "
            f"n_s + tau = {minimal_fit_window(fit.embedding)}"
        )

    sec = _section(data, "report")
    default_report = (
        (f"n_k_{observables.momentum_indices[0]}",)
        if observables.momentum_indices
        else ()
    )
    rep_rows = _take(sec, "rows", None)
    report = ReportConfig(
        rows=default_report if rep_rows is None else tuple(rep_rows),
        t_min=float(_take(sec, "t_min", 0.0)),
    )
    _reject_leftovers(sec, "report")

    sec = _section(data, "sweep")
    sweep = SweepConfig(
        m_values=tuple(int(m) for m in _take(sec, "m_values", ())),
        rows=tuple(_take(sec, "rows", report.rows)),
    )
    _reject_leftovers(sec, "sweep")

    if model.n_qubits > QUBIT_LIMIT:
        need = 2**model.n_qubits * 16
        raise ConfigError(
            f"{model.n_qubits} qubits exceeds the {QUBIT_LIMIT}-qubit statevector "
            f"guard (the amplitude vector alone would take {need / 2**30:.1f} GiB)"
        )

    return ExperimentConfig(
        model=model,
        evolution=evolution,
        observables=observables,
        fit=fit,
        report=report,
        sweep=sweep,
        raw=raw,
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error in {path}: {exc}") from exc
    return parse_config(data)
