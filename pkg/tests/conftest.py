"""Session fixtures that run the shipped experiment configs once.

Each trajectory is simulated a single time and shared between the
extrapolation, sweep, and bound-report fixtures, so the suite pays for
every statevector evolution exactly once.  The sweep configs reuse the
trajectory of their quench partner; they declare identical model,
evolution, and observable sections, which the harness tests assert.
"""

from pathlib import Path

import pytest

from qdmd import runner
from qdmd.config import load_config

EXPERIMENTS = Path(__file__).resolve().parent.parent / "experiments"


def experiment_config(name):
    """Load one of the shipped experiment files by stem name."""
    return load_config(EXPERIMENTS / (name + ".toml"))


def _simulate(tmp_path_factory, name):
    cfg = experiment_config(name)
    out = tmp_path_factory.mktemp("sim_" + name)
    runner.run_simulate(cfg, out)
    return cfg, out / "trajectory.csv"


def _extrapolate(tmp_path_factory, sim, name):
    cfg, trajectory = sim
    out = tmp_path_factory.mktemp("fit_" + name)
    summary = runner.run_extrapolate(cfg, out, trajectory_path=trajectory)
    return summary, out


@pytest.fixture(scope="session")
def hubbard_u4_sim(tmp_path_factory):
    return _simulate(tmp_path_factory, "hubbard_u4_quench")


@pytest.fixture(scope="session")
def hubbard_u8_sim(tmp_path_factory):
    return _simulate(tmp_path_factory, "hubbard_u8_quench")


@pytest.fixture(scope="session")
def xxz_l6_sim(tmp_path_factory):
    return _simulate(tmp_path_factory, "xxz_l6")


@pytest.fixture(scope="session")
def xxz_l12_sim(tmp_path_factory):
    return _simulate(tmp_path_factory, "xxz_l12")


@pytest.fixture(scope="session")
def hubbard_u4_extrapolation(tmp_path_factory, hubbard_u4_sim):
    return _extrapolate(tmp_path_factory, hubbard_u4_sim, "hubbard_u4")


@pytest.fixture(scope="session")
def hubbard_u8_extrapolation(tmp_path_factory, hubbard_u8_sim):
    return _extrapolate(tmp_path_factory, hubbard_u8_sim, "hubbard_u8")


@pytest.fixture(scope="session")
def xxz_l6_extrapolation(tmp_path_factory, xxz_l6_sim):
    return _extrapolate(tmp_path_factory, xxz_l6_sim, "xxz_l6")


@pytest.fixture(scope="session")
def xxz_l12_extrapolation(tmp_path_factory, xxz_l12_sim):
    return _extrapolate(tmp_path_factory, xxz_l12_sim, "xxz_l12")


@pytest.fixture(scope="session")
def hubbard_sweep(tmp_path_factory, hubbard_u4_sim):
    cfg = experiment_config("hubbard_u4_sweep")
    out = tmp_path_factory.mktemp("sweep_hubbard_u4")
    return runner.run_sweep(cfg, out, trajectory_path=hubbard_u4_sim[1])


@pytest.fixture(scope="session")
def xxz_l6_sweep(tmp_path_factory, xxz_l6_sim):
    cfg = experiment_config("xxz_l6_sweep")
    out = tmp_path_factory.mktemp("sweep_xxz_l6")
    return runner.run_sweep(cfg, out, trajectory_path=xxz_l6_sim[1])


@pytest.fixture(scope="session")
def xxz_l12_sweep(tmp_path_factory, xxz_l12_sim):
    cfg = experiment_config("xxz_l12_sweep")
    out = tmp_path_factory.mktemp("sweep_xxz_l12")
    return runner.run_sweep(cfg, out, trajectory_path=xxz_l12_sim[1])


@pytest.fixture(scope="session")
def bound_reports(
    tmp_path_factory, hubbard_u4_sim, hubbard_u8_sim, xxz_l6_sim, xxz_l12_sim
):
    sims = {
        "hubbard_u4": hubbard_u4_sim,
        "hubbard_u8": hubbard_u8_sim,
        "xxz_l6": xxz_l6_sim,
        "xxz_l12": xxz_l12_sim,
    }
    payloads = {}
    for name, (cfg, trajectory) in sims.items():
        out = tmp_path_factory.mktemp("bound_" + name)
        payloads[name] = runner.run_bound_report(cfg, out, trajectory_path=trajectory)
    return payloads
