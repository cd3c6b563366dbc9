import numpy as np
import pytest

from ustatlab import kernels, processes, projections
from ustatlab.config import build_config


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def normal():
    return processes.make_process("iid_normal")


@pytest.fixture(scope="session")
def uniform():
    return processes.make_process("iid_uniform")


@pytest.fixture(scope="session")
def ar1():
    return processes.make_process("ar1_gaussian", phi=0.5, sigma_eps=1.0)


@pytest.fixture(scope="session")
def normal_catalog(normal):
    """Catalog kernels centred under N(0, 1)."""
    return {name: kernels.center(k, normal) for name, k in kernels.builtin_catalog(normal).items()}


@pytest.fixture(scope="session")
def normal_analytic_ref(normal):
    return projections.analytic_reference(normal, n_ref=20_000, seed=3)


@pytest.fixture(scope="session")
def normal_true_ref(normal):
    return projections.true_xi_reference(normal, n_ref=20_000, seed=3)


@pytest.fixture
def small_config(tmp_path):
    """Builds a fast configuration writing into tmp_path."""
    def make(**overrides):
        values = dict(
            kernel="mean",
            process="iid_normal",
            n_grid=[20, 50],
            reps=200,
            seed=7,
            oracle_size=10_000,
            mc_size=10_000,
            probe_size=1000,
            out_dir=str(tmp_path / "out"),
        )
        values.update(overrides)
        return build_config(values)
    return make
