import numpy as np
import pytest

from snapctrl import data_model, oracle, reduction


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_instance(seed, n=5, s=3, m=2, radius=0.8, input_scale=1.0, steps=4, runs=2):
    """Invariant-subspace oracle instance plus basis and reduced model."""
    rng = np.random.default_rng(seed)
    sys_true, record, subspace = oracle.random_invariant_instance(
        n, s, m, rng, radius=radius, steps=steps, runs=runs, input_scale=input_scale
    )
    basis = data_model.select_basis(record, 1e-9)
    model = reduction.build_reduced_model(record, basis)
    return sys_true, record, basis, model, subspace
