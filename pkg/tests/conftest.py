import numpy as np
import pytest

from aatransport.accel import AccelConfig
from aatransport.flux import NoiseModel
from aatransport.problem import ExperimentConfig, ProblemConfig


def make_config(r=2.0, beta=0.3, m=0, d=0, tol=1e-11, k_max=300,
                noise_amplitude=None, noise_seed=0, **problem_kwargs):
    """One-stop experiment config for tests."""
    noise = None
    if noise_amplitude is not None:
        noise = NoiseModel(amplitude=noise_amplitude, seed=noise_seed)
    return ExperimentConfig(
        problem=ProblemConfig(r=r, **problem_kwargs),
        accel=AccelConfig(m_max=m, beta=beta, delay=d, tol=tol, k_max=k_max),
        noise=noise,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
