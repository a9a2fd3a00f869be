import numpy as np
import pytest

from graphdp import CovarianceModel, Diffusion, ar1_covariance, generate_erdos_renyi


@pytest.fixture(scope="session")
def er7():
    """7-vertex ER graph, T = 20, diffusion c = 0.01, AR(1) rho = 0.5, sigma = 1."""
    g = generate_erdos_renyi(7, 0.5, 1)
    M = np.random.Generator(np.random.PCG64(7)).standard_normal((7, 20))
    cov = CovarianceModel.kron_temporal(ar1_covariance(20, 1.0, 0.5), 7)
    return {"g": g, "spec": Diffusion(0.01), "M": M, "cov": cov, "T": 20}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
