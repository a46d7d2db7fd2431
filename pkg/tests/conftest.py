import math

import pytest

from pmburgers import ModelParams

SEVEN_PI = 7 * math.pi
THREE_HALF_PI = 3.5 * math.pi


def fig1_params(sigma=3.0, n_galerkin=32):
    lam_c = 2.0 * math.pi ** 2 / SEVEN_PI ** 2
    return ModelParams.with_uniform_sigma(
        nu=2.0, lam=1.7 * lam_c, gamma=0.5, length=SEVEN_PI, sigma=sigma,
        m=2, n_noise=10, n_galerkin=n_galerkin,
    )


def fig2_params(sigma=1.5, n_galerkin=32):
    lam_c = 2.0 * math.pi ** 2 / THREE_HALF_PI ** 2
    return ModelParams.with_uniform_sigma(
        nu=2.0, lam=1.7 * lam_c, gamma=0.5, length=THREE_HALF_PI, sigma=sigma,
        m=2, n_noise=10, n_galerkin=n_galerkin,
    )


@pytest.fixture
def fig1():
    return fig1_params()


@pytest.fixture
def fig2():
    return fig2_params()
