import numpy as np
import pytest

from aggfrag import kernels as K
from aggfrag import rates as R


@pytest.fixture
def lebesgue():
    return K.SelfSimilarMeasure.lebesgue()


@pytest.fixture
def half_atom():
    return K.SelfSimilarMeasure.midpoint_atom()


@pytest.fixture
def plain_rates():
    """beta_i = i, tau_i = 1, mu_i = 1 scaled by small coefficients."""
    return R.power_law_rates(alpha=1.0, theta=0.0, m=0.0, lam=1.0, gamma=0.5,
                             beta_coeff=0.5, tau_coeff=0.3, mu_coeff=0.1)


def random_state(rng, n0, N, scale=1.0):
    u = scale * rng.random(N - n0 + 1)
    return float(rng.random() + 0.1), u


def rel_err(a, b, floor=1e-12):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), floor)))
