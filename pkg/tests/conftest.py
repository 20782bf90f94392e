import numpy as np
import pytest

from fedbnsl.dataset.participant import ParticipantData
from fedbnsl.dataset.synthetic import generate_federation
from fedbnsl.model.params import AdmmHyperparams


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_federation():
    """Homogeneous federation small enough for full runs in unit tests."""
    return generate_federation(d=5, P=2, n_p=200, seed=7)


@pytest.fixture
def small_hyperparams():
    return AdmmHyperparams(rho1=10., rho2=1., lam=0.1, gamma=0.5, T=3, K=5)


@pytest.fixture
def random_participant(rng):
    return ParticipantData(rng.normal(size=(50, 5)))
