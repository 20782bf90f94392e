import math

import numpy as np
import pytest

from fedbnsl.model.params import AdmmHyperparams, PrivacyBudget, load_schema
from fedbnsl.solver.local_solver import clipping_thresholds
from fedbnsl.utils.exceptions import ConfigError, DivergenceError


def test_defaults_load_from_empty_config():
    hp = load_schema(AdmmHyperparams, None, "method.hyperparams")
    assert (hp.rho1, hp.rho2, hp.lam, hp.gamma, hp.T, hp.K) == (1000., 1., 0.1, 0.5, 100, 30)
    assert hp.rho2_at(1) == hp.rho2


def test_rho2_growth_is_geometric():
    hp = AdmmHyperparams(rho2=2., rho2_growth=1.5)
    assert hp.rho2_at(3) == pytest.approx(2. * 1.5 ** 2)


@pytest.mark.parametrize("overrides, field", [
    ({'rho1': -1.}, "method.hyperparams.rho1"),
    ({'gamma': 1.5}, "method.hyperparams.gamma"),
    ({'K': 0}, "method.hyperparams.K"),
    ({'T': 'many'}, "method.hyperparams.T"),
    ({'unknown': 1}, "method.hyperparams.unknown"),
])
def test_invalid_hyperparams_name_the_field(overrides, field):
    with pytest.raises(ConfigError) as info:
        load_schema(AdmmHyperparams, overrides, "method.hyperparams")
    assert info.value.field == field
    assert field in str(info.value)


def test_privacy_delta_defaults_to_inverse_square():
    budget = PrivacyBudget(enabled=True)
    assert budget.delta_for(100) == pytest.approx(1e-4)
    assert PrivacyBudget(enabled=True, delta=1e-6).delta_for(100) == 1e-6


def test_infinite_epsilon_is_noiseless():
    budget = PrivacyBudget(enabled=True, epsilon=math.inf, clip_C=math.inf)
    assert budget.noiseless


@pytest.mark.parametrize("kwargs, field", [
    ({'epsilon': 0.}, "epsilon"),
    ({'delta': 1.}, "delta"),
    ({'clip_C': math.inf}, "clip_C"),
    ({'bound': -1.}, "bound"),
])
def test_invalid_privacy_budget(kwargs, field):
    with pytest.raises(ConfigError) as info:
        PrivacyBudget(**kwargs)
    assert info.value.field == field


def test_nested_smoothness_errors_are_prefixed():
    with pytest.raises(ConfigError) as info:
        load_schema(PrivacyBudget, {'smoothness': {'enabled': True, 'epsilon': -1.}}, "method.privacy")
    assert info.value.field == "method.privacy.smoothness.epsilon"


def test_divergence_error_round_tagging():
    error = DivergenceError("h(W) overflowed")
    tagged = error.at_round(7)
    assert tagged.round == 7
    assert tagged.detail == "h(W) overflowed"
    assert str(tagged) == "round 7: h(W) overflowed"
    assert error.round is None


def test_relative_clip_threshold_scales_with_the_smoothness():
    smoothness = np.full((3, 3), 4.)
    relative = PrivacyBudget(enabled=True, clip_C=2.)
    np.testing.assert_allclose(clipping_thresholds(smoothness, relative.clip_threshold(smoothness)),
                               2. * np.sqrt(smoothness))
    assert PrivacyBudget(enabled=True, clip_C=2., clip_relative=False).clip_threshold(smoothness) == 2.
