import numpy as np
import pytest

from fedbnsl.federation.server import (ServerState, dual_residual, dual_updates, server_objective,
                                       server_w_update)
from fedbnsl.utils.exceptions import DivergenceError
from fedbnsl.utils.numerics import acyclicity_h, finite_difference_gradient


def random_state(rng, d, P, scale=0.1):
    return ServerState(rng.normal(scale=scale, size=(d, d)), float(rng.uniform(0, 2)),
                       tuple(rng.normal(scale=scale, size=(d, d)) for _ in range(P)))


def test_initial_state():
    state = ServerState.initial(4, 3)
    assert state.d == 4
    assert len(state.betas) == 3
    assert state.alpha == 0. and state.round == 0
    np.testing.assert_array_equal(state.W, 0.)


def test_without_acyclicity_the_update_is_the_mean(rng):
    locals_ = [rng.normal(scale=0.2, size=(4, 4)) for _ in range(3)]
    update = server_w_update(ServerState.initial(4, 3), locals_, rho1=1e-12, rho2=1.)
    np.testing.assert_allclose(update.W, np.mean(locals_, axis=0), atol=1e-6)


def test_agreeing_triangular_locals_are_a_fixed_point(rng):
    B = np.tril(rng.uniform(-1, 1, size=(5, 5)), k=-1)
    state = ServerState(np.zeros((5, 5)), 1., tuple(np.zeros((5, 5)) for _ in range(2)))
    update = server_w_update(state, [B, B.copy()], rho1=10., rho2=1.)
    np.testing.assert_allclose(update.W, B, atol=1e-8)


def test_update_does_not_increase_the_objective(rng):
    for _ in range(5):
        state = random_state(rng, 4, 3)
        locals_ = [rng.normal(scale=0.5, size=(4, 4)) for _ in range(3)]
        update = server_w_update(state, locals_, rho1=5., rho2=1.)
        start = np.mean([B + beta for B, beta in zip(locals_, state.betas)], axis=0)
        args = (locals_, state.betas, state.alpha, 5., 1.)
        assert update.objective <= server_objective(start, *args)[0] + 1e-12
        assert update.objective <= server_objective(state.W, *args)[0] + 1e-12
        assert update.objective == pytest.approx(server_objective(update.W, *args)[0])


def test_update_leaves_the_state_untouched(rng):
    state = random_state(rng, 3, 2)
    W_before = state.W.copy()
    server_w_update(state, [np.ones((3, 3)), np.ones((3, 3))], rho1=1., rho2=1., lam=0.1)
    np.testing.assert_array_equal(state.W, W_before)


def test_objective_gradient_matches_finite_differences(rng):
    for _ in range(5):
        state = random_state(rng, 4, 2)
        locals_ = [rng.normal(scale=0.5, size=(4, 4)) for _ in range(2)]
        W = rng.normal(scale=0.5, size=(4, 4))
        args = (locals_, state.betas, state.alpha, 3., 2.)
        _, gradient = server_objective(W, *args)
        numeric = finite_difference_gradient(lambda X: server_objective(X, *args)[0], W, h=1e-6)
        np.testing.assert_allclose(gradient, numeric, rtol=1e-5, atol=1e-6)


def test_l1_penalty_keeps_the_diagonal_empty(rng):
    locals_ = [rng.normal(scale=0.5, size=(4, 4)) for _ in range(2)]
    update = server_w_update(ServerState.initial(4, 2), locals_, rho1=5., rho2=1., lam=0.1)
    np.testing.assert_array_equal(np.diag(update.W), 0.)
    assert np.all(np.isfinite(update.W))


def test_l1_penalty_zeroes_small_consensus_entries():
    B = np.zeros((3, 3))
    B[0, 1] = 0.05
    B[1, 2] = 2.
    update = server_w_update(ServerState.initial(3, 1), [B], rho1=1., rho2=1., lam=0.1)
    assert abs(update.W[0, 1]) < 1e-8
    assert update.W[1, 2] == pytest.approx(1.9, abs=1e-4)


def test_overflow_is_reported_as_divergence():
    huge = np.full((4, 4), 1e3)
    with pytest.raises(DivergenceError):
        server_w_update(ServerState.initial(4, 1), [huge], rho1=1., rho2=1.)


def test_duals_are_unchanged_at_a_fixed_point(rng):
    W = np.tril(rng.normal(size=(4, 4)), k=-1)
    state = random_state(rng, 4, 2)
    new = dual_updates(state, W, [W, W], rho1=10., rho2=1.)
    assert new.alpha == state.alpha
    for before, after in zip(state.betas, new.betas):
        np.testing.assert_array_equal(before, after)
    assert new.round == state.round + 1
    assert new.h_value == 0.


def test_dual_ascent_step(rng):
    W = np.array([[0., 0.8], [0.6, 0.]])
    B = [rng.normal(size=(2, 2)) for _ in range(2)]
    state = ServerState(np.zeros((2, 2)), 0.5, (np.zeros((2, 2)), np.ones((2, 2))))
    new = dual_updates(state, W, B, rho1=10., rho2=2.)
    h, _ = acyclicity_h(W)
    assert new.alpha == pytest.approx(0.5 + 10. * h)
    np.testing.assert_allclose(new.betas[1], 1. + 2. * (B[1] - W))
    assert new.W is W


def test_dual_residual(rng):
    W = rng.normal(size=(3, 3))
    assert dual_residual(W, [W, W]) == 0.
    assert dual_residual(np.zeros((2, 2)), [np.eye(2)]) == pytest.approx(np.sqrt(2))
