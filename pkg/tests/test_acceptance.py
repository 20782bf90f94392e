"""
Experiment-scale checks at the d=20 operating point. Deselected by default, run with `pytest -m slow`.
"""
import math

import numpy as np
import pytest

from fedbnsl.dataset.synthetic import generate_federation
from fedbnsl.federation.attack import reconstruct_covariance, reconstruction_error
from fedbnsl.federation.fed_bnsl import run_fed_bnsl_baseline
from fedbnsl.federation.fed_sparse import run_fed_sparse_bnsl
from fedbnsl.model.metric import normalized_mse, personalization_refit, shd, tpr_fdr
from fedbnsl.model.params import AdmmHyperparams, PrivacyBudget

pytestmark = pytest.mark.slow

DEFAULTS = AdmmHyperparams()
DENSE_TOTAL_D20 = 5_120_000
# one thread per participant
WORKERS = 8


def homogeneous(seed, d=20):
    return generate_federation(d=d, P=8, n_p=5000, seed=seed)


def test_dense_baseline_communication():
    _, participants = homogeneous(0)
    assert run_fed_bnsl_baseline(participants, DEFAULTS).total_bytes == DENSE_TOTAL_D20


def test_sparse_communication_and_structure_recovery():
    totals, shds, tprs, fdrs = [], [], [], []
    for seed in range(10):
        truth, participants = homogeneous(seed)
        record = run_fed_sparse_bnsl(participants, DEFAULTS, seed=seed, workers=WORKERS)
        totals.append(record.total_bytes)
        rates = tpr_fdr(record.estimate, truth.structure)
        shds.append(shd(record.estimate, truth.structure))
        tprs.append(rates.tpr)
        fdrs.append(rates.fdr)
    assert np.mean(totals) <= 0.5 * DENSE_TOTAL_D20
    assert np.mean(shds) <= 6
    assert np.mean(tprs) >= 0.85
    assert np.mean(fdrs) <= 0.12


def test_attack_on_every_seed():
    one_round = AdmmHyperparams(T=1)
    zeros = np.zeros((20, 20))
    for seed in range(10):
        _, participants = homogeneous(seed)
        dense = run_fed_bnsl_baseline(participants, one_round)
        sparse = run_fed_sparse_bnsl(participants, one_round)
        for B_dense, B_sparse, data in zip(dense.local_matrices, sparse.local_matrices, participants):
            dense_error = reconstruction_error(reconstruct_covariance(B_dense, zeros, zeros, 1.), data.covariance)
            sparse_error = reconstruction_error(reconstruct_covariance(B_sparse, zeros, zeros, 1.), data.covariance)
            assert dense_error <= 1e-8
            assert sparse_error >= 10 * dense_error


def test_zero_noise_private_run_is_bit_identical():
    privacy = PrivacyBudget(enabled=True, epsilon=math.inf, clip_C=math.inf)
    for seed in range(3):
        _, participants = homogeneous(seed)
        private = run_fed_sparse_bnsl(participants, DEFAULTS, privacy=privacy, seed=seed, workers=WORKERS)
        plain = run_fed_sparse_bnsl(participants, DEFAULTS, seed=seed, workers=WORKERS)
        for a, b in zip(private.rounds, plain.rounds):
            np.testing.assert_array_equal(a.W, b.W)


def test_privacy_utility_trend():
    means, stds, tprs = [], [], {}
    for epsilon in (1., 5., 10., 50.):
        privacy = PrivacyBudget(enabled=True, epsilon=epsilon)
        shds, rates = [], []
        for seed in range(5):
            truth, participants = homogeneous(seed)
            record = run_fed_sparse_bnsl(participants, DEFAULTS, privacy=privacy, seed=seed, workers=WORKERS)
            shds.append(shd(record.estimate, truth.structure))
            rates.append(tpr_fdr(record.estimate, truth.structure).tpr)
        means.append(np.mean(shds))
        stds.append(np.std(shds))
        tprs[epsilon] = np.mean(rates)
    pooled = math.sqrt(np.mean(np.square(stds)))
    for looser, tighter in zip(means, means[1:]):
        assert tighter <= looser + pooled
    assert tprs[10.] >= 0.7


def test_personalization_beats_the_consensus():
    seeds_improved = 0
    for seed in range(10):
        truth, participants = generate_federation(d=20, P=5, n_p=5000, mode="heterogeneous", seed=seed)
        record = run_fed_sparse_bnsl(participants, DEFAULTS, seed=seed, workers=WORKERS)
        consensus = record.final_W * record.estimate.adjacency()
        improved = all(
            normalized_mse(personalization_refit(record.estimate, data), truth.weights_for(p))
            < normalized_mse(consensus, truth.weights_for(p))
            for p, data in enumerate(participants))
        seeds_improved += improved
    assert seeds_improved >= 9


@pytest.mark.parametrize("d", [20, 50])
def test_private_sparse_method_beats_the_private_baseline(d):
    privacy = PrivacyBudget(enabled=True, epsilon=10.)
    sparse, dense = [], []
    for seed in range(5):
        truth, participants = homogeneous(seed, d=d)
        sparse.append(shd(run_fed_sparse_bnsl(participants, DEFAULTS, privacy=privacy, seed=seed, workers=WORKERS).estimate,
                          truth.structure))
        dense.append(shd(run_fed_bnsl_baseline(participants, DEFAULTS, privacy=privacy, seed=seed, workers=WORKERS).estimate,
                         truth.structure))
    assert np.mean(sparse) <= np.mean(dense)
