"""
Dense federated structure learning baseline, with optional privatised covariance matrices
"""

# generic imports
import logging
import math
import time
import numpy as np

# fedbnsl imports
from fedbnsl.dataset.data_utils import Stream, make_rng
from fedbnsl.federation.codec import dense_bytes
from fedbnsl.federation.fed_sparse import check_participants, map_participants
from fedbnsl.federation.server import ServerState, dual_residual, dual_updates, server_w_update
from fedbnsl.model.record import RoundEntry, RunRecord
from fedbnsl.privacy.accountant import gaussian_mechanism_std
from fedbnsl.utils.exceptions import ConfigError, DivergenceError, SingularMatrixError
from fedbnsl.utils.numerics import solve_linear_system

log = logging.getLogger(__name__)


def privatize_covariance(data, bound, epsilon, delta, rng):
    """
    Release the covariance of a participant with the Gaussian mechanism.

    Samples are scaled down to l2 norm at most `bound`, which bounds the Frobenius sensitivity of X^T X / n by
    sqrt(2) bound^2 / n. Symmetric noise is added once: the upper triangle is sampled and mirrored.

    Parameters
    ----------
    data : ParticipantData
    bound : float
        Bound b on the l2 norm of every sample.
    epsilon : float
    delta : float
    rng : np.random.Generator

    Returns
    -------
    covariance : np.ndarray
    std : float
        Standard deviation of the added noise.
    """
    norms = np.linalg.norm(data.samples, axis=1)
    scale = np.minimum(1., bound / np.maximum(norms, np.finfo(np.float64).tiny))
    clipped = data.samples * scale[:, None]
    covariance = clipped.T @ clipped / data.n
    covariance = 0.5 * (covariance + covariance.T)
    std = gaussian_mechanism_std(math.sqrt(2) * bound ** 2 / data.n, epsilon, delta)
    if std > 0:
        upper = np.triu(rng.normal(scale=std, size=covariance.shape))
        covariance = covariance + upper + np.triu(upper, k=1).T
    return covariance, std


def local_closed_form(covariance, W, beta, rho2):
    """Exact minimiser of the local subproblem without l1 penalty: (Sigma + rho2 I)^-1 (rho2 W - beta + Sigma)."""
    d = covariance.shape[0]
    return solve_linear_system(covariance + rho2 * np.eye(d), rho2 * W - beta + covariance)


def run_fed_bnsl_baseline(participants, hp, privacy=None, seed=0, workers=1, report_interval=10):
    """
    Run the dense federated baseline.

    Participants solve their subproblem in closed form from their covariance matrix and exchange dense d x d
    matrices in both directions. The server keeps the l1 penalty `hp.lam` on the consensus matrix. With `privacy`
    enabled every covariance is privatised once before the first round.

    Parameters
    ----------
    participants : list of ParticipantData
    hp : AdmmHyperparams
    privacy : PrivacyBudget, optional
        Budget and sample bound `privacy.bound` of the covariance release.
    seed : int
        Master seed of the noise streams.
    workers : int
        Threads running the local updates.
    report_interval : int
        Rounds between progress log lines.

    Returns
    -------
    RunRecord
    """
    d = check_participants(participants)
    P = len(participants)
    private = privacy is not None and privacy.enabled
    record = RunRecord("fed_bnsl_dp" if private else "fed_bnsl", d, P)

    if private:
        if math.isinf(privacy.bound) and not privacy.noiseless:
            raise ConfigError("bound", "must be finite unless epsilon is infinite")
        released = [privatize_covariance(data, privacy.bound, privacy.epsilon, privacy.delta_for(data.n),
                                         make_rng(seed, Stream.COVARIANCE_NOISE, p))
                    for p, data in enumerate(participants)]
        covariances = [covariance for covariance, _ in released]
        record.privacy = {
            'epsilon': privacy.epsilon,
            'bound': privacy.bound,
            'participants': [{'delta': privacy.delta_for(data.n), 'std': std}
                             for data, (_, std) in zip(participants, released)],
        }
    else:
        covariances = [data.covariance for data in participants]

    state = ServerState.initial(d, P)
    local_matrices = [np.zeros((d, d)) for _ in range(P)]
    message_bytes = dense_bytes(d)
    bytes_up_cum = bytes_down_cum = 0

    for t in range(1, hp.T + 1):
        start = time.perf_counter()
        rho2 = hp.rho2_at(t)

        def local_update(p):
            return local_closed_form(covariances[p], state.W, state.betas[p], rho2)

        try:
            local_matrices = map_participants(local_update, P, workers)
        except SingularMatrixError as e:
            raise DivergenceError(f"local system is singular: {e}", round=t) from e
        if not all(np.all(np.isfinite(B)) for B in local_matrices):
            raise DivergenceError("local matrix became non-finite", round=t)

        try:
            w_update = server_w_update(state, local_matrices, hp.rho1, rho2, lam=hp.lam,
                                       max_iter=hp.server_max_iter, memory=hp.server_memory)
            state = dual_updates(state, w_update.W, local_matrices, hp.rho1, rho2)
        except DivergenceError as e:
            raise e.at_round(t) from e

        bytes_up = bytes_down = P * message_bytes
        bytes_up_cum += bytes_up
        bytes_down_cum += bytes_down
        record.append(RoundEntry(
            round=t, W=state.W, h_value=state.h_value, bytes_up=bytes_up, bytes_down=bytes_down,
            bytes_up_cum=bytes_up_cum, bytes_down_cum=bytes_down_cum,
            dual_residual=dual_residual(state.W, local_matrices), alpha=state.alpha,
            w_support=int(np.count_nonzero(state.W)), local_support=tuple(d * d for _ in range(P)),
            server_iterations=w_update.iterations, server_converged=w_update.converged,
            wall_time=time.perf_counter() - start))
        if t % report_interval == 0 or t == hp.T:
            log.info(f"Round {t}/{hp.T}: h(W) = {state.h_value:.3e}, bytes up/down = {bytes_up_cum}/{bytes_down_cum}")

    record.local_matrices = local_matrices
    record.finalize(hp.prune_threshold)
    return record
