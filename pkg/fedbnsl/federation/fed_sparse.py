"""
Federated sparse structure learning: ADMM rounds with greedy coordinate descent at the participants and sparse
messages in both directions, optionally with differential privacy
"""

# generic imports
from concurrent.futures import ThreadPoolExecutor
import logging
import time
import numpy as np

# fedbnsl imports
from fedbnsl.dataset.data_utils import Stream, make_rng
from fedbnsl.federation.codec import transmit_sparse
from fedbnsl.federation.server import ServerState, dual_residual, dual_updates, server_w_update
from fedbnsl.model.record import RoundEntry, RunRecord
from fedbnsl.privacy.accountant import account_run, calibrate, zcdp_of_gaussian
from fedbnsl.privacy.smoothness import private_smoothness
from fedbnsl.solver.local_solver import LocalProblem, clipping_thresholds, run_dp_pgcd, run_pgcd, smoothness_constants
from fedbnsl.utils.exceptions import DivergenceError

log = logging.getLogger(__name__)


def check_participants(participants):
    if not participants:
        raise ValueError("a federation needs at least one participant")
    dims = {data.d for data in participants}
    if len(dims) != 1:
        raise ValueError(f"participants disagree on the number of variables: {sorted(dims)}")
    return dims.pop()


def map_participants(function, P, workers):
    """Apply `function` to every participant index, on a thread pool when more than one worker is requested."""
    if workers > 1 and P > 1:
        with ThreadPoolExecutor(max_workers=min(workers, P)) as pool:
            return list(pool.map(function, range(P)))
    return [function(p) for p in range(P)]


class _PrivateParticipant:
    """Noise stream, clipping threshold and calibrated scales of one participant."""

    def __init__(self, data, privacy, hp, seed, participant):
        self.budget = privacy
        self.delta = privacy.delta_for(data.n)
        self.rng = make_rng(seed, Stream.SOLVER_NOISE, participant)
        self.n = data.n
        self.K = hp.K
        self.T = hp.T
        self.clip_C = None
        self.sigma = None
        self.rounds = 0
        self.per_query_rho = 0.

    def scales(self, smoothness):
        self.clip_C = self.budget.clip_threshold(smoothness)
        # sensitivity of every query: 2 max_ij C_ij / n
        sensitivity = 2 * clipping_thresholds(smoothness, self.clip_C).max() / self.n
        scales = calibrate(self.budget.epsilon, self.delta, self.K, self.T, sensitivity)
        self.sigma = scales.sigma
        self.rounds += 1
        if scales.sigma > 0:
            self.per_query_rho = max(self.per_query_rho, zcdp_of_gaussian(sensitivity, scales.sigma))
        return scales.with_smoothness(smoothness)

    def ledger(self):
        noisy = self.sigma is not None and self.sigma > 0
        account = account_run(self.K, self.rounds, self.per_query_rho)
        return {
            'delta': self.delta,
            'sigma': self.sigma,
            'clip_C': self.clip_C,
            'rho_total': account.rho_total if noisy else float('inf'),
            'epsilon_achieved': account.epsilon(self.delta) if noisy else float('inf'),
            'queries': len(account),
        }


def _private_curvature(participants, hp, config, seed):
    """Privately estimated data part of every participant's smoothness constants, to which each round adds rho2."""
    curvatures = []
    for p, data in enumerate(participants):
        delta = config.delta if config.delta is not None else 1. / data.n ** 2
        rng = make_rng(seed, Stream.SMOOTHNESS_NOISE, p)
        M = private_smoothness(data, hp.rho2, config.bound, config.epsilon, delta, rng)
        curvatures.append(M - hp.rho2)
    return curvatures


def run_fed_sparse_bnsl(participants, hp, privacy=None, seed=0, workers=1, report_interval=10):
    """
    Run federated sparse structure learning.

    Every round each participant runs K steps of greedy proximal coordinate descent (the private variant when
    `privacy` is enabled) warm-started from its previous local matrix, and uploads the nonzero entries. The server
    updates the consensus matrix with L-BFGS-B, updates the duals and broadcasts the sparse consensus matrix,
    which replaces its own copy.

    Parameters
    ----------
    participants : list of ParticipantData
    hp : AdmmHyperparams
    privacy : PrivacyBudget, optional
        Privacy budget; ignored unless enabled.
    seed : int
        Master seed of the noise streams.
    workers : int
        Threads running the local updates.
    report_interval : int
        Rounds between progress log lines.

    Returns
    -------
    RunRecord
        One entry per round and the pruned final estimate.

    Raises
    ------
    DivergenceError
        Tagged with the round in which the iterates left the representable range.
    """
    d = check_participants(participants)
    P = len(participants)
    private = privacy is not None and privacy.enabled
    record = RunRecord("fed_sparse_dp" if private else "fed_sparse", d, P)
    curvatures = None
    if private and privacy.smoothness.enabled:
        curvatures = _private_curvature(participants, hp, privacy.smoothness, seed)
    noise = [_PrivateParticipant(data, privacy, hp, seed, p) for p, data in enumerate(participants)] \
        if private else None

    state = ServerState.initial(d, P)
    local_matrices = [np.zeros((d, d)) for _ in range(P)]
    bytes_up_cum = bytes_down_cum = 0

    for t in range(1, hp.T + 1):
        start = time.perf_counter()
        rho2 = hp.rho2_at(t)

        def local_update(p):
            smoothness = smoothness_constants(participants[p], rho2) if curvatures is None else curvatures[p] + rho2
            prob = LocalProblem(participants[p], state.W, state.betas[p], rho2, hp.lam, hp.gamma, smoothness)
            if private:
                return run_dp_pgcd(prob, local_matrices[p], hp.K, noise[p].scales(prob.smoothness), noise[p].rng,
                                   clip_C=noise[p].clip_C)
            return run_pgcd(prob, local_matrices[p], hp.K)

        updated = map_participants(local_update, P, workers)
        if not all(np.all(np.isfinite(B)) for B in updated):
            raise DivergenceError("local matrix became non-finite", round=t)

        uplink = [transmit_sparse(B) for B in updated]
        local_matrices = [received for _, received in uplink]
        bytes_up = sum(message.nbytes for message, _ in uplink)

        try:
            w_update = server_w_update(state, local_matrices, hp.rho1, rho2, max_iter=hp.server_max_iter,
                                       memory=hp.server_memory)
        except DivergenceError as e:
            raise e.at_round(t) from e
        message, W = transmit_sparse(w_update.W)
        bytes_down = P * message.nbytes
        try:
            state = dual_updates(state, W, local_matrices, hp.rho1, rho2)
        except DivergenceError as e:
            raise e.at_round(t) from e

        bytes_up_cum += bytes_up
        bytes_down_cum += bytes_down
        record.append(RoundEntry(
            round=t, W=W, h_value=state.h_value, bytes_up=bytes_up, bytes_down=bytes_down,
            bytes_up_cum=bytes_up_cum, bytes_down_cum=bytes_down_cum,
            dual_residual=dual_residual(W, local_matrices), alpha=state.alpha, w_support=len(message),
            local_support=tuple(len(m) for m, _ in uplink), server_iterations=w_update.iterations,
            server_converged=w_update.converged, wall_time=time.perf_counter() - start))
        if t % report_interval == 0 or t == hp.T:
            log.info(f"Round {t}/{hp.T}: h(W) = {state.h_value:.3e}, |supp W| = {len(message)}, "
                     f"bytes up/down = {bytes_up_cum}/{bytes_down_cum}")

    record.local_matrices = local_matrices
    if private:
        record.privacy = {
            'epsilon': privacy.epsilon,
            'clip_C': privacy.clip_C,
            'clip_relative': privacy.clip_relative,
            'participants': [participant.ledger() for participant in noise],
        }
        if privacy.smoothness.enabled:
            record.privacy['smoothness'] = {'epsilon': privacy.smoothness.epsilon,
                                            'delta': privacy.smoothness.delta, 'bound': privacy.smoothness.bound}
    record.finalize(hp.prune_threshold)
    return record
