"""
Synthetic linear Gaussian Bayesian network federations
"""

# generic imports
import logging
import numpy as np

# fedbnsl imports
from fedbnsl.dataset.data_utils import Stream, as_generator, make_rng
from fedbnsl.dataset.participant import ParticipantData
from fedbnsl.model.graph import BinaryDag, GroundTruthModel
from fedbnsl.utils.exceptions import CyclicGraphError

log = logging.getLogger(__name__)

WEIGHT_RANGE = (0.5, 2.)
HETEROGENEITY_VARIANCE = 0.1


def generate_er_dag(d, expected_edges, seed):
    """
    Sample an Erdos-Renyi DAG.

    Nodes are put in a uniformly random order and each of the d(d-1)/2 pairs respecting that order becomes an edge
    independently with probability min(1, expected_edges / C(d, 2)).

    Parameters
    ----------
    d : int
        Number of nodes, at least 2.
    expected_edges : float
        Expected number of edges.
    seed : int or np.random.Generator

    Returns
    -------
    BinaryDag
    """
    if d < 2:
        raise ValueError(f"an ER DAG needs at least 2 nodes, got {d}")
    if expected_edges < 0:
        raise ValueError(f"expected edge count must be non-negative, got {expected_edges}")
    rng = as_generator(seed)
    order = rng.permutation(d)
    probability = min(1., expected_edges / (d * (d - 1) / 2))
    rows, cols = np.tril_indices(d, k=-1)
    keep = rng.random(rows.size) < probability
    # pair (a, b) with a > b in permuted positions: the earlier node is the parent
    edges = frozenset(zip(order[cols[keep]].tolist(), order[rows[keep]].tolist()))
    return BinaryDag(d, edges)


def assign_weights(g, seed):
    """
    Draw edge weights uniformly from [-2, -0.5] U [0.5, 2], each interval with probability 1/2.

    Parameters
    ----------
    g : BinaryDag
    seed : int or np.random.Generator

    Returns
    -------
    np.ndarray
        d x d weighted adjacency matrix, zero off the edges of `g`.
    """
    rng = as_generator(seed)
    weights = np.zeros((g.d, g.d))
    edges = sorted(g.edges)
    if not edges:
        return weights
    magnitudes = rng.uniform(*WEIGHT_RANGE, size=len(edges))
    signs = np.where(rng.random(len(edges)) < 0.5, -1., 1.)
    rows, cols = zip(*edges)
    weights[list(rows), list(cols)] = signs * magnitudes
    return weights


def sample_sem(weights, n, noise_std=1., seed=0):
    """
    Sample from the linear Gaussian SEM x = W^T x + z.

    Parameters
    ----------
    weights : array_like
        d x d weighted adjacency matrix supported on a DAG.
    n : int
        Number of samples.
    noise_std : float
        Standard deviation of every noise variable.
    seed : int or np.random.Generator

    Returns
    -------
    ParticipantData
    """
    weights = np.asarray(weights, dtype=np.float64)
    if n < 1:
        raise ValueError(f"need at least one sample, got {n}")
    if noise_std <= 0:
        raise ValueError(f"noise standard deviation must be positive, got {noise_std}")
    try:
        order = BinaryDag.from_adjacency(weights).topological_order()
    except CyclicGraphError as e:
        raise CyclicGraphError(f"cannot sample from a SEM with cyclic support: {e}") from e
    rng = as_generator(seed)
    d = weights.shape[0]
    noise = rng.normal(scale=noise_std, size=(n, d))
    X = np.zeros((n, d))
    for j in order:
        X[:, j] = X @ weights[:, j] + noise[:, j]
    return ParticipantData(X)


def generate_federation(d, P, n_p, mode="homogeneous", seed=0, expected_edges=None, noise_std=1.):
    """
    Generate a ground truth model and P participant datasets.

    In homogeneous mode every participant samples from the global weights. In heterogeneous mode participant p's
    weight on each true edge is drawn from N(global weight, 0.1) and non-edges stay zero.

    Parameters
    ----------
    d : int
        Number of variables.
    P : int
        Number of participants.
    n_p : int
        Samples per participant.
    mode : str
        'homogeneous' or 'heterogeneous'.
    seed : int
        Master seed; every random stream is derived from it.
    expected_edges : float, optional
        Expected number of edges of the ER graph, d by default.
    noise_std : float
        Standard deviation of the SEM noise.

    Returns
    -------
    truth : GroundTruthModel
    participants : list of ParticipantData
    """
    if P < 1:
        raise ValueError(f"need at least one participant, got {P}")
    if mode not in ("homogeneous", "heterogeneous"):
        raise ValueError(f"unknown federation mode '{mode}'")
    expected_edges = d if expected_edges is None else expected_edges

    structure = generate_er_dag(d, expected_edges, make_rng(seed, Stream.GRAPH))
    global_weights = assign_weights(structure, make_rng(seed, Stream.WEIGHTS))

    participant_weights = None
    if mode == "heterogeneous":
        participant_weights = []
        support = global_weights != 0
        for p in range(P):
            rng = make_rng(seed, Stream.PERTURBATION, p)
            perturbed = rng.normal(global_weights, np.sqrt(HETEROGENEITY_VARIANCE))
            participant_weights.append(np.where(support, perturbed, 0.))

    truth = GroundTruthModel(structure, global_weights, participant_weights, noise_variance=noise_std ** 2)
    participants = [sample_sem(truth.weights_for(p), n_p, noise_std, make_rng(seed, Stream.SAMPLES, p))
                    for p in range(P)]
    log.info(f"Generated {mode} federation: d={d}, {len(structure)} true edges, P={P}, n_p={n_p}, seed={seed}")
    return truth, participants
