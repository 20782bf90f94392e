"""
Structure recovery and personalisation metrics
"""

# generic imports
from typing import NamedTuple
import logging
import numpy as np

# fedbnsl imports
from fedbnsl.utils.exceptions import DimensionMismatchError, SingularMatrixError
from fedbnsl.utils.numerics import solve_linear_system

log = logging.getLogger(__name__)


def _check_dims(estimate, truth):
    if estimate.d != truth.d:
        raise DimensionMismatchError(f"estimate has {estimate.d} nodes, truth has {truth.d}")


class EdgeCounts(NamedTuple):
    correct: int
    reversed: int
    extra: int
    missing: int


def edge_counts(estimate, truth):
    """
    Classify the edges of an estimate against the truth.

    An estimated edge j -> i with i -> j true is a reversal. Extra edges are estimated edges neither true nor
    reversals; missing edges are true edges neither estimated nor reversed.
    """
    _check_dims(estimate, truth)
    correct = estimate.edges & truth.edges
    reversed_edges = {(i, j) for i, j in estimate.edges - truth.edges if (j, i) in truth.edges}
    extra = estimate.edges - truth.edges - reversed_edges
    missing = {(i, j) for i, j in truth.edges - estimate.edges if (j, i) not in estimate.edges}
    return EdgeCounts(len(correct), len(reversed_edges), len(extra), len(missing))


def shd(estimate, truth):
    """Structural Hamming distance: extra plus missing edges, each reversal counted once."""
    counts = edge_counts(estimate, truth)
    return counts.extra + counts.missing + counts.reversed


class TprFdr(NamedTuple):
    tpr: float
    fdr: float
    # set when the ratio is 0/0 and the value is the conventional one
    tpr_undefined: bool = False
    fdr_undefined: bool = False


def tpr_fdr(estimate, truth):
    """
    True positive rate and false discovery rate.

    Only correctly directed edges count as true positives; reversed edges count as false discoveries. With no true
    edges the TPR is reported as 1 and with no estimated edges the FDR as 0, flagged in both cases.
    """
    counts = edge_counts(estimate, truth)
    n_true = len(truth)
    n_estimated = len(estimate)
    tpr = counts.correct / n_true if n_true else 1.
    fdr = (counts.reversed + counts.extra) / n_estimated if n_estimated else 0.
    return TprFdr(tpr, fdr, n_true == 0, n_estimated == 0)


def skeleton_and_vstructures(g):
    """
    Skeleton and v-structures of a DAG.

    Returns
    -------
    skeleton : frozenset of (int, int)
        Unordered adjacent pairs, stored as (min, max).
    vstructures : frozenset of (int, int, int)
        Triples (a, c, b) with a < b, a -> c <- b and a, b not adjacent.
    """
    skeleton = frozenset((min(i, j), max(i, j)) for i, j in g.edges)
    vstructures = set()
    for c in range(g.d):
        parents = g.parents(c)
        for index, a in enumerate(parents):
            for b in parents[index + 1:]:
                if (a, b) not in skeleton:
                    vstructures.add((a, c, b))
    return skeleton, frozenset(vstructures)


def structure_report(estimate, truth):
    """Edge, skeleton and v-structure counts in the format used to report real-data recovery."""
    _check_dims(estimate, truth)
    estimated_skeleton, estimated_vstructures = skeleton_and_vstructures(estimate)
    true_skeleton, true_vstructures = skeleton_and_vstructures(truth)
    return {
        'estimated_edges': len(estimate),
        'true_edges': len(truth),
        'correct_undirected_edges': len(estimated_skeleton & true_skeleton),
        'estimated_vstructures': len(estimated_vstructures),
        'true_vstructures': len(true_vstructures),
        'correct_vstructures': len(estimated_vstructures & true_vstructures),
    }


def personalization_refit(structure, data):
    """
    Re-estimate the edge weights of a fixed structure on one participant's data by ordinary least squares.

    Parameters
    ----------
    structure : BinaryDag
    data : ParticipantData

    Returns
    -------
    np.ndarray
        d x d weights supported on the structure, each column regressed on its parents.

    Raises
    ------
    SingularMatrixError
        If a node's parent design matrix is rank deficient; the message names the node.
    """
    if structure.d != data.d:
        raise DimensionMismatchError(f"structure has {structure.d} nodes, data has {data.d} variables")
    weights = np.zeros((data.d, data.d))
    for j in range(data.d):
        parents = structure.parents(j)
        if not parents:
            continue
        if len(parents) >= data.n:
            raise SingularMatrixError(f"node {j} has {len(parents)} parents but only {data.n} samples")
        design = data.samples[:, parents]
        try:
            weights[parents, j] = solve_linear_system(design.T @ design, design.T @ data.samples[:, j])
        except SingularMatrixError as e:
            raise SingularMatrixError(f"parent design matrix of node {j} is rank deficient", pivot=e.pivot) from e
    return weights


def normalized_mse(estimate, truth):
    """||estimate - truth||_F^2 / ||truth||_F^2."""
    truth = np.asarray(truth, dtype=np.float64)
    denominator = np.sum(truth ** 2)
    if denominator == 0:
        raise ValueError("normalised MSE is undefined for a zero truth matrix")
    return float(np.sum((np.asarray(estimate) - truth) ** 2) / denominator)
