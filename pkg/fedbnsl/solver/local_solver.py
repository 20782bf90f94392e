"""
Participant-side solver: proximal greedy coordinate descent on the local ADMM subproblem, and its private variant
"""

# generic imports
from dataclasses import dataclass
from typing import NamedTuple, Optional
import logging
import math
import numpy as np

# fedbnsl imports
from fedbnsl.dataset.participant import ParticipantData
from fedbnsl.privacy.mechanisms import sample_gaussian, sample_gumbel
from fedbnsl.utils.numerics import soft_threshold

log = logging.getLogger(__name__)


@dataclass(eq=False)
class LocalProblem:
    """
    Local subproblem of participant p at one ADMM round:

        minimise  1/(2n)||X - XB||^2 + tr(beta^T (B - W)) + rho2/2 ||B - W||^2 + lam ||B||_1

    Attributes
    ----------
    data : ParticipantData
        The participant's private samples.
    W : np.ndarray
        Consensus matrix received from the server.
    beta : np.ndarray
        The participant's dual matrix.
    rho2 : float
        Consensus penalty.
    lam : float
        l1 penalty weight.
    gamma : float
        Step factor in (0, 1].
    smoothness : np.ndarray, optional
        Coordinate-wise smoothness constants, computed from the data when omitted.
    """
    data: ParticipantData
    W: np.ndarray
    beta: np.ndarray
    rho2: float
    lam: float
    gamma: float
    smoothness: Optional[np.ndarray] = None

    def __post_init__(self):
        d = self.data.d
        self.W = np.asarray(self.W, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        if self.W.shape != (d, d) or self.beta.shape != (d, d):
            raise ValueError(f"W {self.W.shape} and beta {self.beta.shape} must both be {d}x{d}")
        if not self.rho2 > 0:
            raise ValueError(f"rho2 must be positive, got {self.rho2}")
        if self.lam < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.smoothness is None:
            self.smoothness = smoothness_constants(self.data, self.rho2)
        self.smoothness = np.asarray(self.smoothness, dtype=np.float64)
        if self.smoothness.shape != (d, d):
            raise ValueError(f"smoothness must be {d}x{d}, got {self.smoothness.shape}")
        if np.any(self.smoothness < self.rho2):
            raise ValueError("smoothness constants must be at least rho2")

    @property
    def d(self):
        return self.data.d


def smoothness_constants(data, rho2):
    """
    Coordinate-wise smoothness constants of the local objective.

    The data term's curvature along B[i, j] is ||X[:, i]||^2 / n, so every entry of row i shares the constant
    ||X[:, i]||^2 / n + rho2.

    Parameters
    ----------
    data : ParticipantData
    rho2 : float
        Consensus penalty, a lower bound of every constant.

    Returns
    -------
    np.ndarray
        d x d matrix M, constant along each row.
    """
    per_variable = data.column_sq_norms / data.n + rho2
    return np.repeat(per_variable[:, None], data.d, axis=1)


def smooth_gradient(prob, B):
    """Gradient of the smooth part of the local objective, Sigma (B - I) + beta + rho2 (B - W)."""
    data_term = prob.data.covariance @ B - prob.data.covariance
    return data_term + prob.beta + prob.rho2 * (B - prob.W)


def smooth_objective(prob, B):
    residual = np.eye(prob.d) - B
    data_term = 0.5 * np.sum(residual * (prob.data.covariance @ residual))
    difference = B - prob.W
    return float(data_term + np.sum(prob.beta * difference) + 0.5 * prob.rho2 * np.sum(difference ** 2))


def regularized_objective(prob, B):
    """Smooth objective plus the l1 penalty."""
    return smooth_objective(prob, B) + prob.lam * float(np.abs(B).sum())


def coordinate_scores(prob, B, gradient):
    """
    Score every coordinate by the length of its proximal step, scaled by the square root of its smoothness.

    Diagonal coordinates score -inf so that they are never selected.
    """
    M = prob.smoothness
    step = soft_threshold(B - gradient / M, prob.lam / M) - B
    scores = np.sqrt(M) * np.abs(step)
    np.fill_diagonal(scores, -np.inf)
    return scores


def coordinate_score(prob, B, i, j):
    """Score of the single coordinate (i, j) at B."""
    return float(coordinate_scores(prob, B, smooth_gradient(prob, B))[i, j])


class Step(NamedTuple):
    B: np.ndarray
    selected: tuple


def _update_coordinate(prob, B, gradient_value, m, n):
    M = prob.smoothness[m, n]
    B = B.copy()
    B[m, n] = soft_threshold(B[m, n] - prob.gamma / M * gradient_value, prob.lam * prob.gamma / M)
    return B


def pgcd_step(prob, B):
    """
    One greedy proximal coordinate step.

    The coordinate with the largest score is selected, ties going to the first in row-major order, and only that
    entry is updated by a proximal gradient step of length gamma / M.

    Parameters
    ----------
    prob : LocalProblem
    B : np.ndarray
        Current local matrix.

    Returns
    -------
    Step
        Updated matrix and the selected coordinate.
    """
    gradient = smooth_gradient(prob, B)
    m, n = select_coordinate(coordinate_scores(prob, B, gradient))
    return Step(_update_coordinate(prob, B, gradient[m, n], m, n), (m, n))


def _initial_matrix(prob, B0):
    B = np.array(B0, dtype=np.float64)
    if B.shape != (prob.d, prob.d):
        raise ValueError(f"initial matrix must be {prob.d}x{prob.d}, got {B.shape}")
    np.fill_diagonal(B, 0.)
    return B


def run_pgcd(prob, B0, K):
    """
    Run K greedy proximal coordinate steps from B0.

    Parameters
    ----------
    prob : LocalProblem
    B0 : np.ndarray
        Starting matrix, usually the previous round's local matrix.
    K : int
        Number of iterations, at least 1.

    Returns
    -------
    np.ndarray
        The local matrix after K steps.
    """
    if K < 1:
        raise ValueError(f"the local solver needs at least one iteration, got K={K}")
    B = _initial_matrix(prob, B0)
    for _ in range(K):
        B, _ = pgcd_step(prob, B)
    return B


def clipping_thresholds(smoothness, C):
    """Per-coordinate clipping thresholds C_ij = sqrt(M_ij / sum(M)) C."""
    return np.sqrt(smoothness / smoothness.sum()) * C


def clip_gradient_coordinate(g, M_ij, sum_M, C):
    """Clamp one gradient coordinate to [-C_ij, C_ij] with C_ij = sqrt(M_ij / sum_M) C."""
    bound = math.sqrt(M_ij / sum_M) * C
    return float(np.clip(g, -bound, bound))


class ClippedGradient:
    """
    Data term of the gradient with every per-sample contribution clipped, kept in step with single-coordinate
    updates of B.

    Sample k contributes x_k[i] r_k[j] to coordinate (i, j), where r_k = B^T x_k - x_k; that contribution is clamped
    to [-C_ij, C_ij] before averaging, so replacing one sample moves each coordinate by at most 2 C_ij / n.
    Column n of the residual only depends on B[:, n], so moving B[m, n] only changes column n of the gradient.
    """
    def __init__(self, data, B, thresholds):
        self.data = data
        self.thresholds = np.asarray(thresholds, dtype=np.float64)
        self.residual = data.samples @ B - data.samples
        self.value = np.column_stack([self._column(n) for n in range(data.d)])

    def _column(self, n):
        products = self.data.samples * self.residual[:, n, None]
        bound = self.thresholds[:, n]
        return np.clip(products, -bound, bound).sum(axis=0) / self.data.n

    def update(self, m, n, change):
        """Account for B[m, n] having moved by `change`."""
        self.residual[:, n] += change * self.data.samples[:, m]
        self.value[:, n] = self._column(n)


def clipped_data_gradient(data, B, thresholds):
    """Clipped data term of the gradient at B, see `ClippedGradient`."""
    return ClippedGradient(data, np.asarray(B, dtype=np.float64), thresholds).value


def select_coordinate(scores, gumbel_scale=None, rng=None):
    """
    Index of the largest score, ties going to the first in row-major order.

    With `gumbel_scale` set, every score is first perturbed by Gumbel noise of the matching scale drawn from `rng`.
    """
    if gumbel_scale is not None:
        scores = scores + sample_gumbel(gumbel_scale, rng)
    m, n = np.unravel_index(np.argmax(scores), scores.shape)
    return int(m), int(n)


def run_dp_pgcd(prob, B0, K, scales, rng, clip_C=math.inf):
    """
    Run K private greedy proximal coordinate steps from B0.

    Each step perturbs every score with Gumbel noise of scale beta_ij, selects the noisy argmax, and updates it with
    the clipped gradient plus Gaussian noise of standard deviation sigma inside the proximal step. Zero scales skip
    the noise entirely, so with zero noise and no clipping the result equals `run_pgcd` exactly.

    Parameters
    ----------
    prob : LocalProblem
    B0 : np.ndarray
        Warm start matrix.
    K : int
        Number of iterations.
    scales : NoiseScales
        Calibrated noise scales with per-coordinate Gumbel scales filled in.
    rng : np.random.Generator
        The participant's noise stream.
    clip_C : float
        Global clipping threshold C.

    Returns
    -------
    np.ndarray
    """
    if K < 1:
        raise ValueError(f"the local solver needs at least one iteration, got K={K}")
    if scales.gumbel_scale is None:
        raise ValueError("noise scales need their per-coordinate Gumbel scales")
    if scales.gumbel_scale.shape != (prob.d, prob.d):
        raise ValueError(f"Gumbel scales must be {prob.d}x{prob.d}, got {scales.gumbel_scale.shape}")
    # scales are either all positive or all zero
    gumbel_scale = scales.gumbel_scale if np.all(scales.gumbel_scale > 0) else None
    noisy_update = scales.sigma > 0

    B = _initial_matrix(prob, B0)
    clipped = None
    if not math.isinf(clip_C):
        clipped = ClippedGradient(prob.data, B, clipping_thresholds(prob.smoothness, clip_C))
    for _ in range(K):
        if clipped is None:
            gradient = smooth_gradient(prob, B)
        else:
            gradient = clipped.value + prob.beta + prob.rho2 * (B - prob.W)
        m, n = select_coordinate(coordinate_scores(prob, B, gradient), gumbel_scale, rng)
        g = gradient[m, n]
        if noisy_update:
            g = g + sample_gaussian(scales.sigma, rng)
        updated = _update_coordinate(prob, B, g, m, n)
        if clipped is not None and updated[m, n] != B[m, n]:
            clipped.update(m, n, updated[m, n] - B[m, n])
        B = updated
    return B
