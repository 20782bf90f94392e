"""
Covariance reconstruction from the messages a participant sends to the server
"""

# generic imports
import logging
import numpy as np

# fedbnsl imports
from fedbnsl.utils.exceptions import AttackFailure, SingularMatrixError
from fedbnsl.utils.numerics import solve_linear_system

log = logging.getLogger(__name__)


def reconstruct_covariance(B, W, beta, rho):
    """
    Recover a participant's covariance from its exact local minimiser.

    The first-order condition of the local subproblem without l1 penalty, Sigma (B - I) + beta + rho (B - W) = 0,
    gives Sigma = R (B - I)^-1 with R = rho (W - B) - beta.

    Parameters
    ----------
    B : np.ndarray
        Local matrix sent by the participant.
    W : np.ndarray
        Consensus matrix the participant started from.
    beta : np.ndarray
        The participant's dual matrix, known to the server.
    rho : float
        Consensus penalty.

    Returns
    -------
    np.ndarray
        Reconstructed covariance.

    Raises
    ------
    AttackFailure
        If B - I is singular.
    """
    B = np.asarray(B, dtype=np.float64)
    R = rho * (np.asarray(W) - B) - np.asarray(beta)
    shifted = B - np.eye(B.shape[0])
    try:
        # Sigma (B - I) = R  <=>  (B - I)^T Sigma^T = R^T
        return solve_linear_system(shifted.T, R.T).T
    except SingularMatrixError as e:
        raise AttackFailure(f"B - I is singular, the covariance cannot be reconstructed: {e}") from e


def reconstruction_error(estimate, covariance):
    """Relative Frobenius error of a reconstructed covariance."""
    return float(np.linalg.norm(estimate - covariance) / np.linalg.norm(covariance))
