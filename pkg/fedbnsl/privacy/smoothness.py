"""
Private estimation of the coordinate-wise smoothness constants
"""

# generic imports
import logging
import math
import numpy as np

# fedbnsl imports
from fedbnsl.privacy.mechanisms import sample_gaussian

log = logging.getLogger(__name__)


def smoothness_noise_std(bounds, n, d, epsilon, delta):
    """
    Standard deviation of the noise added to each variable's clipped second moment.

    sigma_j = (b_j / n) sqrt(d) (sqrt(ln(1/delta) + epsilon) + sqrt(ln(1/delta))) / (sqrt(2) epsilon)
    """
    bounds = np.asarray(bounds, dtype=np.float64)
    if math.isinf(epsilon):
        return np.zeros_like(bounds)
    log_inv_delta = math.log(1 / delta)
    factor = (math.sqrt(log_inv_delta + epsilon) + math.sqrt(log_inv_delta)) / (math.sqrt(2) * epsilon)
    return bounds / n * math.sqrt(d) * factor


def private_smoothness(data, rho2, bounds, epsilon_M, delta_M, rng):
    """
    Estimate the smoothness constants with (epsilon_M, delta_M)-DP.

    Each squared value is clipped to its variable's bound b_j, averaged, shifted by rho2 and perturbed with
    Gaussian noise. Estimates below rho2 are raised to rho2.

    Parameters
    ----------
    data : ParticipantData
    rho2 : float
        Consensus penalty.
    bounds : float or array_like
        Bound b_j on the squared value of each variable, scalar or one per variable.
    epsilon_M : float
        Privacy budget epsilon of the estimate.
    delta_M : float
        Privacy budget delta of the estimate.
    rng : np.random.Generator

    Returns
    -------
    np.ndarray
        d x d matrix, constant along each row, every entry at least rho2.
    """
    bounds = np.broadcast_to(np.asarray(bounds, dtype=np.float64), (data.d,))
    if np.any(~(bounds > 0)):
        raise ValueError("smoothness bounds must be positive")
    if not epsilon_M > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon_M}")
    if not 0 < delta_M < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta_M}")
    clipped_moments = np.minimum(data.samples ** 2, bounds).mean(axis=0)
    stds = smoothness_noise_std(bounds, data.n, data.d, epsilon_M, delta_M)
    noise = np.array([sample_gaussian(std, rng) for std in stds])
    per_variable = np.maximum(clipped_moments + rho2 + noise, rho2)
    log.debug(f"Private smoothness constants with noise std {stds.max():.3g} at epsilon {epsilon_M}")
    return np.repeat(per_variable[:, None], data.d, axis=1)
