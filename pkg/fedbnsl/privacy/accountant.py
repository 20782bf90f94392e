"""
Zero-concentrated differential privacy accounting and noise calibration
"""

# generic imports
from dataclasses import dataclass, field
import logging
import math

# fedbnsl imports
from fedbnsl.privacy.mechanisms import NoiseScales

log = logging.getLogger(__name__)

SELECTION = "gumbel_selection"
UPDATE = "gaussian_update"


def zcdp_of_gaussian(sensitivity, std):
    """rho of the Gaussian mechanism: sensitivity^2 / (2 std^2)."""
    if not std > 0:
        raise ValueError(f"standard deviation must be positive, got {std}")
    return sensitivity ** 2 / (2 * std ** 2)


def zcdp_to_dp(rho, delta):
    """Convert rho-zCDP to (epsilon, delta)-DP: epsilon = rho + 2 sqrt(rho ln(1/delta))."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if rho < 0:
        raise ValueError(f"rho must be non-negative, got {rho}")
    return rho + 2 * math.sqrt(rho * math.log(1 / delta))


def _privacy_factor(epsilon, delta):
    log_inv_delta = math.log(1 / delta)
    return (math.sqrt(log_inv_delta + epsilon) + math.sqrt(log_inv_delta)) / epsilon


def calibrate(epsilon, delta, K, T, sensitivity):
    """
    Gaussian noise level giving (epsilon, delta)-DP over the 2KT queries of a private run.

    sigma = sensitivity sqrt(KT) (sqrt(ln(1/delta) + epsilon) + sqrt(ln(1/delta))) / epsilon, the exact inverse
    of `zcdp_to_dp` applied to a total of KT sensitivity^2 / sigma^2.

    Parameters
    ----------
    epsilon : float
        Target epsilon, positive. An infinite epsilon gives zero noise.
    delta : float
        Target delta in (0, 1).
    K : int
        Local iterations per round.
    T : int
        Rounds.
    sensitivity : float
        Sensitivity of every query.

    Returns
    -------
    NoiseScales
        Scales with sigma set; the per-coordinate Gumbel scales are filled in by the caller.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if K * T < 1:
        raise ValueError(f"need at least one query, got K={K}, T={T}")
    if sensitivity < 0:
        raise ValueError(f"sensitivity must be non-negative, got {sensitivity}")
    if math.isinf(epsilon) or sensitivity == 0:
        return NoiseScales(0., sensitivity)
    return NoiseScales(sensitivity * math.sqrt(K * T) * _privacy_factor(epsilon, delta), sensitivity)


def gaussian_mechanism_std(sensitivity, epsilon, delta):
    """Classic Gaussian mechanism: sensitivity sqrt(2 ln(1.25/delta)) / epsilon."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if math.isinf(epsilon):
        return 0.
    return sensitivity * math.sqrt(2 * math.log(1.25 / delta)) / epsilon


@dataclass
class ZcdpAccount:
    """
    Running zCDP ledger of one participant. Composition is additive, so the total is the sum of logged queries.

    Attributes
    ----------
    queries : list of (str, float)
        Mechanism kind and rho of every query, in order.
    """
    queries: list = field(default_factory=list)

    def log(self, kind, rho, count=1):
        if rho < 0:
            raise ValueError(f"rho must be non-negative, got {rho}")
        self.queries.extend([(kind, rho)] * count)

    @property
    def rho_total(self):
        return math.fsum(rho for _, rho in self.queries)

    def epsilon(self, delta):
        """(epsilon, delta)-DP guarantee implied by the ledger."""
        return zcdp_to_dp(self.rho_total, delta)

    def __len__(self):
        return len(self.queries)


def account_run(K, T, per_query_rho):
    """Ledger of a run of T rounds with K iterations each, one selection and one update per iteration."""
    account = ZcdpAccount()
    for _ in range(T):
        account.log(SELECTION, per_query_rho, K)
        account.log(UPDATE, per_query_rho, K)
    return account
