"""
Noise mechanisms used by the private local solver
"""

# generic imports
from dataclasses import dataclass
from typing import Optional
import numpy as np


def sample_gumbel(scale, rng):
    """
    Draw Gumbel(0, scale) noise, i.e. -scale * ln(-ln U) with U uniform on (0, 1).

    Parameters
    ----------
    scale : float or np.ndarray
        Positive scale(s); an array gives one independent draw per entry.
    rng : np.random.Generator

    Returns
    -------
    float or np.ndarray
    """
    scale = np.asarray(scale, dtype=np.float64)
    if np.any(~(scale > 0)):
        raise ValueError("Gumbel scale must be positive")
    draw = rng.gumbel(loc=0., scale=scale)
    return float(draw) if np.ndim(draw) == 0 else draw


def sample_gaussian(std, rng, size=None):
    """Draw N(0, std^2) noise. A zero standard deviation returns exact zeros without consuming the stream."""
    if std < 0:
        raise ValueError(f"standard deviation must be non-negative, got {std}")
    if std == 0:
        return 0. if size is None else np.zeros(size)
    draw = rng.normal(loc=0., scale=std, size=size)
    return float(draw) if size is None else draw


@dataclass(frozen=True, eq=False)
class NoiseScales:
    """
    Noise parameters of the private local solver.

    Attributes
    ----------
    sigma : float
        Standard deviation of the Gaussian noise added to the selected gradient coordinate.
    delta_sensitivity : float
        Sensitivity the scales were calibrated for.
    gumbel_scale : np.ndarray, optional
        Per-coordinate Gumbel scales sigma / sqrt(M_ij), filled in by `with_smoothness`.
    """
    sigma: float
    delta_sensitivity: float
    gumbel_scale: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be non-negative, got {self.sigma}")
        if self.delta_sensitivity < 0:
            raise ValueError(f"sensitivity must be non-negative, got {self.delta_sensitivity}")
        if self.gumbel_scale is not None and np.any(self.gumbel_scale < 0):
            raise ValueError("Gumbel scales must be non-negative")

    def with_smoothness(self, smoothness):
        """Fill in the per-coordinate Gumbel scales from the smoothness constants."""
        return NoiseScales(self.sigma, self.delta_sensitivity, self.sigma / np.sqrt(smoothness))

    @classmethod
    def zero(cls, d):
        return cls(0., 0., np.zeros((d, d)))
