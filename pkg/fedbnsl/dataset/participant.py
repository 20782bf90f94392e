"""
A participant's local dataset and its cached statistics
"""

# generic imports
from dataclasses import dataclass, field
from functools import cached_property
import numpy as np


@dataclass(eq=False)
class ParticipantData:
    """
    Private local dataset of one participant.

    Attributes
    ----------
    samples : np.ndarray
        n_p x d sample matrix, one record per row.
    column_sq_norms : np.ndarray
        Squared l2 norm of every column, computed on construction.
    """
    samples: np.ndarray
    column_sq_norms: np.ndarray = field(init=False)

    def __post_init__(self):
        self.samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 2:
            raise ValueError(f"samples must be a 2D array, got shape {self.samples.shape}")
        if self.samples.shape[0] < 1:
            raise ValueError("a participant needs at least one sample")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples contain non-finite values")
        self.column_sq_norms = np.einsum('kj,kj->j', self.samples, self.samples)

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def d(self):
        return self.samples.shape[1]

    @cached_property
    def covariance(self):
        """Empirical second moment matrix X^T X / n_p."""
        return self.samples.T @ self.samples / self.n
