"""
Sparse and dense message encodings with byte accounting
"""

# generic imports
from dataclasses import dataclass
import math
import numpy as np

# fedbnsl imports
from fedbnsl.utils.exceptions import FedBnslError

ZERO_TOLERANCE = 1e-12
FLOAT_BYTES = 8


def index_bytes(d):
    """Bytes needed to address one of the d^2 entries of a d x d matrix."""
    return math.ceil(math.log2(d * d) / 8) if d > 1 else 0


def entry_bytes(d):
    return FLOAT_BYTES + index_bytes(d)


def sparse_bytes(entries, d):
    return entries * entry_bytes(d)


def dense_bytes(d):
    """Size of a dense d x d message, which carries no indices."""
    return d * d * FLOAT_BYTES


@dataclass(frozen=True, eq=False)
class SparseUpdate:
    """
    Nonzero entries of a d x d matrix, addressed by their row-major flat index.

    Attributes
    ----------
    d : int
    indices : np.ndarray
        Strictly increasing flat indices.
    values : np.ndarray
        Nonzero values, one per index.
    """
    d: int
    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.indices.shape != self.values.shape or self.indices.ndim != 1:
            raise ValueError("indices and values must be 1D arrays of equal length")
        if np.any(np.diff(self.indices) <= 0):
            raise ValueError("indices must be strictly increasing")
        if np.any(self.values == 0):
            raise ValueError("a sparse update carries nonzero values only")

    @property
    def nbytes(self):
        return sparse_bytes(len(self), self.d)

    def __len__(self):
        return self.indices.size


def encode_sparse(M, tol=ZERO_TOLERANCE):
    """Encode the entries of M with magnitude above `tol`."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"only square matrices are encoded, got shape {M.shape}")
    flat = M.ravel()
    indices = np.flatnonzero(np.abs(flat) > tol)
    return SparseUpdate(M.shape[0], indices, flat[indices].copy())


def decode_sparse(u):
    """Rebuild the dense matrix of a sparse update."""
    if u.indices.size and (u.indices[0] < 0 or u.indices[-1] >= u.d * u.d):
        raise IndexError(f"sparse update index out of range for a {u.d}x{u.d} matrix")
    flat = np.zeros(u.d * u.d)
    flat[u.indices] = u.values
    return flat.reshape(u.d, u.d)


def transmit_sparse(M):
    """
    Encode a matrix for transmission and decode it as the receiver does.

    Returns
    -------
    message : SparseUpdate
    received : np.ndarray
        The matrix the receiver reconstructs, equal to M with entries of magnitude at most 1e-12 removed.
    """
    message = encode_sparse(M)
    received = decode_sparse(message)
    expected = np.where(np.abs(M) > ZERO_TOLERANCE, M, 0.)
    if not np.array_equal(received, expected):
        raise FedBnslError("sparse codec round trip changed the message")
    return message, received
