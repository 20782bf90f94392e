"""
Dense matrix kernels shared by the local solvers, the server and the metrics
"""

# generic imports
import numpy as np
import scipy.linalg
import warnings

# fedbnsl imports
from fedbnsl.utils.exceptions import MatrixExponentialOverflow, SingularMatrixError


TAYLOR_DEGREE = 18
SCALED_NORM_BOUND = 0.5
PIVOT_TOLERANCE = 1e-12


def soft_threshold(x, t):
    """
    Proximal operator of t|.|, applied element-wise.

    Parameters
    ----------
    x : float or array_like
        Point(s) to shrink.
    t : float or array_like
        Non-negative threshold(s), broadcast against `x`.

    Returns
    -------
    float or np.ndarray
        sign(x) * max(|x| - t, 0)
    """
    result = np.sign(x) * np.maximum(np.abs(x) - t, 0.)
    if np.ndim(result) == 0:
        return float(result)
    return result


def matrix_exponential(A):
    """
    Compute e^A by scaling and squaring with a truncated Taylor kernel.

    The number of squarings is chosen so that the 1-norm of the scaled matrix is at most 0.5, where a degree 18
    Taylor polynomial is accurate to machine precision.

    Parameters
    ----------
    A : array_like
        Square matrix with finite entries.

    Returns
    -------
    np.ndarray
        The matrix exponential of `A`.

    Raises
    ------
    ValueError
        If `A` is not square.
    MatrixExponentialOverflow
        If the result is not representable in 64-bit floating point.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix_exponential needs a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise MatrixExponentialOverflow("matrix_exponential input has non-finite entries")
    d = A.shape[0]
    identity = np.eye(d)
    norm = np.abs(A).sum(axis=0).max() if d else 0.
    squarings = 0
    if norm > SCALED_NORM_BOUND:
        squarings = int(np.ceil(np.log2(norm / SCALED_NORM_BOUND)))
    scaled = A / (2. ** squarings)

    # Horner evaluation of sum_k scaled^k / k!
    result = identity.copy()
    for k in range(TAYLOR_DEGREE, 0, -1):
        result = identity + scaled @ result / k

    with np.errstate(over='ignore', invalid='ignore'):
        for _ in range(squarings):
            result = result @ result
            if not np.all(np.isfinite(result)):
                raise MatrixExponentialOverflow(
                    f"matrix exponential overflowed (1-norm of input {norm:.3g}, {squarings} squarings)")
    return result


def acyclicity_h(W):
    """
    Evaluate the acyclicity function h(W) = tr(e^{W o W}) - d and its gradient.

    Parameters
    ----------
    W : array_like
        Square weighted adjacency matrix.

    Returns
    -------
    value : float
        h(W), zero exactly when the support of `W` is acyclic.
    gradient : np.ndarray
        (e^{W o W})^T o 2W
    """
    W = np.asarray(W, dtype=np.float64)
    E = matrix_exponential(W * W)
    value = float(np.trace(E) - W.shape[0])
    gradient = E.T * W * 2
    return value, gradient


def solve_linear_system(A, B, tol=PIVOT_TOLERANCE):
    """
    Solve AX = B with a partially pivoted LU factorisation.

    Parameters
    ----------
    A : array_like
        Square coefficient matrix.
    B : array_like
        Right hand side, vector or matrix with as many rows as `A`.
    tol : float
        Pivots whose magnitude is below `tol` times the largest entry of `A` make the system singular.

    Returns
    -------
    np.ndarray
        Solution X with the shape of `B`.

    Raises
    ------
    SingularMatrixError
        If `A` is singular to tolerance.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"coefficient matrix must be square, got shape {A.shape}")
    if B.shape[0] != A.shape[0]:
        raise ValueError(f"right hand side has {B.shape[0]} rows, expected {A.shape[0]}")
    scale = np.abs(A).max() if A.size else 0.
    if scale == 0.:
        raise SingularMatrixError("coefficient matrix is zero", pivot=0.)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    min_pivot = np.abs(np.diag(lu)).min()
    if min_pivot < tol * scale:
        raise SingularMatrixError(f"matrix is singular to tolerance (smallest pivot {min_pivot:.3e})", pivot=min_pivot)
    return scipy.linalg.lu_solve((lu, piv), B)


def finite_difference_gradient(f, X, h=1e-5):
    """
    Central-difference gradient of a scalar function of a matrix.

    Parameters
    ----------
    f : callable
        Function mapping an array shaped like `X` to a float.
    X : array_like
        Point at which to differentiate.
    h : float
        Positive step.

    Returns
    -------
    np.ndarray
        Array shaped like `X` with entries (f(X + hE_ij) - f(X - hE_ij)) / 2h.
    """
    if h <= 0:
        raise ValueError(f"finite difference step must be positive, got {h}")
    X = np.array(X, dtype=np.float64)
    grad = np.zeros_like(X)
    for index in np.ndindex(X.shape):
        original = X[index]
        X[index] = original + h
        f_plus = f(X)
        X[index] = original - h
        f_minus = f(X)
        X[index] = original
        grad[index] = (f_plus - f_minus) / (2 * h)
    return grad
