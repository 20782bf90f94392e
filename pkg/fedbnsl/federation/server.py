"""
Server side of the ADMM consensus loop: consensus matrix update and dual updates
"""

# generic imports
from dataclasses import dataclass, replace
from typing import NamedTuple
import logging
import numpy as np
import scipy.optimize as sopt

# fedbnsl imports
from fedbnsl.utils.exceptions import DivergenceError
from fedbnsl.utils.numerics import acyclicity_h

log = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-6
FUNCTION_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class ServerState:
    """
    Server variables between rounds.

    Attributes
    ----------
    W : np.ndarray
        Consensus matrix.
    alpha : float
        Dual variable of the acyclicity constraint.
    betas : tuple of np.ndarray
        Dual matrix of every participant.
    round : int
        Number of completed rounds.
    h_value : float
        Acyclicity of W.
    """
    W: np.ndarray
    alpha: float
    betas: tuple
    round: int = 0
    h_value: float = 0.

    def __post_init__(self):
        d = self.W.shape[0]
        if self.W.shape != (d, d) or any(beta.shape != (d, d) for beta in self.betas):
            raise ValueError("server matrices must all be square and of the same size")

    @classmethod
    def initial(cls, d, P):
        """All-zero consensus matrix and duals."""
        return cls(np.zeros((d, d)), 0., tuple(np.zeros((d, d)) for _ in range(P)))

    @property
    def d(self):
        return self.W.shape[0]


class WUpdate(NamedTuple):
    W: np.ndarray
    objective: float
    iterations: int
    converged: bool


def server_objective(W, locals, betas, alpha, rho1, rho2):
    """
    Consensus objective of the server and its gradient.

    F(W) = sum_p [tr(beta_p^T (B_p - W)) + rho2/2 ||B_p - W||^2] + alpha h(W) + rho1/2 h(W)^2

    Returns
    -------
    value : float
    gradient : np.ndarray
    """
    B = np.stack(locals)
    beta = np.stack(betas)
    difference = B - W
    h, h_gradient = acyclicity_h(W)
    value = np.sum(beta * difference) + 0.5 * rho2 * np.sum(difference ** 2) + alpha * h + 0.5 * rho1 * h * h
    gradient = -beta.sum(axis=0) - rho2 * difference.sum(axis=0) + (alpha + rho1 * h) * h_gradient
    return float(value), gradient


def server_w_update(state, locals, rho1, rho2, lam=0., max_iter=500, memory=10):
    """
    Minimise the server objective over W with L-BFGS-B.

    The search starts from whichever of the previous W and the minimiser of the quadratic part,
    mean_p(B_p + beta_p / rho2), has the lower objective. With `lam` > 0 an l1 penalty lam ||W||_1 is added and W
    is split into positive and negative parts with non-negativity bounds, the diagonal pinned to zero.

    Parameters
    ----------
    state : ServerState
    locals : list of np.ndarray
        Local matrices received from the participants.
    rho1 : float
        Acyclicity penalty.
    rho2 : float
        Consensus penalty.
    lam : float
        l1 penalty on W.
    max_iter : int
        Iteration cap of the quasi-Newton solver.
    memory : int
        Number of correction pairs kept by the solver.

    Returns
    -------
    WUpdate
        New W with its objective, the iteration count and whether the tolerance was reached.

    Raises
    ------
    DivergenceError
        If the matrix exponential overflows or the iterate becomes non-finite.
    """
    if not locals:
        raise ValueError("server update needs at least one local matrix")
    if len(locals) != len(state.betas):
        raise ValueError(f"got {len(locals)} local matrices for {len(state.betas)} participants")
    d = state.d

    def objective(W):
        value, gradient = server_objective(W, locals, state.betas, state.alpha, rho1, rho2)
        return value + lam * np.abs(W).sum(), gradient

    candidates = [state.W.copy(), np.mean([B + beta / rho2 for B, beta in zip(locals, state.betas)], axis=0)]
    if lam > 0:
        for candidate in candidates:
            np.fill_diagonal(candidate, 0.)
    values = [objective(candidate)[0] for candidate in candidates]
    W0 = candidates[int(np.argmin(values))]
    F0 = min(values)
    options = {'maxiter': max_iter, 'maxcor': memory, 'ftol': FUNCTION_TOLERANCE,
               'gtol': GRADIENT_TOLERANCE * max(1., abs(F0))}

    if lam > 0:
        def _func(w):
            W = (w[:d * d] - w[d * d:]).reshape(d, d)
            value, gradient = server_objective(W, locals, state.betas, state.alpha, rho1, rho2)
            value += lam * w.sum()
            gradient = gradient.ravel()
            return value, np.concatenate((gradient + lam, -gradient + lam))

        bounds = [(0, 0) if i == j else (0, None) for _ in range(2) for i in range(d) for j in range(d)]
        w0 = np.concatenate((np.maximum(W0, 0.), np.maximum(-W0, 0.)), axis=None)
        solution = sopt.minimize(_func, w0, method='L-BFGS-B', jac=True, bounds=bounds, options=options)
        W = (solution.x[:d * d] - solution.x[d * d:]).reshape(d, d)
    else:
        def _func(w):
            value, gradient = server_objective(w.reshape(d, d), locals, state.betas, state.alpha, rho1, rho2)
            return value, gradient.ravel()

        solution = sopt.minimize(_func, W0.ravel(), method='L-BFGS-B', jac=True, options=options)
        W = solution.x.reshape(d, d)

    if not np.all(np.isfinite(W)) or not np.isfinite(solution.fun):
        raise DivergenceError("consensus matrix became non-finite")
    if not solution.success:
        log.debug(f"Server update stopped after {solution.nit} iterations: {solution.message}")
    return WUpdate(W, float(solution.fun), int(solution.nit), bool(solution.success))


def dual_updates(state, W_new, locals, rho1, rho2):
    """
    Dual ascent step: alpha += rho1 h(W_new) and beta_p += rho2 (B_p - W_new).

    Returns
    -------
    ServerState
        State holding W_new, the new duals and the incremented round counter.
    """
    h, _ = acyclicity_h(W_new)
    betas = tuple(beta + rho2 * (B - W_new) for beta, B in zip(state.betas, locals))
    return replace(state, W=W_new, alpha=state.alpha + rho1 * h, betas=betas, round=state.round + 1, h_value=h)


def dual_residual(W, locals):
    """Sum over participants of ||B_p - W||_F."""
    return float(sum(np.linalg.norm(B - W) for B in locals))
