"""Limit objects driven by Q_N = (I - Lambda A_N)^{-1}.

Only the two vectors ell_N = Q_N 1_N and c_N^K = Q_N^T 1_K are ever computed
(two linear solves); Q_N itself is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import SpectralFailure
from .kernels import ModelParams, check_subcritical
from .random_graph import Adjacency

RESIDUAL_TOL = 1e-8
# above this size an LU factorization costs more than a handful of Krylov steps
DIRECT_MAX_N = 600


@dataclass(frozen=True, eq=False)
class GraphAnalysis:
    N: int
    K: int
    mu: float
    Lambda: float
    ell: np.ndarray
    ell_bar_K: float
    c_K: np.ndarray
    x_K_sq_norm: float
    V_inf: float
    A_inf: float
    W_inf: float
    X_inf: float
    residual: float


def _solve_pair(theta: np.ndarray, scale: float, rhs_row: np.ndarray, rhs_col: np.ndarray, method: str):
    """Solve (I - scale*theta) x = rhs_row and (I - scale*theta^T) y = rhs_col."""
    n = theta.shape[0]
    if method == "auto":
        method = "direct" if n <= DIRECT_MAX_N else "krylov"
    if method == "direct":
        M = np.eye(n) - scale * theta
        lu = scipy.linalg.lu_factor(M, check_finite=False)
        x = scipy.linalg.lu_solve(lu, rhs_row, check_finite=False)
        y = scipy.linalg.lu_solve(lu, rhs_col, trans=1, check_finite=False)
        return x, y
    if method != "krylov":
        raise ValueError(f"unknown solve method {method!r}")
    thetaT = theta.T
    op = LinearOperator((n, n), matvec=lambda v: v - scale * (theta @ v), dtype=float)
    opT = LinearOperator((n, n), matvec=lambda v: v - scale * (thetaT @ v), dtype=float)
    # spectrum of scale*theta: one outlier near Lambda p, bulk of radius O(N^-1/2)
    x, info_x = gmres(op, rhs_row, x0=rhs_row.copy(), rtol=1e-14, atol=0.0, restart=50, maxiter=20)
    y, info_y = gmres(opT, rhs_col, x0=rhs_col.copy(), rtol=1e-14, atol=0.0, restart=50, maxiter=20)
    return x, y


def analyze_graph(adj: Adjacency, Lambda: float, mu: float, K: int, method: str = "auto") -> GraphAnalysis:
    """ell_N, c_N^K and the derived limit scalars V_inf, A_inf, W_inf, X_inf.

    Parameters
    ----------
    adj : Adjacency
    Lambda : float
        Kernel mass.
    mu : float
        Baseline rate.
    K : int
        Number of observed processes (the first K).
    method : {"auto", "direct", "krylov"}
        LU factorization or restarted GMRES; "auto" picks by size.

    Raises
    ------
    SpectralFailure
        If Lambda * |||A_N|||_inf >= 1, or a solve residual exceeds 1e-8.
    """
    n = adj.n
    if not 1 <= K <= n:
        raise ValueError("need 1 <= K <= N")
    if Lambda * adj.row_sums.max() / n >= 1.0:
        raise SpectralFailure("Lambda * |||A_N|||_inf >= 1: invertibility not guaranteed")
    theta = adj.dense()
    scale = Lambda / n
    ones = np.ones(n)
    ones_K = np.zeros(n)
    ones_K[:K] = 1.0
    ell, c = _solve_pair(theta, scale, ones, ones_K, method)
    res_ell = np.abs(ell - scale * (theta @ ell) - ones).max()
    res_c = np.abs(c - scale * (theta.T @ c) - ones_K).max()
    residual = max(res_ell / max(np.abs(ell).max(), 1.0), res_c / max(np.abs(c).max(), 1.0))
    if not np.isfinite(residual) or residual > RESIDUAL_TOL:
        raise SpectralFailure(f"linear solve residual {residual:.3e} exceeds {RESIDUAL_TOL:g}")

    ell_bar = float(ell[:K].mean())
    x_sq = float(np.sum((ell[:K] - ell_bar) ** 2))
    V_inf = n * mu**2 / K * x_sq
    A_inf = float(np.sum(c**2 * ell))
    W_inf = mu * n / K**2 * A_inf
    X_inf = W_inf - (n - K) * mu / K * ell_bar
    ell.setflags(write=False)
    c.setflags(write=False)
    return GraphAnalysis(
        N=n, K=K, mu=mu, Lambda=Lambda, ell=ell, ell_bar_K=ell_bar, c_K=c,
        x_K_sq_norm=x_sq, V_inf=V_inf, A_inf=A_inf, W_inf=W_inf, X_inf=X_inf,
        residual=residual,
    )


def ell_bar_limit(params: ModelParams) -> float:
    """1 / (1 - Lambda p)."""
    b = check_subcritical(params).branching
    return 1.0 / (1.0 - b)


@dataclass(frozen=True)
class LimitTriple:
    u: float
    v: float
    w: float

    def __iter__(self):
        return iter((self.u, self.v, self.w))


def limit_triple(params: ModelParams) -> LimitTriple:
    """Probability limits of (epsilon, V, X) in the subcritical regime."""
    b = check_subcritical(params).branching
    mu, lam, p = params.mu, params.Lambda, params.p
    return LimitTriple(
        u=mu / (1.0 - b),
        v=mu**2 * lam**2 * p * (1.0 - p) / (1.0 - b) ** 2,
        w=mu / (1.0 - b) ** 3,
    )
