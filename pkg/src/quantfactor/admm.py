"""Scaled ADMM solver for pinball or squared loss with l1 and nuclear-norm penalties.

The full problem splits as V = W, W = Y - X theta - Z_Pi, Z_Pi = Pi, Z_theta = theta,
with scaled duals U_V, U_W, U_Pi, U_theta.  Every block update has a closed form:
a pinball (or squared-loss) prox for V, a cached Gram solve for theta, singular
value thresholding for Pi, soft thresholding for Z_theta, and a 2x2 linear
system solved jointly for (Z_Pi, W).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DimensionMismatch, NonFiniteIterate
from .panel import (
    ColumnScales,
    PanelData,
    QuantileFit,
    SolverConfig,
    compute_column_scales,
    penalized_objective,
)
from .prox import prox_pinball, prox_squared, singular_value_threshold, soft_threshold

# Entries (or singular values) below ZERO_TOL * max(1, largest magnitude)
# count as exact zeros when estimating support size and rank.
ZERO_TOL = 1e-8


@dataclass
class AdmmState:
    """All primal, slack, and scaled dual iterates of one solve.

    Mutable and confined to a single worker; pass a previous state back into
    fit() to warm start.  The *_prev arrays hold the previous sweep's values
    of the variables entering the dual residual.
    """

    theta: np.ndarray
    pi: np.ndarray
    v: np.ndarray
    w: np.ndarray
    z_theta: np.ndarray
    z_pi: np.ndarray
    u_v: np.ndarray
    u_w: np.ndarray
    u_pi: np.ndarray
    u_theta: np.ndarray
    eta: float
    w_prev: np.ndarray
    z_pi_prev: np.ndarray
    z_theta_prev: np.ndarray

    @classmethod
    def zeros(cls, n: int, t_len: int, p: int, eta: float) -> "AdmmState":
        m = lambda: np.zeros((n, t_len))
        v = lambda: np.zeros(p)
        return cls(
            theta=v(), pi=m(), v=m(), w=m(), z_theta=v(), z_pi=m(),
            u_v=m(), u_w=m(), u_pi=m(), u_theta=v(), eta=eta,
            w_prev=m(), z_pi_prev=m(), z_theta_prev=v(),
        )


class GramCache:
    """Cholesky factorization of (sum_it X_it X_it' + I_p), shared across fits.

    The matrix is symmetric positive definite by construction, so the
    factorization always exists.
    """

    def __init__(self, data: PanelData):
        if data.p < 1:
            raise ValueError("GramCache requires at least one covariate")
        self.x_flat = np.ascontiguousarray(data.x.reshape(-1, data.p))
        gram = self.x_flat.T @ self.x_flat + np.eye(data.p)
        self._factor = cho_factor(gram)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve (Gram + I) theta = b."""
        return cho_solve(self._factor, b)

    def xt_dot(self, mat: np.ndarray) -> np.ndarray:
        """sum_it X_it * mat_it, an R^p vector."""
        return self.x_flat.T @ mat.ravel()


def support_mask(v) -> np.ndarray:
    """Boolean mask of entries treated as nonzero, with a relative floor."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.size == 0:
        return np.zeros(0, dtype=bool)
    floor = ZERO_TOL * max(1.0, float(np.max(np.abs(v))))
    return np.abs(v) > floor


def estimate_sparsity(theta) -> int:
    """Number of nonzero coefficients (soft-thresholding produces exact zeros)."""
    return int(np.sum(support_mask(theta)))


def estimate_rank(singular_values) -> int:
    """Number of nonzero singular values (SVT produces exact zeros)."""
    s = np.atleast_1d(np.asarray(singular_values, dtype=float))
    if s.size == 0:
        return 0
    floor = ZERO_TOL * max(1.0, float(s[0]))
    return int(np.sum(s > floor))


def solve_zw_joint(a_tilde, b_tilde, c_tilde):
    """Exact joint minimizer of ||W + Z + A||^2 + ||W + B||^2 + ||Z + C||^2.

    The first-order conditions are the 2x2 system 2W + Z = -A - B and
    W + 2Z = -A - C, solved in closed form.
    """
    a = np.asarray(a_tilde, dtype=float)
    b = np.asarray(b_tilde, dtype=float)
    c = np.asarray(c_tilde, dtype=float)
    if a.shape != b.shape or a.shape != c.shape:
        raise DimensionMismatch("a_tilde, b_tilde, c_tilde must share one shape")
    z = (-a - 2.0 * c + b) / 3.0
    w = -a - c - 2.0 * z
    return z, w


def admm_residuals(state: AdmmState, data: PanelData):
    """Primal and dual residual norms of the current state.

    primal: Frobenius norm of the stacked constraint violations
            (V - W, W - Y + X theta + Z_Pi, Z_Pi - Pi, Z_theta - theta).
    dual:   eta times the norm of the change in (W, Z_Pi, Z_theta) since the
            previous sweep.
    """
    xth = data.x @ state.theta if data.p else np.zeros(data.y.shape)
    return _residuals(state, data.y, xth)


def _residuals(state: AdmmState, y: np.ndarray, xth: np.ndarray):
    r1 = state.v - state.w
    r2 = state.w - y + xth + state.z_pi
    r3 = state.z_pi - state.pi
    r4 = state.z_theta - state.theta
    primal = np.sqrt(
        np.sum(r1 ** 2) + np.sum(r2 ** 2) + np.sum(r3 ** 2) + np.sum(r4 ** 2)
    )
    dual = state.eta * np.sqrt(
        np.sum((state.w - state.w_prev) ** 2)
        + np.sum((state.z_pi - state.z_pi_prev) ** 2)
        + np.sum((state.z_theta - state.z_theta_prev) ** 2)
    )
    return float(primal), float(dual)


def _tolerances(state: AdmmState, y, xth, config: SolverConfig):
    """Boyd-style combined absolute/relative thresholds for both residuals."""
    nt = y.size
    p = state.theta.size
    primal_scale = max(
        np.linalg.norm(state.v), np.linalg.norm(state.w),
        np.linalg.norm(state.z_pi), np.linalg.norm(state.pi),
        np.linalg.norm(state.z_theta), np.linalg.norm(state.theta),
        np.linalg.norm(y - xth),
    )
    dual_scale = state.eta * max(
        np.linalg.norm(state.u_v), np.linalg.norm(state.u_w),
        np.linalg.norm(state.u_pi), np.linalg.norm(state.u_theta),
    )
    eps_primal = config.tol_abs * np.sqrt(3 * nt + p) + config.tol_rel * primal_scale
    eps_dual = config.tol_abs * np.sqrt(2 * nt + p) + config.tol_rel * dual_scale
    return eps_primal, eps_dual


def _check_finite(state: AdmmState):
    for arr in (state.theta, state.pi, state.v, state.w, state.z_pi, state.z_theta):
        if not np.isfinite(arr).all():
            raise NonFiniteIterate(
                "ADMM iterate became non-finite; try a different eta"
            )


def fit(
    data: PanelData,
    config: SolverConfig,
    scales: ColumnScales | None = None,
    init: AdmmState | None = None,
    gram: GramCache | None = None,
    callback=None,
) -> QuantileFit:
    """Solve the penalized panel regression at one (nu1, nu2) pair.

    Parameters
    ----------
    data : PanelData
        Balanced panel.  With p = 0 the problem routes to fit_no_covariates.
    config : SolverConfig
        Loss, penalties, and stopping rule.  With fix_pi_zero the low-rank
        part is pinned at zero and nu2 is ignored.
    scales : ColumnScales, optional
        l1 penalty weights; computed from the data when omitted.
    init : AdmmState, optional
        Warm start.  The state is advanced in place and holds the final
        iterates on return, which is what grid search reuses.
    gram : GramCache, optional
        Shared factorization of (sum X X' + I); computed when omitted.
    callback : callable, optional
        Called as callback(sweep, primal, dual) after every sweep.

    Returns
    -------
    QuantileFit with theta taken from the soft-threshold iterate and pi from
    the singular-value-threshold iterate, so support and rank counts reflect
    exact zeros.
    """
    if data.p == 0:
        if config.fix_pi_zero:
            raise ValueError("fix_pi_zero with p = 0 leaves nothing to estimate")
        return fit_no_covariates(data.y, config)
    if scales is None:
        scales = compute_column_scales(data)
    if scales.p != data.p:
        raise DimensionMismatch("scales do not match the number of covariates")
    if gram is None:
        gram = GramCache(data)

    n, t_len, p = data.n, data.t_len, data.p
    nt = n * t_len
    y = data.y
    x = data.x
    eta = config.eta
    s = init if init is not None else AdmmState.zeros(n, t_len, p, eta)
    if s.pi.shape != (n, t_len) or s.theta.shape != (p,):
        raise DimensionMismatch("warm-start state does not match the panel")
    s.eta = eta
    if config.fix_pi_zero:
        s.pi = np.zeros((n, t_len))
        s.z_pi = np.zeros((n, t_len))
        s.u_pi = np.zeros((n, t_len))

    kappa = 1.0 / (nt * eta)
    l1_thresholds = config.nu1 * scales.sigma_hat / eta
    svt_threshold = config.nu2 / eta
    squared = config.loss == "squared"
    fix_pi = config.fix_pi_zero
    bound = config.pi_inf_bound
    svals = np.zeros(min(n, t_len))

    converged = False
    primal = dual = np.inf
    sweep = 0
    for sweep in range(1, config.max_iter + 1):
        s.w_prev, s.z_pi_prev, s.z_theta_prev = s.w, s.z_pi, s.z_theta

        # V: prox of the loss at W - U_V.
        av = s.w - s.u_v
        s.v = prox_squared(av, eta, nt) if squared else prox_pinball(av, config.tau, kappa)

        # theta: (Gram + I)^{-1} (-sum X A + Z_theta + U_theta), A from last sweep.
        a = s.w + s.z_pi + s.u_w - y
        rhs = -gram.xt_dot(a) + s.z_theta + s.u_theta
        if not np.isfinite(rhs).all():
            raise NonFiniteIterate(
                "ADMM iterate became non-finite; try a different eta"
            )
        s.theta = gram.solve(rhs)

        # Pi: singular value shrinkage of Z_Pi + U_Pi (skipped when pinned).
        if not fix_pi:
            svt = singular_value_threshold(s.z_pi + s.u_pi, svt_threshold)
            s.pi = svt.matrix
            svals = svt.singular_values_after
            if bound is not None:
                s.pi = np.clip(s.pi, -bound, bound)

        # Z_theta: soft threshold with the scale-weighted l1 level.
        s.z_theta = soft_threshold(s.theta - s.u_theta, l1_thresholds)

        # (Z_Pi, W): joint exact minimizer; with Pi pinned only W moves.
        xth = x @ s.theta
        a_tilde = xth - y + s.u_w
        b_tilde = -s.v - s.u_v
        if fix_pi:
            s.w = -(a_tilde + b_tilde) / 2.0
        else:
            c_tilde = -s.pi + s.u_pi
            s.z_pi, s.w = solve_zw_joint(a_tilde, b_tilde, c_tilde)

        # Scaled dual ascent.
        s.u_v = s.u_v + (s.v - s.w)
        s.u_w = s.u_w + (s.w - y + xth + s.z_pi)
        if not fix_pi:
            s.u_pi = s.u_pi + (s.z_pi - s.pi)
        s.u_theta = s.u_theta + (s.z_theta - s.theta)

        _check_finite(s)
        primal, dual = _residuals(s, y, xth)
        if callback is not None:
            callback(sweep, primal, dual)
        eps_primal, eps_dual = _tolerances(s, y, xth, config)
        if primal <= eps_primal and dual <= eps_dual:
            converged = True
            break

    theta_hat = s.z_theta.copy()
    pi_hat = s.pi.copy()
    objective = penalized_objective(data, theta_hat, pi_hat, config, scales)
    return QuantileFit(
        tau=config.tau,
        theta=theta_hat,
        pi=pi_hat,
        objective=objective,
        iterations=sweep,
        converged=converged,
        primal_residual=primal,
        dual_residual=dual,
        rank_estimate=estimate_rank(svals),
        sparsity_estimate=estimate_sparsity(theta_hat),
        singular_values=svals.copy(),
    )


def fit_no_covariates(y, config: SolverConfig, callback=None) -> QuantileFit:
    """Low-rank quantile recovery without covariates.

    Alternates a loss prox on Pi, singular value thresholding on the slack
    Z_Pi, and a dual step; the returned estimate is the Z_Pi iterate, whose
    thresholded spectrum carries the exact rank.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise DimensionMismatch(f"y must be 2-d, got shape {y.shape}")
    if not np.isfinite(y).all():
        raise ValueError("y contains non-finite entries")
    n, t_len = y.shape
    nt = n * t_len
    eta = config.eta
    kappa = 1.0 / (nt * eta)
    threshold = config.nu2 / eta
    squared = config.loss == "squared"

    pi = np.zeros((n, t_len))
    z_pi = np.zeros((n, t_len))
    u_pi = np.zeros((n, t_len))
    svals = np.zeros(min(n, t_len))

    converged = False
    primal = dual = np.inf
    sweep = 0
    for sweep in range(1, config.max_iter + 1):
        z_prev = z_pi
        target = y - z_pi + u_pi
        resid = prox_squared(target, eta, nt) if squared else prox_pinball(
            target, config.tau, kappa
        )
        pi = y - resid
        svt = singular_value_threshold(pi + u_pi, threshold)
        z_pi = svt.matrix
        svals = svt.singular_values_after
        if config.pi_inf_bound is not None:
            z_pi = np.clip(z_pi, -config.pi_inf_bound, config.pi_inf_bound)
        u_pi = u_pi + (pi - z_pi)

        if not (np.isfinite(pi).all() and np.isfinite(z_pi).all()):
            raise NonFiniteIterate("ADMM iterate became non-finite; try a different eta")
        primal = float(np.linalg.norm(pi - z_pi))
        dual = float(eta * np.linalg.norm(z_pi - z_prev))
        if callback is not None:
            callback(sweep, primal, dual)
        eps_primal = config.tol_abs * np.sqrt(nt) + config.tol_rel * max(
            np.linalg.norm(pi), np.linalg.norm(z_pi)
        )
        eps_dual = config.tol_abs * np.sqrt(nt) + config.tol_rel * eta * np.linalg.norm(
            u_pi
        )
        if primal <= eps_primal and dual <= eps_dual:
            converged = True
            break

    data = PanelData.without_covariates(y)
    objective = penalized_objective(data, np.zeros(0), z_pi, config, None)
    return QuantileFit(
        tau=config.tau,
        theta=np.zeros(0),
        pi=z_pi,
        objective=objective,
        iterations=sweep,
        converged=converged,
        primal_residual=primal,
        dual_residual=dual,
        rank_estimate=estimate_rank(svals),
        sparsity_estimate=0,
        singular_values=svals.copy(),
    )
