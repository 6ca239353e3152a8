"""Parametric quantile regression for MBUR responses.

The response quantile at level u is linked to covariates through
``link_inverse(link, x'beta)``; the implied per-observation distribution
parameter is ``theta_i = theta_from_phi(spec, x_i'beta)``.  Coefficients are
estimated by maximum likelihood with a damped Gauss-Newton scheme: the step
solves ``[G'G + lambda*I] d = g`` where G holds per-observation score rows
and g is the full gradient, i.e. Fisher scoring with the outer-product
information approximation.  lambda is multiplied by 10 on rejected steps and
divided by 10 on accepted ones.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .distribution import BOUNDARY_TOL, _log1mexp
from .links import Link, QuantileSpec, link_apply, theta_from_phi

__all__ = ["DesignMatrix", "LmConfig", "FitResult", "neg_loglik", "score",
           "lm_fit", "vcov_of", "predict_quantile", "quantile_change_series"]


@dataclass(frozen=True)
class DesignMatrix:
    """n x (k+1) design with a leading intercept column of ones."""

    X: np.ndarray
    names: tuple

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if not np.all(np.isfinite(X)):
            raise ValueError("design matrix entries must be finite")
        if not np.allclose(X[:, 0], 1.0):
            raise ValueError("first design column must be the intercept (all ones)")
        n, p = X.shape
        if n < p + 1:
            raise ValueError(f"need more observations than parameters: n={n}, k+1={p}")
        names = tuple(self.names)
        if len(names) != p:
            raise ValueError(f"got {len(names)} names for {p} columns")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "names", names)

    @classmethod
    def with_intercept(cls, covariates, names=None) -> "DesignMatrix":
        """Prepend an intercept column to a covariate matrix."""
        Z = np.atleast_2d(np.asarray(covariates, dtype=float))
        if Z.shape[0] == 1 and Z.shape[1] > 1 and np.ndim(covariates) == 1:
            Z = Z.T
        n, k = Z.shape
        if names is None:
            names = [f"x{j + 1}" for j in range(k)]
        return cls(np.column_stack([np.ones(n), Z]), ("intercept", *names))

    @property
    def n(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class LmConfig:
    """Damping schedule and stopping rules for the fitting loop."""

    lambda0: float = 1e-3
    lambda_up: float = 10.0
    lambda_down: float = 0.1
    max_iter: int = 500
    grad_tol: float = 1e-8
    step_tol: float = 1e-12

    def __post_init__(self):
        if self.lambda0 <= 0 or self.grad_tol <= 0 or self.step_tol <= 0:
            raise ValueError("tolerances and lambda0 must be positive")
        if self.lambda_up <= 1.0 or not (0.0 < self.lambda_down < 1.0):
            raise ValueError("lambda factors must move lambda in opposite directions")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class FitResult:
    """Converged (or best-effort) coefficient estimate and its uncertainty."""

    beta: np.ndarray
    loglik: float
    vcov: np.ndarray
    se: np.ndarray
    converged: bool
    iterations: int
    lambda_final: float
    spec: QuantileSpec
    stop_reason: str
    vcov_pseudo: bool
    nll_trace: np.ndarray


def _check_response(y) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    bad = ~np.isfinite(y) | (y <= BOUNDARY_TOL) | (y >= 1.0 - BOUNDARY_TOL)
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        raise ValueError(f"response must lie strictly inside (0, 1); "
                         f"offending value {y[idx]!r} at position {idx}")
    return y


def _theta_vector(beta, X, spec):
    phi = X @ np.asarray(beta, dtype=float)
    return theta_from_phi(spec, phi), phi


def _design_array(X) -> np.ndarray:
    if isinstance(X, DesignMatrix):
        return X.X
    return np.atleast_2d(np.asarray(X, dtype=float))


def neg_loglik(beta, X, y, spec: QuantileSpec) -> float:
    """Negative log-likelihood; non-finite evaluations come back as +inf."""
    y = _check_response(y)
    Xm = _design_array(X)
    if y.size != Xm.shape[0]:
        raise ValueError(f"response length {y.size} does not match design rows {Xm.shape[0]}")
    th, _ = _theta_vector(beta, Xm, spec)
    w = np.log(y)
    with np.errstate(all="ignore"):
        lp = math.log(6.0) - np.log(th) + _log1mexp(w / th) + (2.0 / th - 1.0) * w
        total = float(np.sum(lp))
    return math.inf if not math.isfinite(total) else -total


def score(beta, X, y, spec: QuantileSpec) -> np.ndarray:
    """Per-observation gradient rows of the log-likelihood, shape n x (k+1).

    Row i is d l_i / d beta; every covariate column equals the intercept
    column times that covariate, because the chain through theta_i is shared:

        d l_i / d beta_j = (d l_i/d theta_i) * (d theta_i/d phi_i) * x_ij
    """
    y = _check_response(y)
    Xm = _design_array(X)
    if y.size != Xm.shape[0]:
        raise ValueError(f"response length {y.size} does not match design rows {Xm.shape[0]}")
    th, phi = _theta_vector(beta, Xm, spec)
    w = np.log(y)
    with np.errstate(all="ignore"):
        # d l_i/d theta = -1/th - 2w/th^2 + w/(th^2 * expm1(-w/th))
        dldth = -1.0 / th - 2.0 * w / th**2 + w / (th**2 * np.expm1(-w / th))
        if spec.link is Link.LOGIT:
            # d theta/d phi = (1 - mu)/ln(c); 1 - mu = sigmoid(-phi)
            one_minus_mu = np.exp(np.where(phi <= 0.0,
                                           -np.log1p(np.exp(np.minimum(phi, 0.0))),
                                           -phi - np.log1p(np.exp(-np.abs(phi)))))
            dthdphi = one_minus_mu / spec.ln_c
        else:
            dthdphi = th
        g = dldth * dthdphi
    return g[:, None] * Xm


def vcov_of(G: np.ndarray) -> np.ndarray:
    """Coefficient covariance (G'G)^{-1} at the optimum, damping excluded.

    Falls back to the Moore-Penrose pseudo-inverse with a RuntimeWarning when
    G'G is singular or numerically rank-deficient.  The result is symmetrized.
    """
    A = G.T @ G
    try:
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
            raise np.linalg.LinAlgError("ill-conditioned outer-product matrix")
        V = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        warnings.warn("outer-product information is singular; using pseudo-inverse",
                      RuntimeWarning, stacklevel=2)
        V = np.linalg.pinv(A)
    return 0.5 * (V + V.T)


def _default_init(X: DesignMatrix, y, spec: QuantileSpec) -> np.ndarray:
    """Intercept matching the empirical u-quantile of y, zero slopes."""
    beta = np.zeros(X.X.shape[1])
    q = float(np.quantile(y, spec.u))
    if 0.0 < q < 1.0:
        b0 = link_apply(spec.link, q)
        if math.isfinite(b0):
            beta[0] = b0
    return beta


def lm_fit(X: DesignMatrix, y, spec: QuantileSpec, init=None,
           cfg: LmConfig = None) -> FitResult:
    """Damped Gauss-Newton maximum-likelihood fit.

    Accepts a step only when it strictly decreases the negative
    log-likelihood; otherwise the damping factor grows and the step is
    recomputed from the same point.  Stops when the gradient max-norm falls
    below grad_tol*n, the proposed step norm falls below step_tol, or
    max_iter is exhausted.  Non-convergence is reported in the result, never
    raised.
    """
    cfg = cfg or LmConfig()
    y = _check_response(y)
    p = X.X.shape[1]
    if init is None:
        beta = _default_init(X, y, spec)
    else:
        beta = np.asarray(init, dtype=float).ravel()
        if beta.size != p or not np.all(np.isfinite(beta)):
            raise ValueError(f"init must be a finite vector of length {p}")

    lam = cfg.lambda0
    n = y.size
    f = neg_loglik(beta, X, y, spec)
    trace = [f]
    stop_reason = "max_iter"
    iterations = cfg.max_iter
    eye = np.eye(p)

    for it in range(cfg.max_iter):
        G = score(beta, X, y, spec)
        g = G.sum(axis=0)
        if not np.all(np.isfinite(g)):
            lam *= cfg.lambda_up
            continue
        if np.max(np.abs(g)) < cfg.grad_tol * n:
            stop_reason, iterations = "gradient", it
            break
        try:
            step = np.linalg.solve(G.T @ G + lam * eye, g)
        except np.linalg.LinAlgError:
            lam *= cfg.lambda_up
            continue
        if not np.all(np.isfinite(step)):
            lam *= cfg.lambda_up
            continue
        if float(np.linalg.norm(step)) < cfg.step_tol:
            stop_reason, iterations = "step", it
            break
        f_new = neg_loglik(beta + step, X, y, spec)
        accept = f_new < f
        if not accept and f_new == f:
            # the objective has hit float resolution; keep contracting on the
            # gradient so the stationarity tolerance stays reachable
            g_new = score(beta + step, X, y, spec).sum(axis=0)
            accept = (np.all(np.isfinite(g_new))
                      and np.max(np.abs(g_new)) < np.max(np.abs(g)))
        if accept:
            beta = beta + step
            f = f_new
            lam = max(lam * cfg.lambda_down, 1e-12)
            trace.append(f)
        else:
            lam *= cfg.lambda_up

    G = score(beta, X, y, spec)
    grad_norm = float(np.max(np.abs(G.sum(axis=0))))
    converged = grad_norm < cfg.grad_tol * n
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        vcov = vcov_of(G)
    vcov_pseudo = any(issubclass(c.category, RuntimeWarning) for c in caught)
    se = np.sqrt(np.clip(np.diag(vcov), 0.0, None))
    return FitResult(beta=beta, loglik=-neg_loglik(beta, X, y, spec), vcov=vcov,
                     se=se, converged=converged, iterations=iterations,
                     lambda_final=lam, spec=spec, stop_reason=stop_reason,
                     vcov_pseudo=vcov_pseudo, nll_trace=np.asarray(trace))


def predict_quantile(beta, x, spec: QuantileSpec, u_target: float = None) -> float:
    """Fitted conditional quantile at a covariate row (intercept included).

    Without ``u_target`` this is the model's own level-u quantile,
    link_inverse(link, x'beta).  With ``u_target`` it is c(u_target)**theta(x)
    for the implied per-observation parameter theta(x).
    """
    from .links import compute_c, link_inverse

    x = np.asarray(x, dtype=float).ravel()
    beta = np.asarray(beta, dtype=float).ravel()
    if x.size != beta.size:
        raise ValueError(f"covariate row length {x.size} does not match beta length {beta.size}")
    phi = float(x @ beta)
    if u_target is None:
        return float(link_inverse(spec.link, phi))
    u_target = float(u_target)
    if not (0.0 < u_target < 1.0):
        raise ValueError(f"target quantile level must lie in (0, 1); got {u_target}")
    th = theta_from_phi(spec, phi)
    return float(max(math.exp(th * math.log(compute_c(u_target))), np.finfo(float).tiny))


def quantile_change_series(fitted) -> np.ndarray:
    """Consecutive (absolute, relative) changes of an ordered quantile series.

    Element i-1 holds (Q_i - Q_{i-1}, (Q_i - Q_{i-1})/Q_{i-1}).  A zero
    predecessor yields NaN as the undefined-relative-change marker.
    """
    q = np.asarray(fitted, dtype=float).ravel()
    if q.size < 2:
        raise ValueError("need at least 2 fitted quantiles")
    if np.any(q < 0.0) or not np.all(np.isfinite(q)):
        raise ValueError("fitted quantiles must be finite and nonnegative")
    absolute = np.diff(q)
    prev = q[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        relative = np.where(prev == 0.0, np.nan, absolute / prev)
    return np.column_stack([absolute, relative])
