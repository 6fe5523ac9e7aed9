"""Bayesian logistic regression with independent N(0, v0) coefficient priors.

The MAP estimate comes from damped Newton iterations (step halving whenever
the penalized objective does not increase). The log marginal likelihood is the
Laplace approximation

    lml = log p(y | beta_hat) + log N(beta_hat | 0, v0 I)
          + (d/2) log(2 pi) - (1/2) log det H,

with H the negative log-posterior curvature X'WX + I/v0 at the mode. Features
are never standardized internally: coefficients stay on the raw item-score
scale so exp(beta) reads as odds per score point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from . import _kernels
from ._validation import as_labels, as_matrix, as_row
from .cohort import FeatureView
from .errors import SingularHessian

DEFAULT_V0 = 1000.0
_GRAD_TOL = 1e-8
_MAX_ITER = 100
_MAX_HALVINGS = 20
_PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LogitModel:
    feature_names: tuple[str, ...] = ()
    v0: float = DEFAULT_V0

    def __post_init__(self):
        if self.v0 <= 0:
            raise ValueError("prior variance v0 must be positive")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("duplicate feature names")


@dataclass
class LogitFit:
    beta_mode: np.ndarray  # intercept first
    hessian_at_mode: np.ndarray
    lml: float
    converged: bool
    n_iterations: int
    feature_names: tuple[str, ...]
    v0: float

    @property
    def n_features(self):
        return len(self.beta_mode) - 1


@dataclass(frozen=True)
class OddsRatioEstimate:
    feature: str
    or_point: float
    ci_low: float
    ci_high: float


def log_joint(beta, X1, y, v0):
    """Log likelihood plus full log prior density (normalizing constant
    included) at beta; X1 carries the intercept column."""
    eta = X1 @ beta
    ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    d = beta.shape[0]
    return ll - 0.5 * d * np.log(2.0 * np.pi * v0) - 0.5 * float(beta @ beta) / v0


def log_joint_gradient(beta, X1, y, v0):
    mu = expit(X1 @ beta)
    return X1.T @ (y - mu) - beta / v0


def _hessian(beta, X1, v0):
    mu = expit(X1 @ beta)
    w = mu * (1.0 - mu)
    return (X1.T * w) @ X1 + np.eye(X1.shape[1]) / v0


def _design(X, n):
    if X is None or (hasattr(X, "shape") and X.shape[1] == 0):
        return np.ones((n, 1))
    X = as_matrix(X)
    return np.column_stack([np.ones(X.shape[0]), X])


def fit_map(view, model: LogitModel | None = None, v0: float | None = None) -> LogitFit:
    """Damped-Newton MAP fit. Accepts a FeatureView restricted to
    ``model.feature_names`` or a plain (X, y) pair; X may be None or
    zero-column for an intercept-only model.

    Convergence: gradient max-norm < 1e-8, at most 100 iterations. A fit that
    exhausts the budget is returned flagged (``converged=False``) rather than
    raised; callers choosing strict behavior can inspect the flag.
    """
    if isinstance(view, FeatureView):
        names = model.feature_names if model is not None else tuple(view.feature_names)
        cols = [view.feature_names.index(f) for f in names]
        X = view.matrix[:, cols] if cols else None
        y = view.labels
    else:
        X, y = view
        names = model.feature_names if model is not None else (
            tuple(f"x{i}" for i in range(as_matrix(X).shape[1])) if X is not None else ())
    if v0 is None:
        v0 = model.v0 if model is not None else DEFAULT_V0

    y = as_labels(np.asarray(y)).astype(np.float64)
    X1 = np.ascontiguousarray(_design(X, y.shape[0]))

    beta, converged, it, status, lml, H = _kernels.newton_map(
        X1, y, v0, _GRAD_TOL, _MAX_ITER, _MAX_HALVINGS)
    if status == 1:
        raise SingularHessian("Hessian not positive definite after jitter")
    if status == 2:
        raise SingularHessian("Hessian at the mode is not positive definite")
    return LogitFit(beta_mode=beta, hessian_at_mode=H, lml=float(lml),
                    converged=bool(converged), n_iterations=it,
                    feature_names=tuple(names), v0=v0)


def laplace_lml(fit: LogitFit, view=None, model: LogitModel | None = None) -> float:
    """The Laplace log marginal likelihood of a fit (recorded at fit time;
    recomputed from the stored mode and Hessian when a view is supplied)."""
    if view is None:
        return fit.lml
    if isinstance(view, FeatureView):
        cols = [view.feature_names.index(f) for f in fit.feature_names]
        X = view.matrix[:, cols] if cols else None
        y = view.labels
    else:
        X, y = view
    y = np.asarray(y, dtype=np.float64)
    X1 = _design(X, y.shape[0])
    sign, logdet = np.linalg.slogdet(fit.hessian_at_mode)
    if sign <= 0:
        raise SingularHessian("Hessian at the mode is not positive definite")
    d = X1.shape[1]
    return float(log_joint(fit.beta_mode, X1, y, fit.v0)
                 + 0.5 * d * np.log(2.0 * np.pi) - 0.5 * logdet)


def predict_prob(fit: LogitFit, row) -> float:
    """Plug-in probability expit(beta . (1, row)), clamped away from 0/1 only
    by a floating-point underflow guard. Intercept-only fits accept (and
    ignore) rows of any length."""
    if fit.n_features == 0:
        eta = fit.beta_mode[0]
    else:
        row = as_row(row, fit.n_features)
        eta = fit.beta_mode[0] + float(fit.beta_mode[1:] @ row)
    p = float(expit(eta))
    return min(max(p, _PROB_FLOOR), 1.0 - _PROB_FLOOR)


def predict_prob_matrix(fit: LogitFit, X) -> np.ndarray:
    if fit.n_features == 0:
        n = np.asarray(X).shape[0] if X is not None else 1
        eta = np.full(n, fit.beta_mode[0])
    else:
        X = as_matrix(X)
        if X.shape[1] != fit.n_features:
            from .errors import DimensionMismatch
            raise DimensionMismatch(
                f"matrix has {X.shape[1]} features, model expects {fit.n_features}")
        eta = fit.beta_mode[0] + X @ fit.beta_mode[1:]
    return np.clip(expit(eta), _PROB_FLOOR, 1.0 - _PROB_FLOOR)


def coefficient_sds(fit: LogitFit) -> np.ndarray:
    """Posterior sds from the inverse-Hessian diagonal (Laplace covariance)."""
    d = fit.hessian_at_mode.shape[0]
    try:
        cov = cho_solve(cho_factor(fit.hessian_at_mode), np.eye(d))
    except np.linalg.LinAlgError:
        raise SingularHessian("cannot invert Hessian for coefficient sds") from None
    return np.sqrt(np.diag(cov))


def odds_ratios(fit: LogitFit) -> list[OddsRatioEstimate]:
    """exp(beta_j) with 95% intervals exp(beta_j +/- 1.96 sd_j), one entry per
    non-intercept coefficient."""
    sds = coefficient_sds(fit)
    out = []
    for j, name in enumerate(fit.feature_names, start=1):
        b, sd = fit.beta_mode[j], sds[j]
        out.append(OddsRatioEstimate(
            feature=name,
            or_point=float(np.exp(b)),
            ci_low=float(np.exp(b - 1.96 * sd)),
            ci_high=float(np.exp(b + 1.96 * sd)),
        ))
    return out


def write_fit_summary(fit: LogitFit, fh, header_comment=None):
    """CSV summary: feature, beta, sd, OR, ci_low, ci_high; lml on a final
    comment-free labelled line."""
    sds = coefficient_sds(fit)
    if header_comment is not None:
        fh.write(f"# {header_comment}\n")
    fh.write("feature,beta,sd,or,ci_low,ci_high\n")
    fh.write(f"intercept,{fit.beta_mode[0]!r},{sds[0]!r},,,\n")
    for est, j in zip(odds_ratios(fit), range(1, len(fit.beta_mode))):
        fh.write(f"{est.feature},{fit.beta_mode[j]!r},{sds[j]!r},"
                 f"{est.or_point!r},{est.ci_low!r},{est.ci_high!r}\n")
    fh.write(f"lml,{fit.lml!r},,,,\n")
