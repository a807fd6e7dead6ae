"""Binary logit classifier estimated by plain gradient ascent.

P(UP | z) is the logistic of W.z + b. Estimation maximizes the exact
log-likelihood with a fixed learning rate and no regularization; an
iteration cap bounds the separable case, where the unpenalized MLE
diverges. All probability and likelihood arithmetic stays in log space
so saturated scores never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .response import Label


@dataclass(frozen=True)
class LogitParams:
    weights: tuple
    bias: float

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "bias", float(self.bias))
        if not all(math.isfinite(w) for w in self.weights) or not math.isfinite(self.bias):
            raise ValueError("logit parameters must be finite")

    @property
    def dim(self) -> int:
        return len(self.weights)

    @classmethod
    def zeros(cls, dim: int) -> "LogitParams":
        return cls((0.0,) * dim, 0.0)


@dataclass(frozen=True)
class TrainingSample:
    z: tuple
    y: Label

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(float(v) for v in self.z))
        if not all(math.isfinite(v) for v in self.z):
            raise ValueError("training features must be finite")


@dataclass(frozen=True)
class FitConfig:
    learning_rate: float = 1e-3
    tolerance: float = 1e-6
    max_iter: int = 100_000
    init: LogitParams | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")


@dataclass(frozen=True)
class FitReport:
    """Estimation outcome; converged means the gradient max-norm reached
    tolerance before the iteration cap."""

    params: LogitParams
    iterations: int
    final_gradient_norm: float
    final_log_likelihood: float
    converged: bool
    likelihood_trace: tuple | None = None


def _sigmoid(s):
    e = np.exp(-np.abs(s))
    return np.where(s >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


def _softplus(s):
    return np.maximum(s, 0.0) + np.log1p(np.exp(-np.abs(s)))


def _design(samples):
    if not samples:
        raise ValueError("need at least one training sample")
    dim = len(samples[0].z)
    for sample in samples:
        if len(sample.z) != dim:
            raise ValueError(f"inconsistent feature dimension: {len(sample.z)} != {dim}")
    z = np.array([sample.z for sample in samples], dtype=float)
    y = np.array([1.0 if sample.y is Label.UP else 0.0 for sample in samples])
    return z, y


def prob_up(z, params: LogitParams) -> float:
    """P(UP | z): logistic of the linear score, stable at saturation."""
    if len(z) != params.dim:
        raise ValueError(f"feature dimension {len(z)} != model dimension {params.dim}")
    score = math.fsum(w * v for w, v in zip(params.weights, z)) + params.bias
    if score >= 0.0:
        return 1.0 / (1.0 + math.exp(-score))
    e = math.exp(score)
    return e / (1.0 + e)


def prob_down(z, params: LogitParams) -> float:
    return 1.0 - prob_up(z, params)


def _loglik(z, y, w, b) -> float:
    # overflow to inf/nan is detected by the callers, so the default
    # numpy warning is pure noise here
    with np.errstate(over="ignore", invalid="ignore"):
        s = z @ w + b
        return float(np.sum(y * s) - np.sum(_softplus(s)))


def _grad(z, y, w, b):
    with np.errstate(over="ignore", invalid="ignore"):
        resid = y - _sigmoid(z @ w + b)
        return z.T @ resid, float(resid.sum())


def log_likelihood(samples, params: LogitParams) -> float:
    """Exact log-likelihood of the labels under the model, always <= 0."""
    z, y = _design(samples)
    if z.shape[1] != params.dim:
        raise ValueError(f"feature dimension {z.shape[1]} != model dimension {params.dim}")
    return _loglik(z, y, np.array(params.weights), params.bias)


def gradient(samples, params: LogitParams) -> tuple:
    """Analytic gradient of log_likelihood: (dW, db).

    dW_i = sum over samples of (1[y=UP] - P(UP|z)) z_i, and db is the
    same sum without the feature factor.
    """
    z, y = _design(samples)
    if z.shape[1] != params.dim:
        raise ValueError(f"feature dimension {z.shape[1]} != model dimension {params.dim}")
    dw, db = _grad(z, y, np.array(params.weights), params.bias)
    return tuple(float(v) for v in dw), db


def _max_norm(dw, db) -> float:
    head = float(np.max(np.abs(dw))) if dw.size else 0.0
    return max(head, abs(db))


def fit(samples, config: FitConfig = FitConfig(), record_likelihood: bool = False) -> FitReport:
    """Gradient ascent from config.init (zeros by default).

    Stops when the gradient max-norm falls to config.tolerance or after
    config.max_iter updates. Non-finite likelihood or gradient raises
    NumericalError: it marks data pathology, never a stopping state.
    """
    z, y = _design(samples)
    dim = z.shape[1]
    init = config.init if config.init is not None else LogitParams.zeros(dim)
    if init.dim != dim:
        raise ValueError(f"init dimension {init.dim} != feature dimension {dim}")
    w = np.array(init.weights, dtype=float)
    b = init.bias
    eta = config.learning_rate
    trace = [] if record_likelihood else None
    iterations = 0
    # one score evaluation per iteration feeds likelihood and gradient
    # alike; the errstate wraps the whole loop because non-finite values
    # are detected explicitly below. The likelihood itself is skipped
    # when nobody records it (score finiteness covers the same failure,
    # since the stable softplus cannot overflow on finite scores) and
    # recomputed once at the exit point.
    with np.errstate(over="ignore", invalid="ignore"):
        while True:
            s = z @ w + b
            if trace is not None:
                ll = float(np.sum(y * s) - np.sum(_softplus(s)))
                healthy = math.isfinite(ll)
            else:
                ll = None
                healthy = bool(np.isfinite(s).all())
            resid = y - _sigmoid(s)
            dw = z.T @ resid
            db = float(resid.sum())
            if not (healthy and math.isfinite(db) and np.all(np.isfinite(dw))):
                raise NumericalError(
                    f"non-finite likelihood or gradient after {iterations} iterations"
                )
            if trace is not None:
                trace.append(ll)
            grad_norm = _max_norm(dw, db)
            if grad_norm <= config.tolerance:
                converged = True
                break
            if iterations >= config.max_iter:
                converged = False
                break
            w = w + eta * dw
            b = b + eta * db
            iterations += 1
    if ll is None:
        ll = _loglik(z, y, w, b)
    return FitReport(
        params=LogitParams(tuple(float(v) for v in w), float(b)),
        iterations=iterations,
        final_gradient_norm=grad_norm,
        final_log_likelihood=ll,
        converged=converged,
        likelihood_trace=None if trace is None else tuple(trace),
    )


def classify(p_up: float, threshold: float) -> Label:
    """UP iff p_up >= threshold; the boundary itself counts as UP."""
    if not 0.0 <= p_up <= 1.0:
        raise ValueError(f"p_up must lie in [0, 1], got {p_up!r}")
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold!r}")
    return Label.UP if p_up >= threshold else Label.DOWN


def fit_report_line(report: FitReport) -> str:
    """One-line log record of an estimation."""
    weights = "|".join(f"{w:.6g}" for w in report.params.weights)
    return (
        f"converged={'yes' if report.converged else 'no'}"
        f" iterations={report.iterations}"
        f" grad_norm={report.final_gradient_norm:.6g}"
        f" log_likelihood={report.final_log_likelihood:.6g}"
        f" bias={report.params.bias:.6g}"
        f" weights={weights}"
    )
