"""
Linear probe: L2-regularised multinomial logistic regression trained
identically on every representation, plus classification metrics.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import optimize
from scipy.special import logsumexp, softmax
from sklearn.metrics import accuracy_score, precision_recall_fscore_support

from .errors import InputValidationError
from .numerics import as_matrix

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA = 1.0
DEFAULT_MAX_ITER = 500
DEFAULT_TOL = 1e-6


@dataclass(frozen=True)
class LogisticModel:
    """Fitted multinomial logistic regression; weights are (features x classes)."""

    weights: np.ndarray
    intercepts: np.ndarray
    class_count: int
    l2_lambda: float
    iterations: int
    gradient_norm: float
    converged: bool
    loss_history: Tuple[float, ...] = ()

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    macro_f1: float
    precision: Tuple[float, ...]
    recall: Tuple[float, ...]
    f1: Tuple[float, ...]


def _labels(y, n_rows: Optional[int] = None) -> np.ndarray:
    labels = np.asarray(y)
    if labels.ndim != 1:
        raise InputValidationError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and not np.issubdtype(labels.dtype, np.integer):
        raise InputValidationError(f"labels must be integers, got {labels.dtype}")
    if n_rows is not None and labels.shape[0] != n_rows:
        raise InputValidationError(f"expected {n_rows} labels, got {labels.shape[0]}")
    return labels.astype(np.int64)


def loss_and_gradient(theta: np.ndarray, X: np.ndarray, Y: np.ndarray, l2_lambda: float) -> Tuple[float, np.ndarray]:
    """
    Summed cross-entropy plus (lambda/2)||W||_F^2 and its gradient.

    Args:
        theta: flattened weights (features*classes) followed by intercepts (classes)
        X: design matrix (rows x features)
        Y: one-hot targets (rows x classes)
        l2_lambda: penalty on weights; intercepts are not penalised

    Returns:
        (loss, gradient) with the gradient in theta's layout
    """
    p, c = X.shape[1], Y.shape[1]
    W = theta[: p * c].reshape(p, c)
    b = theta[p * c :]
    logits = X @ W + b
    log_norm = logsumexp(logits, axis=1)
    loss = float(np.sum(log_norm) - np.sum(logits * Y) + 0.5 * l2_lambda * np.sum(W * W))
    residual = np.exp(logits - log_norm[:, None]) - Y
    grad_w = X.T @ residual + l2_lambda * W
    grad_b = residual.sum(axis=0)
    return loss, np.concatenate([grad_w.ravel(), grad_b])


def train_logistic(
    Xtr,
    ytr,
    l2_lambda: float = DEFAULT_LAMBDA,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
    class_count: Optional[int] = None,
) -> LogisticModel:
    """
    Fit by full-batch L-BFGS from an all-zero start. The objective is convex,
    so identical inputs always give identical weights.
    """
    X = as_matrix(Xtr, name="training features")
    y = _labels(ytr, X.shape[0])
    if l2_lambda < 0:
        raise InputValidationError(f"l2_lambda must be >= 0, got {l2_lambda}")
    if np.unique(y).size < 2:
        raise InputValidationError("training labels contain a single class")
    if y.min() < 0:
        raise InputValidationError("labels must be nonnegative class ids")
    c = int(class_count) if class_count is not None else int(y.max()) + 1
    if y.max() >= c:
        raise InputValidationError(f"label {int(y.max())} outside [0, {c})")

    Y = np.zeros((X.shape[0], c))
    Y[np.arange(X.shape[0]), y] = 1.0
    p = X.shape[1]

    last = {"theta": None, "loss": None}
    history = []

    def objective(theta):
        loss, grad = loss_and_gradient(theta, X, Y, l2_lambda)
        last["theta"], last["loss"] = theta.copy(), loss
        return loss, grad

    def record(theta):
        if last["theta"] is not None and np.array_equal(theta, last["theta"]):
            history.append(last["loss"])
        else:
            history.append(loss_and_gradient(theta, X, Y, l2_lambda)[0])

    theta0 = np.zeros(p * c + c)
    history.append(loss_and_gradient(theta0, X, Y, l2_lambda)[0])
    result = optimize.minimize(
        objective,
        theta0,
        jac=True,
        method="L-BFGS-B",
        callback=record,
        options={"maxiter": max_iter, "gtol": tol, "ftol": 1e-15},
    )
    _, grad = loss_and_gradient(result.x, X, Y, l2_lambda)
    grad_norm = float(np.linalg.norm(grad))
    if not result.success:
        logger.debug(f"L-BFGS stopped without convergence after {result.nit} iterations: {result.message}")

    return LogisticModel(
        weights=result.x[: p * c].reshape(p, c).copy(),
        intercepts=result.x[p * c :].copy(),
        class_count=c,
        l2_lambda=float(l2_lambda),
        iterations=int(result.nit),
        gradient_norm=grad_norm,
        converged=bool(grad_norm <= tol or result.success),
        loss_history=tuple(float(v) for v in history),
    )


def predict_proba(model: LogisticModel, X) -> np.ndarray:
    x = as_matrix(X)
    if x.shape[1] != model.feature_dim:
        raise InputValidationError(f"model expects {model.feature_dim} features, got {x.shape[1]}")
    return softmax(x @ model.weights + model.intercepts, axis=1)


def predict(model: LogisticModel, X) -> np.ndarray:
    return np.argmax(predict_proba(model, X), axis=1)


def compute_metrics(y_true, y_pred, class_count: int) -> Metrics:
    """Accuracy plus per-class and macro-averaged F1 over all class_count classes."""
    t = _labels(y_true)
    p = _labels(y_pred)
    if t.shape != p.shape:
        raise InputValidationError(f"y_true and y_pred lengths differ: {t.shape[0]} vs {p.shape[0]}")
    if t.size == 0:
        raise InputValidationError("cannot score an empty prediction set")
    for name, arr in (("y_true", t), ("y_pred", p)):
        if arr.min() < 0 or arr.max() >= class_count:
            raise InputValidationError(f"{name} contains labels outside [0, {class_count})")

    precision, recall, f1, _ = precision_recall_fscore_support(t, p, labels=list(range(class_count)), average=None, zero_division=0)
    return Metrics(
        accuracy=float(accuracy_score(t, p)),
        macro_f1=float(np.mean(f1)),
        precision=tuple(float(v) for v in precision),
        recall=tuple(float(v) for v in recall),
        f1=tuple(float(v) for v in f1),
    )
