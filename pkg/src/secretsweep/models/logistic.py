"""Logistic regression for code findings.

Full-batch gradient descent on the mean log-loss with an L2 penalty of
(lambda / 2n) * ||w||^2, zero-initialized, fixed learning rate. Training
stops after the configured epochs or earlier once the gradient infinity
norm falls below 1e-6.
"""

import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

import numpy as np

from ..features import FeatureVector, stack_features
from . import kernels
from .config import TrainConfig
from .errors import DivergenceError, TrainingError

GRAD_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class LogisticModel:
    weights: np.ndarray
    bias: float
    threshold: float = 0.5
    spec_fingerprint: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", float(self.bias))
        if weights.ndim != 1:
            raise ValueError("weights must be a 1-d vector")
        if not np.isfinite(weights).all() or not math.isfinite(self.bias):
            raise ValueError("model parameters must be finite")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")

    @property
    def dimension(self) -> int:
        return len(self.weights)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _as_labels(labels: Sequence[int], n: int) -> np.ndarray:
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (n,):
        raise ValueError("labels must align one-to-one with the vectors")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be 0 or 1")
    return y


def _matrix(vectors: Sequence[FeatureVector]) -> kernels.SparseMatrix:
    indptr, indices, data, shape = stack_features(vectors)
    return kernels.SparseMatrix.from_arrays(indptr, indices, data, shape)


def _loss(matrix, w, b, y, lam):
    z = kernels.matvec(matrix, w) + b
    per_row = np.logaddexp(0.0, z) - y * z
    n = matrix.n_rows
    return float(np.mean(per_row) + (lam / (2.0 * n)) * np.dot(w, w))


def _grads(matrix, w, b, y, lam):
    n = matrix.n_rows
    p = _sigmoid(kernels.matvec(matrix, w) + b)
    residual = (p - y) / n
    grad_w = kernels.rmatvec(matrix, residual) + (lam / n) * w
    grad_b = float(np.sum(residual))
    return grad_w, grad_b


def gradient_logloss(model: LogisticModel,
                     vectors: Sequence[FeatureVector],
                     labels: Sequence[int],
                     l2_lambda: float = 0.0) -> Tuple[np.ndarray, float]:
    """Analytic gradient of the regularized mean log-loss at the model.

    Returns (weight gradient, bias gradient); the bias carries no penalty.
    """
    if not vectors:
        raise TrainingError("gradient needs a non-empty batch")
    matrix = _matrix(vectors)
    if matrix.n_cols != model.dimension:
        raise ValueError(
            f"feature dimension {matrix.n_cols} does not match "
            f"model dimension {model.dimension}"
        )
    y = _as_labels(labels, matrix.n_rows)
    return _grads(matrix, model.weights, model.bias, y, l2_lambda)


def train_logistic(vectors: Sequence[FeatureVector],
                   labels: Sequence[int],
                   config: TrainConfig = TrainConfig()) -> LogisticModel:
    if not vectors:
        raise TrainingError("cannot train on empty data")
    matrix = _matrix(vectors)
    y = _as_labels(labels, matrix.n_rows)
    if len(np.unique(y)) < 2:
        raise TrainingError("training data must contain both classes")

    lam = config.l2_lambda
    w = np.zeros(matrix.n_cols, dtype=np.float64)
    b = 0.0
    epochs_run = 0
    loss_curve = []
    for _ in range(config.epochs):
        loss = _loss(matrix, w, b, y, lam)
        if not math.isfinite(loss):
            raise DivergenceError(
                "loss became non-finite; try a smaller learning_rate"
            )
        loss_curve.append(loss)
        grad_w, grad_b = _grads(matrix, w, b, y, lam)
        if max(np.max(np.abs(grad_w), initial=0.0), abs(grad_b)) < GRAD_TOL:
            break
        w -= config.learning_rate * grad_w
        b -= config.learning_rate * grad_b
        epochs_run += 1
    final_loss = _loss(matrix, w, b, y, lam)
    if not math.isfinite(final_loss):
        raise DivergenceError(
            "loss became non-finite; try a smaller learning_rate"
        )
    if epochs_run == len(loss_curve):
        loss_curve.append(final_loss)

    return LogisticModel(
        weights=w,
        bias=b,
        metadata={
            "config": config.to_dict(),
            "epochs_run": epochs_run,
            "n_rows": matrix.n_rows,
            "n_positive": int(y.sum()),
            "loss_curve": loss_curve,
            "final_loss": final_loss,
        },
    )


def predict_logistic(model: LogisticModel, fv: FeatureVector) -> float:
    """P(positive) for a single feature vector."""
    if fv.dimension != model.dimension:
        raise ValueError(
            f"feature dimension {fv.dimension} does not match "
            f"model dimension {model.dimension}"
        )
    z = model.bias + sum(model.weights[i] * v for i, v in fv.entries)
    return float(_sigmoid(np.array([z]))[0])


def predict_logistic_many(model: LogisticModel,
                          vectors: Sequence[FeatureVector]) -> np.ndarray:
    if not vectors:
        return np.zeros(0, dtype=np.float64)
    matrix = _matrix(vectors)
    if matrix.n_cols != model.dimension:
        raise ValueError(
            f"feature dimension {matrix.n_cols} does not match "
            f"model dimension {model.dimension}"
        )
    return _sigmoid(kernels.matvec(matrix, model.weights) + model.bias)
