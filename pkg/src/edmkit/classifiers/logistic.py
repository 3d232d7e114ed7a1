from dataclasses import dataclass

import numpy as np

from edmkit.classifiers.base import check_field_types
from edmkit.errors import DegenerateLabels, EmptyTrainingSet, InvalidParam

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class LogisticConfig:
    """
    Multinomial logistic regression trained by full-batch gradient descent.

    ``seed`` is kept for config symmetry with the other classifiers; zero
    initialisation and full batches make training deterministic without it.
    """

    features: str = "raw"
    l2: float = 1e-2
    max_iters: int = 200
    learning_rate: float = 0.1
    schedule: str = "constant"
    seed: int = 0

    def __post_init__(self):
        check_field_types(self)
        if self.features not in ("raw", "summary"):
            raise InvalidParam(f"Unsupported feature set: {self.features}")
        if self.l2 < 0:
            raise InvalidParam(f"l2 must be >= 0, got {self.l2}")
        if self.max_iters < 0:
            raise InvalidParam(f"max_iters must be >= 0, got {self.max_iters}")
        if self.schedule not in ("constant", "inverse-sqrt"):
            raise InvalidParam(f"Unsupported learning-rate schedule: {self.schedule}")


def summary_features(X: np.ndarray) -> np.ndarray:
    """
    Per-prefix mean, population std, min, max, least-squares slope and lag-1 autocorrelation.

    Args:
        X (np.ndarray): Prefixes, shape (n, t).

    Returns:
        np.ndarray: Shape (n, 6).
    """
    X = np.asarray(X, dtype=float)
    n, t = X.shape
    mean = X.mean(axis=1)
    std = X.std(axis=1)
    centered = X - mean[:, None]

    time = np.arange(t, dtype=float)
    time_centered = time - time.mean()
    denom = np.sum(time_centered**2)
    slope = centered @ time_centered / denom if denom > 0 else np.zeros(n)

    variance_sum = np.sum(centered**2, axis=1)
    lagged = np.sum(centered[:, :-1] * centered[:, 1:], axis=1) if t > 1 else np.zeros(n)
    autocorr = np.divide(lagged, variance_sum, out=np.zeros(n), where=variance_sum > 0)

    return np.column_stack([mean, std, X.min(axis=1), X.max(axis=1), slope, autocorr])


def softmax(scores: np.ndarray) -> np.ndarray:
    exp_scores = np.exp(scores - scores.max(axis=1, keepdims=True))
    return exp_scores / exp_scores.sum(axis=1, keepdims=True)


def one_hot_encode(y: np.ndarray, n_classes: int) -> np.ndarray:
    one_hot = np.zeros((len(y), n_classes))
    one_hot[np.arange(len(y)), y] = 1.0
    return one_hot


class LogisticClassifier:
    def __init__(self, config: LogisticConfig):
        self.config = config
        self.mean_ = None
        self.scale_ = None
        self.weights_ = None
        self.bias_ = None

    def _features(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return summary_features(X) if self.config.features == "summary" else X

    def _standardize(self, F: np.ndarray) -> np.ndarray:
        return (F - self.mean_) / self.scale_

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "LogisticClassifier":
        """
        Minimize L2-regularized multinomial cross-entropy from all-zero weights.

        Args:
            X (np.ndarray): Prefixes, shape (n, t).
            y (np.ndarray): Class indices.
            n_classes (int): Number of output classes.

        Raises:
            EmptyTrainingSet: If ``X`` is empty.
            DegenerateLabels: If fewer than two classes are present.
        """
        y = np.asarray(y, dtype=int)
        if len(y) == 0:
            raise EmptyTrainingSet("logistic regression needs at least one training series")
        if len(np.unique(y)) < 2:
            raise DegenerateLabels("logistic regression needs at least two classes in the training set")

        F = self._features(X)
        if not np.all(np.isfinite(F)):
            raise InvalidParam("features must be finite")
        self.mean_ = F.mean(axis=0)
        std = F.std(axis=0)
        self.scale_ = np.where(std < STD_FLOOR, 1.0, std)
        Z = self._standardize(F)

        m, d = Z.shape
        Y = one_hot_encode(y, n_classes)
        self.weights_ = np.zeros((d, n_classes))
        self.bias_ = np.zeros(n_classes)

        for iteration in range(self.config.max_iters):
            probs = softmax(Z @ self.weights_ + self.bias_)
            residual = probs - Y
            weights_gradient = Z.T @ residual / m + self.config.l2 * self.weights_
            bias_gradient = residual.sum(axis=0) / m
            rate = self.config.learning_rate
            if self.config.schedule == "inverse-sqrt":
                rate = rate / np.sqrt(1.0 + iteration)
            self.weights_ -= rate * weights_gradient
            self.bias_ -= rate * bias_gradient
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        Z = self._standardize(self._features(X))
        return softmax(Z @ self.weights_ + self.bias_)
