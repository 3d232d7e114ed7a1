from dataclasses import dataclass

import numpy as np

from edmkit.classifiers.base import check_field_types
from edmkit.errors import EmptyTrainingSet, InvalidParam

INVERSE_DISTANCE_EPS = 1e-9


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5
    weighting: str = "uniform"

    def __post_init__(self):
        check_field_types(self)
        if self.k < 1:
            raise InvalidParam(f"k must be >= 1, got {self.k}")
        if self.weighting not in ("uniform", "inverse-distance"):
            raise InvalidParam(f"Unsupported weighting: {self.weighting}")


def _distances(train: np.ndarray, queries: np.ndarray) -> np.ndarray:
    diff = queries[:, None, :] - train[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def knn_posteriors(
    cfg: KnnConfig, train: np.ndarray, labels: np.ndarray, queries: np.ndarray, n_classes: int
) -> np.ndarray:
    """
    Posterior rows from the ``cfg.k`` nearest training prefixes (Euclidean).

    Distance ties go to the lower training index.

    Args:
        cfg (KnnConfig): Neighbor count and weighting.
        train (np.ndarray): Training prefixes, shape (n_train, t).
        labels (np.ndarray): Training class indices.
        queries (np.ndarray): Query prefixes, shape (n_query, t).
        n_classes (int): Width of the returned rows.

    Returns:
        np.ndarray: Shape (n_query, n_classes).
    """
    if len(train) == 0:
        raise EmptyTrainingSet("k-NN needs at least one training series")
    if cfg.k > len(train):
        raise InvalidParam(f"k={cfg.k} exceeds training size {len(train)}")

    distances = _distances(train, queries)
    order = np.argsort(distances, axis=1, kind="stable")[:, : cfg.k]
    nearest = np.take_along_axis(distances, order, axis=1)

    if cfg.weighting == "uniform":
        weights = np.ones_like(nearest)
    else:
        weights = 1.0 / (nearest + INVERSE_DISTANCE_EPS)

    posteriors = np.zeros((len(queries), n_classes))
    rows = np.repeat(np.arange(len(queries)), cfg.k)
    np.add.at(posteriors, (rows, labels[order].ravel()), weights.ravel())
    return posteriors / posteriors.sum(axis=1, keepdims=True)


def knn_posterior(cfg: KnnConfig, train: np.ndarray, labels: np.ndarray, query: np.ndarray, n_classes: int) -> np.ndarray:
    """Single-query form of :func:`knn_posteriors`."""
    return knn_posteriors(cfg, train, labels, np.asarray(query, dtype=float)[None, :], n_classes)[0]


class KnnClassifier:
    def __init__(self, config: KnnConfig):
        self.config = config
        self.train_ = None
        self.labels_ = None
        self.n_classes_ = None

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "KnnClassifier":
        X = np.asarray(X, dtype=float)
        if len(X) == 0:
            raise EmptyTrainingSet("k-NN needs at least one training series")
        if self.config.k > len(X):
            raise InvalidParam(f"k={self.config.k} exceeds training size {len(X)}")
        self.train_ = X.copy()
        self.labels_ = np.asarray(y, dtype=int).copy()
        self.n_classes_ = n_classes
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return knn_posteriors(self.config, self.train_, self.labels_, np.asarray(X, dtype=float), self.n_classes_)
