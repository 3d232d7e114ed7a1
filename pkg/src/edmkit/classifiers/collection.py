from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from edmkit.classifiers.base import argmax_lowest
from edmkit.classifiers.factory import ClassifierConfig, ClassifierFactory
from edmkit.costs import CostMatrices
from edmkit.data import TimeSeriesDataset, stratified_kfold, z_normalize_rows
from edmkit.errors import EdmError, InvalidParam, MemberFitError, PrefixTooShort
from edmkit.utils.logger import logger
from edmkit.utils.store import COLLECTION_MAGIC, dump_blob, load_blob

OUT_OF_FOLD = "out-of-fold"
RESUBSTITUTION = "resubstitution"
HOLDOUT = "holdout"


@dataclass(frozen=True)
class ClassifiersCollection:
    """
    One fitted classifier per monitored timestamp; member k only saw prefixes of length t_k.

    With ``normalize`` set, every prefix is z-normalized on its own before it reaches a
    member, so no statistic of the unseen suffix leaks into an early decision.
    """

    timestamps: Tuple[int, ...]
    members: Tuple[object, ...]
    base_config: ClassifierConfig
    n_classes: int
    normalize: bool = False

    @property
    def n_timestamps(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True, eq=False)
class ProbabilityCube:
    """Calibration posteriors of shape (n series, m timestamps, n_classes)."""

    values: np.ndarray
    labels: np.ndarray
    provenance: str

    @property
    def n_series(self) -> int:
        return self.values.shape[0]

    @property
    def n_timestamps(self) -> int:
        return self.values.shape[1]

    @property
    def n_classes(self) -> int:
        return self.values.shape[2]


def prefixes(X: np.ndarray, t: int, normalize: bool = False) -> np.ndarray:
    """First ``t`` columns of ``X``, optionally z-normalized row by row."""
    X = X[:, :t]
    return z_normalize_rows(X) if normalize else X


def _check_timestamps(timestamps: Sequence[int], length: int) -> Tuple[int, ...]:
    timestamps = tuple(int(t) for t in timestamps)
    if not timestamps or any(b <= a for a, b in zip(timestamps, timestamps[1:])):
        raise InvalidParam(f"timestamps must be non-empty and strictly increasing, got {list(timestamps)}")
    if timestamps[0] < 1 or timestamps[-1] > length:
        raise InvalidParam(f"timestamps must lie in [1, {length}], got {list(timestamps)}")
    return timestamps


def _fit_member(config: ClassifierConfig, X: np.ndarray, y: np.ndarray, n_classes: int, t: int, normalize: bool):
    try:
        return ClassifierFactory.create_classifier(config).fit(prefixes(X, t, normalize), y, n_classes)
    except EdmError as e:
        raise MemberFitError(t, e) from e


def fit_collection(
    ds: TimeSeriesDataset,
    timestamps: Sequence[int],
    base_config: ClassifierConfig,
    jobs: int = 1,
    cost: Optional[CostMatrices] = None,
    normalize: bool = False,
) -> ClassifiersCollection:
    """
    Train one classifier per timestamp on prefixes of that length.

    Args:
        ds (TimeSeriesDataset): Training data.
        timestamps (Sequence[int]): Prefix lengths, valid for ``ds.length``.
        base_config (ClassifierConfig): Config cloned for every member.
        jobs (int): Worker count; results do not depend on it.
        cost (Optional[CostMatrices]): Accepted for API parity with cost-aware
            collections and ignored.
        normalize (bool): Z-normalize every prefix before it reaches a member.

    Returns:
        ClassifiersCollection: Fitted members in timestamp order.

    Raises:
        MemberFitError: Wrapping the first member error, annotated with its timestamp.
    """
    timestamps = _check_timestamps(timestamps, ds.length)
    logger.info(f"Fitting {len(timestamps)} {ClassifierFactory.name_of(base_config)} members on {ds.n_series} series")
    members = Parallel(n_jobs=jobs, prefer="threads")(
        delayed(_fit_member)(base_config, ds.values, ds.labels, ds.n_classes, t, normalize) for t in timestamps
    )
    return ClassifiersCollection(
        timestamps=timestamps,
        members=tuple(members),
        base_config=base_config,
        n_classes=ds.n_classes,
        normalize=normalize,
    )


def predict_proba_at(coll: ClassifiersCollection, X: np.ndarray, k: int) -> np.ndarray:
    """
    Posteriors of member ``k`` on the first ``t_k`` columns of ``X``.

    Raises:
        PrefixTooShort: If ``X`` has fewer than ``t_k`` columns.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    t = coll.timestamps[k]
    if X.shape[1] < t:
        raise PrefixTooShort(f"prefix of length {X.shape[1]} given to the member for timestamp {t}")
    return coll.members[k].predict_proba(prefixes(X, t, coll.normalize))


def score_at(coll: ClassifiersCollection, test: TimeSeriesDataset, k: int) -> float:
    """Accuracy of member ``k`` on ``test``."""
    predictions = argmax_lowest(predict_proba_at(coll, test.values, k))
    return float(np.mean(predictions == test.labels))


def _fold_posteriors(
    config: ClassifierConfig,
    ds: TimeSeriesDataset,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    t: int,
    normalize: bool,
) -> np.ndarray:
    member = _fit_member(config, ds.values[train_idx], ds.labels[train_idx], ds.n_classes, t, normalize)
    return member.predict_proba(prefixes(ds.values[test_idx], t, normalize))


def out_of_fold_cube(
    ds: TimeSeriesDataset,
    timestamps: Sequence[int],
    base_config: ClassifierConfig,
    folds: int = 5,
    seed: int = 0,
    jobs: int = 1,
    normalize: bool = False,
) -> ProbabilityCube:
    """
    Calibration posteriors where every series is scored by models that never saw it.

    Raises:
        TooFewPerClass: If a class has fewer than ``folds`` members.
    """
    timestamps = _check_timestamps(timestamps, ds.length)
    splits = stratified_kfold(ds.labels, folds, seed)
    everything = np.arange(ds.n_series)
    tasks = [(np.setdiff1d(everything, test_idx), test_idx, t) for test_idx in splits for t in timestamps]

    logger.info(f"Building out-of-fold cube: {folds} folds x {len(timestamps)} timestamps")
    results = Parallel(n_jobs=jobs, prefer="threads")(
        delayed(_fold_posteriors)(base_config, ds, train_idx, test_idx, t, normalize) for train_idx, test_idx, t in tasks
    )

    values = np.zeros((ds.n_series, len(timestamps), ds.n_classes))
    for (_, test_idx, t), posteriors in zip(tasks, results):
        values[test_idx, timestamps.index(t)] = posteriors
    return ProbabilityCube(values=values, labels=ds.labels.copy(), provenance=OUT_OF_FOLD)


def collection_cube(coll: ClassifiersCollection, ds: TimeSeriesDataset, provenance: str = HOLDOUT) -> ProbabilityCube:
    """Posteriors of every member on every series of ``ds``."""
    values = np.stack([predict_proba_at(coll, ds.values, k) for k in range(coll.n_timestamps)], axis=1)
    return ProbabilityCube(values=values, labels=ds.labels.copy(), provenance=provenance)


def resubstitution_cube(coll: ClassifiersCollection, ds: TimeSeriesDataset) -> ProbabilityCube:
    """Posteriors of a collection on its own training data."""
    return collection_cube(coll, ds, RESUBSTITUTION)


def collection_to_blob(coll: ClassifiersCollection) -> bytes:
    return dump_blob(COLLECTION_MAGIC, coll)


def collection_from_blob(blob: bytes) -> ClassifiersCollection:
    return load_blob(COLLECTION_MAGIC, blob)
