from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
from joblib import Parallel, delayed

from edmkit.classifiers import (
    ClassifierConfig,
    ClassifierFactory,
    ClassifiersCollection,
    ProbabilityCube,
    argmax_lowest,
    fit_collection,
    out_of_fold_cube,
    predict_proba_at,
)
from edmkit.costs import CostMatrices, build_cost_matrices, cost_spec_from_dict, cost_spec_to_dict
from edmkit.data import TimeSeriesDataset
from edmkit.errors import LengthMismatch, MissingCalibrationCube, TimestampMismatch
from edmkit.pipeline.evaluation import EvaluationReport, PredictionOutcome, compute_metrics, instance_records
from edmkit.triggers import TriggerModel, fit_trigger
from edmkit.utils.logger import logger
from edmkit.utils.store import PIPELINE_MAGIC, dump_blob, load_blob


@dataclass(frozen=True)
class EarlyClassifierPipeline:
    """Collection, calibrated trigger and cost setting sharing one timestamp grid."""

    collection: ClassifiersCollection
    trigger: TriggerModel
    cost: CostMatrices
    prefit: bool = False

    @property
    def classifier_name(self) -> str:
        return ClassifierFactory.name_of(self.collection.base_config)


def fit_pipeline(
    train: TimeSeriesDataset,
    cost: CostMatrices,
    base_config: ClassifierConfig,
    trigger_choice: str,
    trigger_params: Optional[Dict[str, Any]] = None,
    folds: int = 5,
    seed: int = 0,
    jobs: int = 1,
    prefit_collection: Optional[ClassifiersCollection] = None,
    cube: Optional[ProbabilityCube] = None,
    normalize: bool = False,
) -> EarlyClassifierPipeline:
    """
    Fit an early classifier: calibration cube, then trigger, then the final collection.

    Args:
        train (TimeSeriesDataset): Training data; series length must equal ``cost.max_T``.
        cost (CostMatrices): Cost setting, whose timestamps drive the collection.
        base_config (ClassifierConfig): Config for every collection member.
        trigger_choice (str): Registered trigger name.
        trigger_params (Optional[Dict[str, Any]]): Trigger parameters or fixed values.
        folds (int): Out-of-fold calibration folds.
        seed (int): Fold seed.
        jobs (int): Worker count; the result does not depend on it.
        prefit_collection (Optional[ClassifiersCollection]): Already fitted collection;
            skips classifier training and requires ``cube``.
        cube (Optional[ProbabilityCube]): Calibration cube to use instead of building one.
        normalize (bool): Z-normalize every prefix before classification.

    Returns:
        EarlyClassifierPipeline: The fitted pipeline.

    Raises:
        TimestampMismatch: If the data, collection or cube disagree with the cost grid.
        MissingCalibrationCube: If a prefit collection comes without a cube.
    """
    if train.length != cost.max_T:
        raise TimestampMismatch(f"series length {train.length} differs from cost max_T {cost.max_T}")
    if train.n_classes != cost.n_classes:
        raise TimestampMismatch(f"dataset has {train.n_classes} classes, cost setting has {cost.n_classes}")
    timestamps = tuple(cost.timestamps)

    if prefit_collection is not None:
        if cube is None:
            raise MissingCalibrationCube("a prefit collection needs a caller-supplied calibration cube")
        if tuple(prefit_collection.timestamps) != timestamps:
            raise TimestampMismatch("prefit collection timestamps differ from the cost grid")

    if cube is None:
        cube = out_of_fold_cube(train, timestamps, base_config, folds=folds, seed=seed, jobs=jobs, normalize=normalize)
    trigger = fit_trigger(trigger_choice, cube, cost, trigger_params, jobs=jobs)

    if prefit_collection is not None:
        collection = prefit_collection
    else:
        collection = fit_collection(train, timestamps, base_config, jobs=jobs, cost=cost, normalize=normalize)

    logger.info(f"Fitted pipeline: {len(timestamps)} members, trigger {trigger.name}")
    return EarlyClassifierPipeline(
        collection=collection, trigger=trigger, cost=cost, prefit=prefit_collection is not None
    )


def predict_early(p: EarlyClassifierPipeline, series: np.ndarray) -> PredictionOutcome:
    """
    Unveil ``series`` one monitored timestamp at a time until the trigger fires.

    Member ``k`` only ever receives the first ``t_k`` values.

    Raises:
        LengthMismatch: If ``series`` is not of length ``max_T``.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or len(series) != p.cost.max_T:
        raise LengthMismatch(f"series of shape {series.shape} given to a pipeline with max_T={p.cost.max_T}")

    history: List[np.ndarray] = []
    final = p.cost.n_timestamps - 1
    for k, t in enumerate(p.cost.timestamps):
        history.append(predict_proba_at(p.collection, series[None, :t], k)[0])
        voluntary = k < final and p.trigger.should_trigger(np.array(history), k)
        if voluntary or k == final:
            posterior = history[-1]
            return PredictionOutcome(
                predicted_class=int(argmax_lowest(posterior)),
                decision_timestamp_index=k,
                decision_time=int(t),
                posterior_at_decision=posterior,
                forced=not voluntary,
            )


def score(
    p: EarlyClassifierPipeline,
    test: TimeSeriesDataset,
    jobs: int = 1,
    seed: int = 0,
    config_digest: str = "",
    include_outcomes: bool = True,
) -> EvaluationReport:
    """
    Run :func:`predict_early` on every test series and summarize the decisions.

    Raises:
        LengthMismatch: If test series do not match the cost grid.
    """
    if test.length != p.cost.max_T:
        raise LengthMismatch(f"test series length {test.length} differs from cost max_T {p.cost.max_T}")
    outcomes = Parallel(n_jobs=jobs, prefer="threads")(delayed(predict_early)(p, row) for row in test.values)
    avg_cost, accuracy, earliness = compute_metrics(outcomes, test.labels, p.cost)
    logger.info(
        f"Scored {test.n_series} series of {test.name}: avg_cost={avg_cost:.6f} "
        f"accuracy={accuracy:.4f} earliness={earliness:.4f}"
    )
    return EvaluationReport(
        dataset=test.name,
        trigger=p.trigger.name,
        classifier=p.classifier_name,
        avg_cost=avg_cost,
        accuracy=accuracy,
        earliness=earliness,
        n_test=test.n_series,
        seed=seed,
        config_digest=config_digest,
        outcomes=instance_records(outcomes, test.labels) if include_outcomes else None,
    )


def pipeline_to_blob(p: EarlyClassifierPipeline) -> bytes:
    """Versioned blob embedding collection, trigger state and the cost spec as JSON-ready data."""
    payload = {
        "collection": p.collection,
        "trigger": p.trigger,
        "cost_spec": cost_spec_to_dict(p.cost.spec),
        "prefit": p.prefit,
    }
    return dump_blob(PIPELINE_MAGIC, payload)


def pipeline_from_blob(blob: bytes) -> EarlyClassifierPipeline:
    payload = load_blob(PIPELINE_MAGIC, blob)
    return EarlyClassifierPipeline(
        collection=payload["collection"],
        trigger=payload["trigger"],
        cost=build_cost_matrices(cost_spec_from_dict(payload["cost_spec"])),
        prefit=payload["prefit"],
    )
