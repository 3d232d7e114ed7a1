import json
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from edmkit.costs import CostMatrices
from edmkit.errors import EmptyInput, LengthMismatch


@dataclass(frozen=True, eq=False)
class PredictionOutcome:
    """Online decision for one series."""

    predicted_class: int
    decision_timestamp_index: int
    decision_time: int
    posterior_at_decision: np.ndarray
    forced: bool


@dataclass(frozen=True)
class InstanceRecord:
    """Per-instance row of a report."""

    pred: int
    true: int
    t: int
    forced: bool


@dataclass(frozen=True)
class EvaluationReport:
    dataset: str
    trigger: str
    classifier: str
    avg_cost: float
    accuracy: float
    earliness: float
    n_test: int
    seed: int
    config_digest: str
    jobs: Optional[int] = None
    outcomes: Optional[Tuple[InstanceRecord, ...]] = None
    extras: Dict[str, Any] = field(default_factory=dict)


def compute_metrics(
    outcomes: Sequence[PredictionOutcome], labels: Sequence[int], cost: CostMatrices
) -> Tuple[float, float, float]:
    """
    Average decision cost, accuracy and earliness of a set of outcomes.

    Earliness is the mean of ``decision_time / max_T``.

    Raises:
        EmptyInput: If there are no outcomes.
        LengthMismatch: If outcomes and labels differ in length.
    """
    if len(outcomes) == 0:
        raise EmptyInput("no outcomes to evaluate")
    if len(outcomes) != len(labels):
        raise LengthMismatch(f"{len(outcomes)} outcomes for {len(labels)} labels")

    costs = np.array(
        [cost.decision_cost(int(y), o.predicted_class, o.decision_timestamp_index) for o, y in zip(outcomes, labels)]
    )
    correct = np.array([o.predicted_class == int(y) for o, y in zip(outcomes, labels)], dtype=float)
    fractions = np.array([o.decision_time / cost.max_T for o in outcomes])
    return float(costs.mean()), float(correct.mean()), float(fractions.mean())


def instance_records(outcomes: Sequence[PredictionOutcome], labels: Sequence[int]) -> Tuple[InstanceRecord, ...]:
    return tuple(
        InstanceRecord(pred=int(o.predicted_class), true=int(y), t=int(o.decision_time), forced=bool(o.forced))
        for o, y in zip(outcomes, labels)
    )


def _render(value: Any) -> str:
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if not math.isfinite(value):
            return json.dumps(value)
        text = format(value, ".17g")
        if not any(ch in text for ch in ".en"):
            text += ".0"
        return text
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_render(v)}" for k, v in sorted(value.items())) + "}"
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(_render(v) for v in value) + "]"
    raise TypeError(f"Cannot render {type(value).__name__} in a report")


def canonical_json(document: Any) -> str:
    """Sorted keys, no whitespace, floats with 17 significant digits."""
    return _render(document)


def report_to_dict(report: EvaluationReport, include_outcomes: bool = True) -> Dict[str, Any]:
    document = {
        "dataset": report.dataset,
        "trigger": report.trigger,
        "classifier": report.classifier,
        "avg_cost": float(report.avg_cost),
        "accuracy": float(report.accuracy),
        "earliness": float(report.earliness),
        "n_test": report.n_test,
        "seed": report.seed,
        "config_digest": report.config_digest,
    }
    if report.jobs is not None:
        document["jobs"] = report.jobs
    if report.extras:
        document["extras"] = report.extras
    if include_outcomes and report.outcomes is not None:
        document["outcomes"] = [
            {"pred": o.pred, "true": o.true, "t": o.t, "forced": o.forced} for o in report.outcomes
        ]
    return document


def serialize_report(report: EvaluationReport, include_outcomes: bool = True) -> str:
    """
    Canonical JSON text of ``report``.

    Args:
        report (EvaluationReport): Report to render.
        include_outcomes (bool): Emit the per-instance ``outcomes`` array.

    Returns:
        str: Byte-stable JSON document ending in a newline.
    """
    return canonical_json(report_to_dict(report, include_outcomes)) + "\n"


def parse_report(text: str) -> EvaluationReport:
    """Inverse of :func:`serialize_report`."""
    document = json.loads(text)
    outcomes = document.get("outcomes")
    if outcomes is not None:
        outcomes = tuple(
            InstanceRecord(pred=o["pred"], true=o["true"], t=o["t"], forced=o["forced"]) for o in outcomes
        )
    return EvaluationReport(
        dataset=document["dataset"],
        trigger=document["trigger"],
        classifier=document["classifier"],
        avg_cost=float(document["avg_cost"]),
        accuracy=float(document["accuracy"]),
        earliness=float(document["earliness"]),
        n_test=int(document["n_test"]),
        seed=int(document["seed"]),
        config_digest=document["config_digest"],
        jobs=document.get("jobs"),
        outcomes=outcomes,
        extras=document.get("extras", {}),
    )


def reports_index_rows(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Sweep index rows in canonical (trigger, alpha) order."""
    return sorted(rows, key=lambda row: (row["trigger"], float(row["alpha"])))
