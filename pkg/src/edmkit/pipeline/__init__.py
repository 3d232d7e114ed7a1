from edmkit.pipeline.early_classifier import (
    EarlyClassifierPipeline,
    fit_pipeline,
    pipeline_from_blob,
    pipeline_to_blob,
    predict_early,
    score,
)
from edmkit.pipeline.evaluation import (
    EvaluationReport,
    InstanceRecord,
    PredictionOutcome,
    canonical_json,
    compute_metrics,
    parse_report,
    reports_index_rows,
    serialize_report,
)

__all__ = [
    "EarlyClassifierPipeline",
    "EvaluationReport",
    "InstanceRecord",
    "PredictionOutcome",
    "canonical_json",
    "compute_metrics",
    "fit_pipeline",
    "parse_report",
    "pipeline_from_blob",
    "pipeline_to_blob",
    "predict_early",
    "reports_index_rows",
    "score",
    "serialize_report",
]
