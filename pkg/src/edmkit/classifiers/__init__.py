from edmkit.classifiers.base import ProbabilisticClassifier, argmax_lowest
from edmkit.classifiers.collection import (
    HOLDOUT,
    OUT_OF_FOLD,
    RESUBSTITUTION,
    ClassifiersCollection,
    ProbabilityCube,
    collection_cube,
    collection_from_blob,
    collection_to_blob,
    fit_collection,
    out_of_fold_cube,
    predict_proba_at,
    prefixes,
    resubstitution_cube,
    score_at,
)
from edmkit.classifiers.factory import ClassifierConfig, ClassifierFactory
from edmkit.classifiers.knn import KnnClassifier, KnnConfig, knn_posterior, knn_posteriors
from edmkit.classifiers.logistic import LogisticClassifier, LogisticConfig, summary_features

__all__ = [
    "HOLDOUT",
    "OUT_OF_FOLD",
    "RESUBSTITUTION",
    "ClassifierConfig",
    "ClassifierFactory",
    "ClassifiersCollection",
    "KnnClassifier",
    "KnnConfig",
    "LogisticClassifier",
    "LogisticConfig",
    "ProbabilisticClassifier",
    "ProbabilityCube",
    "argmax_lowest",
    "collection_cube",
    "collection_from_blob",
    "collection_to_blob",
    "fit_collection",
    "knn_posterior",
    "knn_posteriors",
    "out_of_fold_cube",
    "predict_proba_at",
    "prefixes",
    "resubstitution_cube",
    "score_at",
    "summary_features",
]
