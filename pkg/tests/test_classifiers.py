import numpy as np
import pytest

from edmkit.classifiers import (
    OUT_OF_FOLD,
    RESUBSTITUTION,
    ClassifierFactory,
    ClassifiersCollection,
    KnnClassifier,
    KnnConfig,
    LogisticClassifier,
    LogisticConfig,
    ProbabilisticClassifier,
    collection_from_blob,
    collection_to_blob,
    fit_collection,
    knn_posterior,
    out_of_fold_cube,
    predict_proba_at,
    resubstitution_cube,
    score_at,
    summary_features,
)
from edmkit.data import TimeSeriesDataset, make_synthetic
from edmkit.errors import DegenerateLabels, EmptyTrainingSet, InvalidParam, MemberFitError, PrefixTooShort


class FixedPosteriors:
    """Returns the same posterior rows whatever it is asked."""

    def __init__(self, rows):
        self.rows = np.asarray(rows, dtype=float)

    def fit(self, X, y, n_classes):
        return self

    def predict_proba(self, X):
        return self.rows[: len(X)]


@pytest.fixture(scope="module")
def synthetic_pair():
    train = make_synthetic(50, 100, 40, 3.0, 1.0, seed=21)
    test = make_synthetic(50, 100, 40, 3.0, 1.0, seed=22)
    return train, test


def _toy(n_per_class=6, length=6, seed=0, gap=2.0):
    return make_synthetic(n_per_class, length, 3, gap, 1.0, seed=seed)


def test_knn_uniform_vote_fraction():
    train = np.array([[0.0], [0.1], [0.2], [5.0]])
    labels = np.array([0, 0, 1, 1])
    posterior = knn_posterior(KnnConfig(k=3), train, labels, np.array([0.05]), 2)
    np.testing.assert_allclose(posterior, [2 / 3, 1 / 3])


def test_knn_exact_match_one_hot():
    train = np.array([[1.0, 2.0], [3.0, 4.0]])
    posterior = knn_posterior(KnnConfig(k=1), train, np.array([1, 0]), np.array([1.0, 2.0]), 2)
    np.testing.assert_array_equal(posterior, [0.0, 1.0])


def test_knn_inverse_distance():
    train = np.array([[1.0], [-3.0]])
    posterior = knn_posterior(KnnConfig(k=2, weighting="inverse-distance"), train, np.array([0, 1]), np.array([0.0]), 2)
    np.testing.assert_allclose(posterior, [0.75, 0.25], atol=1e-8)


def test_knn_distance_ties_go_to_lower_index():
    train = np.array([[1.0], [-1.0]])
    posterior = knn_posterior(KnnConfig(k=1), train, np.array([1, 0]), np.array([0.0]), 2)
    np.testing.assert_array_equal(posterior, [0.0, 1.0])


def test_knn_errors():
    with pytest.raises(InvalidParam):
        KnnConfig(k=0)
    with pytest.raises(InvalidParam):
        KnnConfig(weighting="gaussian")
    with pytest.raises(InvalidParam):
        KnnConfig(k="5")
    assert KnnConfig(k=np.int64(3)).k == 3
    assert LogisticConfig(l2=0).l2 == 0
    with pytest.raises(EmptyTrainingSet):
        KnnClassifier(KnnConfig(k=1)).fit(np.zeros((0, 3)), np.zeros(0), 2)
    with pytest.raises(InvalidParam):
        KnnClassifier(KnnConfig(k=5)).fit(np.zeros((3, 3)), np.zeros(3), 2)


def test_logistic_zero_iterations_is_uniform():
    X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0]])
    model = LogisticClassifier(LogisticConfig(max_iters=0)).fit(X, np.array([0, 1, 2]), 3)
    np.testing.assert_allclose(model.predict_proba(X), np.full((3, 3), 1 / 3))


def test_logistic_separable_toy():
    X = np.array([[-1.0]] * 10 + [[1.0]] * 10)
    y = np.array([0] * 10 + [1] * 10)
    model = LogisticClassifier(LogisticConfig()).fit(X, y, 2)
    posteriors = model.predict_proba(X)
    assert np.all(np.argmax(posteriors, axis=1) == y)
    np.testing.assert_allclose(posteriors.sum(axis=1), 1.0, atol=1e-9)


@pytest.mark.parametrize("features,schedule", [("raw", "constant"), ("summary", "inverse-sqrt")])
def test_logistic_posteriors_sum_to_one(features, schedule):
    ds = _toy(n_per_class=8, length=12, seed=4)
    model = LogisticClassifier(LogisticConfig(features=features, schedule=schedule)).fit(ds.values, ds.labels, 2)
    posteriors = model.predict_proba(ds.values)
    assert np.all(posteriors >= 0)
    np.testing.assert_allclose(posteriors.sum(axis=1), 1.0, atol=1e-9)


def test_logistic_single_class():
    with pytest.raises(DegenerateLabels):
        LogisticClassifier(LogisticConfig()).fit(np.ones((4, 3)), np.zeros(4, dtype=int), 2)


def test_logistic_row_permutation_invariance():
    ds = _toy(n_per_class=10, length=8, seed=5)
    order = np.random.default_rng(0).permutation(ds.n_series)
    a = LogisticClassifier(LogisticConfig()).fit(ds.values, ds.labels, 2)
    b = LogisticClassifier(LogisticConfig()).fit(ds.values[order], ds.labels[order], 2)
    np.testing.assert_allclose(a.predict_proba(ds.values), b.predict_proba(ds.values), atol=1e-9)


def test_summary_features():
    features = summary_features(np.array([[1.0, 2.0, 3.0]]))
    np.testing.assert_allclose(features[0, :5], [2.0, np.sqrt(2 / 3), 1.0, 3.0, 1.0])
    assert features.shape == (1, 6)


def test_classifiers_follow_the_protocol():
    assert isinstance(KnnClassifier(KnnConfig()), ProbabilisticClassifier)
    assert isinstance(LogisticClassifier(LogisticConfig()), ProbabilisticClassifier)


def test_factory():
    config = ClassifierFactory.config_from_params("knn", {"k": 3, "weighting": "inverse-distance"})
    assert config == KnnConfig(k=3, weighting="inverse-distance")
    assert ClassifierFactory.name_of(config) == "knn"
    assert isinstance(ClassifierFactory.create_classifier(config), KnnClassifier)
    assert ClassifierFactory.get_default_config("logistic") == LogisticConfig()
    assert ClassifierFactory.describe(config) == {"k": 3, "weighting": "inverse-distance"}


@pytest.mark.parametrize(
    "name,params,error_message",
    [
        ("svm", {}, "Unsupported classifier: svm"),
        ("knn", {"neighbours": 3}, "Unknown knn parameters"),
        ("knn", {"k": "5"}, "k must be int"),
        ("knn", {"k": 2.5}, "k must be int"),
        ("knn", {"k": True}, "k must be int"),
        ("knn", {"weighting": 1}, "weighting must be str"),
        ("logistic", {"l2": "strong"}, "l2 must be float"),
        ("logistic", {"max_iters": None}, "max_iters must be int"),
    ],
)
def test_factory_errors(name, params, error_message):
    with pytest.raises(InvalidParam) as exc_info:
        ClassifierFactory.config_from_params(name, params)
    assert error_message in str(exc_info.value)


def test_fit_collection_truncates_prefixes():
    ds = _toy()
    coll = fit_collection(ds, [2, 4, 6], KnnConfig(k=3))
    assert coll.n_timestamps == 3
    assert [member.train_.shape[1] for member in coll.members] == [2, 4, 6]


def test_fit_collection_worker_independence():
    ds = _toy(n_per_class=10, length=12, seed=3)
    config = LogisticConfig(max_iters=50)
    serial = fit_collection(ds, [3, 6, 12], config, jobs=1)
    parallel = fit_collection(ds, [3, 6, 12], config, jobs=8)
    for k in range(3):
        np.testing.assert_array_equal(predict_proba_at(serial, ds.values, k), predict_proba_at(parallel, ds.values, k))


def test_fit_collection_annotates_member_errors():
    ds = _toy(n_per_class=2)
    with pytest.raises(MemberFitError) as exc_info:
        fit_collection(ds, [2, 6], KnnConfig(k=5))
    assert exc_info.value.timestamp == 2
    assert isinstance(exc_info.value.cause, InvalidParam)


def test_fit_collection_rejects_bad_timestamps():
    with pytest.raises(InvalidParam):
        fit_collection(_toy(), [4, 2], KnnConfig(k=1))
    with pytest.raises(InvalidParam):
        fit_collection(_toy(), [2, 7], KnnConfig(k=1))


def test_synthetic_divergence(synthetic_pair):
    train, test = synthetic_pair
    coll = fit_collection(train, [20, 100], KnnConfig())
    early, late = score_at(coll, test, 0), score_at(coll, test, 1)
    assert 0.25 <= early <= 0.75
    assert late >= 0.95
    assert late >= early


def test_predict_proba_at_prefix_lengths():
    ds = _toy()
    coll = fit_collection(ds, [2, 4, 6], KnnConfig(k=3))
    posteriors = predict_proba_at(coll, ds.values[:, :4], 1)
    np.testing.assert_allclose(posteriors.sum(axis=1), 1.0, atol=1e-9)
    with pytest.raises(PrefixTooShort):
        predict_proba_at(coll, ds.values[:, :3], 1)


@pytest.mark.parametrize(
    "rows,expected",
    [
        ([[1, 0], [0, 1], [1, 0], [0, 1]], 1.0),
        ([[0, 1], [1, 0], [0, 1], [1, 0]], 0.0),
        ([[1, 0], [0, 1], [1, 0], [1, 0]], 0.75),
        ([[0.5, 0.5], [0, 1], [0.5, 0.5], [0, 1]], 1.0),
    ],
)
def test_score_at(rows, expected):
    test = TimeSeriesDataset("stub", np.zeros((4, 3)), np.array([0, 1, 0, 1]), {"a": 0, "b": 1})
    coll = ClassifiersCollection(timestamps=(3,), members=(FixedPosteriors(rows),), base_config=KnnConfig(), n_classes=2)
    assert score_at(coll, test, 0) == expected


def test_out_of_fold_cube():
    ds = _toy(n_per_class=10, length=8, seed=7, gap=0.0)
    cube = out_of_fold_cube(ds, [2, 4, 8], KnnConfig(k=1), folds=5, seed=1)
    assert cube.values.shape == (20, 3, 2)
    assert cube.provenance == OUT_OF_FOLD
    np.testing.assert_allclose(cube.values.sum(axis=-1), 1.0, atol=1e-9)
    np.testing.assert_array_equal(cube.labels, ds.labels)

    again = out_of_fold_cube(ds, [2, 4, 8], KnnConfig(k=1), folds=5, seed=1, jobs=4)
    np.testing.assert_array_equal(cube.values, again.values)

    # 1-NN memorizes its training set, so only the resubstitution cube is perfect
    resub = resubstitution_cube(fit_collection(ds, [2, 4, 8], KnnConfig(k=1)), ds)
    assert resub.provenance == RESUBSTITUTION
    assert np.all(np.argmax(resub.values, axis=-1) == ds.labels[:, None])
    assert not np.all(np.argmax(cube.values, axis=-1) == ds.labels[:, None])


def test_collection_blob():
    ds = _toy()
    coll = fit_collection(ds, [3, 6], KnnConfig(k=3))
    blob = collection_to_blob(coll)
    assert blob.startswith(b"EDMC1")
    restored = collection_from_blob(blob)
    assert restored.timestamps == coll.timestamps
    np.testing.assert_array_equal(predict_proba_at(restored, ds.values, 1), predict_proba_at(coll, ds.values, 1))
