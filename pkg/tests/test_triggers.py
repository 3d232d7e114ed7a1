from itertools import product

import numpy as np
import pytest

from edmkit.classifiers import OUT_OF_FOLD, RESUBSTITUTION, ProbabilityCube
from edmkit.costs import CostSpec, TableDelay, build_cost_matrices, symmetric_cost_spec
from edmkit.errors import EmptyCube, InvalidParam, LengthMismatch, TimestampMismatch
from edmkit.triggers import (
    TRIGGER_FITTERS,
    CalimeraState,
    EcecState,
    EconomyGammaState,
    FixedTimeState,
    StoppingRuleState,
    TeaserState,
    ThresholdState,
    fit_calimera,
    fit_ecec,
    fit_economy_gamma,
    fit_fixed_time,
    fit_stopping_rule,
    fit_teaser,
    fit_threshold,
    fit_trigger,
    fixed_time_costs,
    simulate_policy,
)
from edmkit.triggers.ecec import fused_confidence, reliabilities
from edmkit.triggers.economy_gamma import equal_frequency_boundaries
from edmkit.triggers.simulate import check_cube, cost_table, first_trigger_indices, misclf_table
from edmkit.triggers.teaser import consecutive_runs, teaser_envelopes

SYMMETRIC = ((0.0, 1.0), (1.0, 0.0))
SMALL_GAMMAS = (-1.0, 0.0, 1.0)


def _cube(values, labels, provenance=OUT_OF_FOLD):
    return ProbabilityCube(np.asarray(values, dtype=float), np.asarray(labels, dtype=int), provenance)


def _scaled(cost, factor):
    spec = cost.spec
    misclf = tuple(tuple(factor * v for v in row) for row in spec.misclf)
    delay = TableDelay(values=tuple(float(factor * d) for d in cost.delays))
    return build_cost_matrices(CostSpec(spec.n_classes, spec.timestamps, misclf, delay))


@pytest.fixture(scope="module")
def noisy_cube():
    """Posteriors that get more informative with time, some of them wrong."""
    rng = np.random.default_rng(12)
    n, m = 40, 6
    labels = np.repeat([0, 1], n // 2)
    signal = np.linspace(0.0, 0.35, m)[None, :] * np.where(labels == 0, 1.0, -1.0)[:, None]
    p0 = np.clip(0.5 + signal + rng.normal(0.0, 0.15, size=(n, m)), 0.01, 0.99)
    return _cube(np.stack([p0, 1.0 - p0], axis=-1), labels)


@pytest.fixture(scope="module")
def noisy_cost():
    return build_cost_matrices(symmetric_cost_spec(2, [5, 10, 15, 20, 25, 30], alpha=0.5))


@pytest.fixture
def toy_threshold():
    cube = _cube([[[0.6, 0.4], [0.9, 0.1]], [[0.55, 0.45], [0.2, 0.8]]], [0, 1])
    cost = build_cost_matrices(CostSpec(2, (1, 2), SYMMETRIC, TableDelay((0.25, 0.5))))
    return cube, cost


def _fit_all(cube, cost):
    return [
        fit_threshold(cube, cost),
        fit_stopping_rule(cube, cost, values=SMALL_GAMMAS),
        fit_economy_gamma(cube, cost),
        fit_ecec(cube, cost),
        fit_teaser(cube, cost),
        fit_calimera(cube, cost),
        fit_fixed_time(cube, cost),
    ]


def test_check_cube(noisy_cube, noisy_cost):
    empty = _cube(np.zeros((0, 6, 2)), np.zeros(0))
    with pytest.raises(EmptyCube):
        check_cube(empty, noisy_cost)
    short = _cube(noisy_cube.values[:, :4], noisy_cube.labels)
    with pytest.raises(TimestampMismatch):
        check_cube(short, noisy_cost)


def test_first_trigger_indices_forces_the_last_index():
    mask = np.array([[False, True, False], [False, False, False], [True, True, True]])
    assert first_trigger_indices(mask, 3).tolist() == [1, 2, 0]


def test_cost_table(toy_threshold):
    cube, cost = toy_threshold
    np.testing.assert_allclose(cost_table(cube, cost), [[0.25, 0.5], [1.25, 0.5]])
    np.testing.assert_array_equal(misclf_table(cube, cost), [[0.0, 0.0], [1.0, 0.0]])


def test_threshold_toy(toy_threshold):
    cube, cost = toy_threshold
    state = fit_threshold(cube, cost, grid=[0.5, 0.9])
    assert state.theta == 0.9
    assert state.fit_cost == pytest.approx(0.5)
    assert simulate_policy(ThresholdState(0.5, 2), cube, cost) == pytest.approx(0.75)


def test_threshold_grid_optimality(noisy_cube, noisy_cost):
    state = fit_threshold(noisy_cube, noisy_cost, jobs=3)
    costs = [simulate_policy(ThresholdState(theta, noisy_cube.n_timestamps), noisy_cube, noisy_cost) for theta in np.arange(101) / 100.0]
    assert state.fit_cost == min(costs)
    assert state.theta == np.arange(101)[int(np.argmin(costs))] / 100.0


def test_stopping_rule_grid_optimality(noisy_cube, noisy_cost):
    state = fit_stopping_rule(noisy_cube, noisy_cost, values=SMALL_GAMMAS, jobs=2)
    fractions = tuple(float(f) for f in noisy_cost.time_fractions)
    triples = list(product(SMALL_GAMMAS, repeat=3))
    costs = [simulate_policy(StoppingRuleState(*g, time_fractions=fractions), noisy_cube, noisy_cost) for g in triples]
    assert state.fit_cost == min(costs)
    assert (state.gamma1, state.gamma2, state.gamma3) == triples[int(np.argmin(costs))]


def test_stopping_rule_always_stop():
    state = StoppingRuleState(0.0, 0.0, 1.0, time_fractions=(0.5, 1.0))
    assert state.should_trigger(np.array([[0.5, 0.5]]), 0)
    never = StoppingRuleState(-1.0, 0.0, 0.0, time_fractions=(0.5, 1.0))
    assert not never.should_trigger(np.array([[0.5, 0.5]]), 0)


def test_economy_gamma_hand_example():
    cube = _cube(
        [
            [[0.9, 0.1], [0.95, 0.05]],
            [[0.6, 0.4], [0.3, 0.7]],
            [[0.7, 0.3], [0.2, 0.8]],
            [[0.45, 0.55], [0.4, 0.6]],
        ],
        [0, 0, 1, 1],
    )
    cost = build_cost_matrices(symmetric_cost_spec(2, [1, 2], alpha=0.0))
    state = fit_economy_gamma(cube, cost, n_bins=2)

    assert state.boundaries[0].tolist() == pytest.approx([0.65])
    assert state.boundaries[1].tolist() == pytest.approx([0.75])
    np.testing.assert_allclose(state.expected_misclf, [[0.0, 0.5], [0.5, 0.0]])
    np.testing.assert_allclose(state.transitions[0], [[0.75, 0.25], [0.25, 0.75]])
    assert state.decision_table[0].tolist() == [True, False]
    assert state.trigger_mask(cube.values[:, :1])[:, 0].tolist() == [False, True, False, True]


@pytest.mark.parametrize("delays,decide", [((0.1, 0.3), False), ((0.1, 0.6), True)])
def test_economy_gamma_single_bin_decision(delays, decide):
    state = EconomyGammaState(
        n_bins=1,
        boundaries=(np.array([]), np.array([])),
        expected_misclf=np.array([[0.4], [0.1]]),
        transitions=(np.array([[1.0]]),),
        delays=np.array(delays),
    )
    assert state.should_trigger(np.array([[0.6, 0.4]]), 0) == decide


def test_economy_gamma_single_bin_matches_oracle(noisy_cube, noisy_cost):
    state = fit_economy_gamma(noisy_cube, noisy_cost, n_bins=1)
    indices = first_trigger_indices(state.trigger_mask(noisy_cube.values), noisy_cube.n_timestamps)
    forecast = misclf_table(noisy_cube, noisy_cost).mean(axis=0) + noisy_cost.delays
    assert set(indices.tolist()) == {int(np.argmin(forecast))}


def test_equal_frequency_boundaries_merge_duplicates():
    assert equal_frequency_boundaries(np.array([0.5, 0.5, 0.5, 0.5]), 4).tolist() == [0.5]
    assert equal_frequency_boundaries(np.array([0.2, 0.4]), 1).tolist() == []


def test_economy_gamma_rejects_bad_bins(noisy_cube, noisy_cost):
    with pytest.raises(InvalidParam):
        fit_economy_gamma(noisy_cube, noisy_cost, n_bins=0)


def test_ecec_reliabilities_and_fusion():
    cube = _cube([[[0.9, 0.1]], [[0.6, 0.4]], [[0.3, 0.7]], [[0.2, 0.8]]], [0, 1, 1, 1])
    np.testing.assert_allclose(reliabilities(cube), [[0.5, 0.75]])

    reliability = np.array([[0.5, 0.75], [0.5, 0.75]])
    histories = np.array([[[0.9, 0.1], [0.8, 0.2]], [[0.9, 0.1], [0.1, 0.9]]])
    np.testing.assert_allclose(fused_confidence(histories, reliability), [[0.5, 0.75], [0.5, 0.75]])


def test_ecec_grid_optimality(noisy_cube, noisy_cost):
    state = fit_ecec(noisy_cube, noisy_cost)
    costs = [
        simulate_policy(EcecState(state.reliability, theta), noisy_cube, noisy_cost) for theta in np.arange(101) / 100.0
    ]
    assert state.fit_cost == min(costs)
    assert state.theta == np.arange(101)[int(np.argmin(costs))] / 100.0


def test_consecutive_runs():
    accepted = np.array([[True, True, False, True], [False, True, True, True]])
    assert consecutive_runs(accepted).tolist() == [[1, 2, 0, 1], [0, 1, 2, 3]]


def test_teaser_consistency_requirement():
    state = TeaserState(
        means=np.zeros((4, 2, 3)),
        variances=np.ones((4, 2, 3)),
        thresholds=np.array([[10.0, 10.0], [10.0, 10.0], [0.0, 0.0], [10.0, 10.0]]),
        v=2,
    )
    history = np.full((1, 4, 2), 0.5)
    # a threshold of zero rejects index 2 and resets the run
    assert state.acceptance(history)[0].tolist() == [True, True, False, True]
    assert state.trigger_mask(history)[0].tolist() == [False, True, False, False]
    first = TeaserState(state.means, state.variances, state.thresholds, v=1)
    assert first.trigger_mask(history)[0].tolist() == [True, True, False, True]


def test_teaser_scores_against_the_predicted_class_envelope():
    means = np.array([[[0.9, 0.1, 0.8], [0.1, 0.9, 0.8]]])
    state = TeaserState(means=means, variances=np.full((1, 2, 3), 0.01), thresholds=np.ones((1, 2)), v=1)
    history = np.array([[[0.9, 0.1]], [[0.1, 0.9]], [[0.2, 0.8]], [[0.8, 0.2]]])

    # (0.2, 0.8) scores 6 against the class-1 envelope
    assert state.acceptance(history)[:, 0].tolist() == [True, True, False, False]


def test_teaser_envelopes_are_fit_per_predicted_class():
    cube = _cube([[[0.9, 0.1]], [[0.9, 0.1]], [[0.3, 0.7]], [[0.3, 0.7]], [[0.6, 0.4]]], [0, 0, 1, 1, 1])

    means, variances, thresholds = teaser_envelopes(cube, 0.95)

    np.testing.assert_allclose(means[0, 0], [0.9, 0.1, 0.8])
    np.testing.assert_allclose(means[0, 1], [0.3, 0.7, 0.4])
    np.testing.assert_allclose(variances[0], 1e-9, atol=1e-15)
    state = TeaserState(means, variances, thresholds, v=1)
    # the misclassified series matches no correct-prediction envelope
    assert state.acceptance(cube.values)[:, 0].tolist() == [True, True, True, True, False]


def test_teaser_envelope_falls_back_to_all_series():
    cube = _cube([[[0.8, 0.2]], [[0.6, 0.4]]], [1, 1])

    means, _, _ = teaser_envelopes(cube, 0.95)

    np.testing.assert_allclose(means[0, 0], [0.7, 0.3, 0.4])
    np.testing.assert_allclose(means[0, 1], [0.7, 0.3, 0.4])


def test_teaser_rejects_bad_quantile(noisy_cube, noisy_cost):
    with pytest.raises(InvalidParam):
        fit_teaser(noisy_cube, noisy_cost, quantile=1.5)


def test_teaser_grid_optimality(noisy_cube, noisy_cost):
    quantiles = (0.9, 0.5, 0.2)
    state = fit_teaser(noisy_cube, noisy_cost, quantiles=quantiles)
    costs = {
        (v, q): simulate_policy(TeaserState(*teaser_envelopes(noisy_cube, q), v=v), noisy_cube, noisy_cost)
        for v in range(1, 6)
        for q in quantiles
    }

    assert state.fit_cost == min(costs.values())
    assert costs[(state.v, state.quantile)] == state.fit_cost


def test_teaser_fixed_quantile(noisy_cube, noisy_cost):
    state = fit_trigger("teaser", noisy_cube, noisy_cost, {"quantile": 0.95})
    costs = [
        simulate_policy(TeaserState(*teaser_envelopes(noisy_cube, 0.95), v=v), noisy_cube, noisy_cost)
        for v in range(1, 6)
    ]

    assert state.quantile == 0.95
    assert state.fit_cost == min(costs)
    assert state.v == 1 + int(np.argmin(costs))


@pytest.mark.parametrize(
    "posteriors,delays,halt",
    [
        ([[0.4, 0.6], [0.7, 0.3]], (0.1, 0.3), False),
        ([[0.8, 0.2], [0.9, 0.1]], (0.2, 0.3), True),
    ],
)
def test_calimera_single_series(posteriors, delays, halt):
    cube = _cube([posteriors], [0])
    cost = build_cost_matrices(CostSpec(2, (1, 2), ((0.0, 0.5), (0.5, 0.0)), TableDelay(delays)))
    state = fit_calimera(cube, cost)
    assert state.trigger_mask(cube.values)[0, 0] == halt


class MemorizingRegressor:
    """Predicts the training target of any feature row it has seen."""

    def __init__(self, X, y):
        self.table = {row.tobytes(): target for row, target in zip(np.ascontiguousarray(X), y)}

    def predict(self, X):
        return np.array([self.table[row.tobytes()] for row in np.ascontiguousarray(X)])


def test_calimera_with_perfect_regressors_reaches_the_per_series_minimum(noisy_cube, noisy_cost):
    state = fit_calimera(noisy_cube, noisy_cost, regressor_factory=MemorizingRegressor)
    best = cost_table(noisy_cube, noisy_cost).min(axis=1).mean()
    assert state.fit_cost == pytest.approx(best)
    assert state.fit_cost <= fixed_time_costs(noisy_cube, noisy_cost).min() + 1e-12


def test_fixed_time(noisy_cube, noisy_cost):
    state = fit_fixed_time(noisy_cube, noisy_cost)
    costs = fixed_time_costs(noisy_cube, noisy_cost)
    assert state.index == int(np.argmin(costs))
    assert state.fit_cost == costs.min()
    mask = state.trigger_mask(noisy_cube.values)
    assert set(first_trigger_indices(mask, noisy_cube.n_timestamps).tolist()) == {state.index}


def test_every_trigger_forces_the_final_decision(noisy_cube, noisy_cost):
    last = noisy_cube.n_timestamps - 1
    for state in _fit_all(noisy_cube, noisy_cost):
        for history in noisy_cube.values[:5]:
            assert state.should_trigger(history, last)
        with pytest.raises(LengthMismatch):
            state.should_trigger(noisy_cube.values[0, :3], 1)


def test_should_trigger_matches_the_mask(noisy_cube, noisy_cost):
    for state in _fit_all(noisy_cube, noisy_cost):
        mask = state.trigger_mask(noisy_cube.values)
        for i in range(3):
            for k in range(noisy_cube.n_timestamps - 1):
                assert state.should_trigger(noisy_cube.values[i, : k + 1], k) == mask[i, k]


def test_fit_cost_matches_simulation(noisy_cube, noisy_cost):
    for state in _fit_all(noisy_cube, noisy_cost):
        assert state.fit_cost == pytest.approx(simulate_policy(state, noisy_cube, noisy_cost))
        assert state.to_dict()["trigger"] == state.name


def test_cost_scaling_keeps_decisions(noisy_cube, noisy_cost):
    scaled = _scaled(noisy_cost, 4.0)
    fitters = [
        lambda cube, cost: fit_threshold(cube, cost),
        lambda cube, cost: fit_stopping_rule(cube, cost, values=SMALL_GAMMAS),
        lambda cube, cost: fit_economy_gamma(cube, cost),
        lambda cube, cost: fit_ecec(cube, cost),
        lambda cube, cost: fit_teaser(cube, cost),
        lambda cube, cost: fit_fixed_time(cube, cost),
    ]
    for fit in fitters:
        base, big = fit(noisy_cube, noisy_cost), fit(noisy_cube, scaled)
        np.testing.assert_array_equal(base.trigger_mask(noisy_cube.values), big.trigger_mask(noisy_cube.values))
        assert big.fit_cost == pytest.approx(4.0 * base.fit_cost)


def test_fitting_does_not_depend_on_jobs(noisy_cube, noisy_cost):
    serial = fit_stopping_rule(noisy_cube, noisy_cost, jobs=1)
    parallel = fit_stopping_rule(noisy_cube, noisy_cost, jobs=4)
    assert serial.to_dict() == parallel.to_dict()


def test_resubstitution_cube_still_fits(noisy_cube, noisy_cost):
    cube = _cube(noisy_cube.values, noisy_cube.labels, RESUBSTITUTION)
    assert fit_threshold(cube, noisy_cost).theta == fit_threshold(noisy_cube, noisy_cost).theta


def test_fit_trigger_registry(noisy_cube, noisy_cost):
    assert set(TRIGGER_FITTERS) == {
        "threshold",
        "stopping-rule",
        "economy-gamma",
        "ecec",
        "teaser",
        "calimera",
        "fixed-time",
    }
    assert isinstance(fit_trigger("calimera", noisy_cube, noisy_cost), CalimeraState)
    assert isinstance(fit_trigger("fixed-time", noisy_cube, noisy_cost), FixedTimeState)
    assert fit_trigger("economy-gamma", noisy_cube, noisy_cost, {"n_bins": 3}).n_bins == 3


def test_fit_trigger_fixed_parameters(noisy_cube, noisy_cost):
    state = fit_trigger("threshold", noisy_cube, noisy_cost, {"theta": 0.8})
    assert state.theta == 0.8
    assert state.fit_cost == simulate_policy(ThresholdState(0.8, noisy_cube.n_timestamps), noisy_cube, noisy_cost)

    rule = fit_trigger("stopping-rule", noisy_cube, noisy_cost, {"gamma": [-1, 0.5, 1]})
    assert (rule.gamma1, rule.gamma2, rule.gamma3) == (-1.0, 0.5, 1.0)


@pytest.mark.parametrize(
    "name,params,error_message",
    [
        ("oracle", {}, "Unsupported trigger: oracle"),
        ("threshold", {"alpha": 1}, "Unknown threshold parameters"),
        ("stopping-rule", {"gamma": [1, 2]}, "three coefficients"),
        ("threshold", {"theta": "abc"}, "threshold parameter theta"),
        ("threshold", {"theta": None}, "threshold parameter theta"),
        ("stopping-rule", {"gamma": 5}, "stopping-rule parameter gamma"),
        ("stopping-rule", {"gamma": ["a", 0, 1]}, "stopping-rule parameter gamma"),
        ("economy-gamma", {"n_bins": "5"}, "economy-gamma parameter n_bins"),
        ("economy-gamma", {"n_bins": 2.5}, "economy-gamma parameter n_bins"),
        ("teaser", {"quantile": "high"}, "teaser parameter quantile"),
        ("calimera", {"penalty": [1]}, "calimera parameter penalty"),
    ],
)
def test_fit_trigger_errors(noisy_cube, noisy_cost, name, params, error_message):
    with pytest.raises(InvalidParam) as exc_info:
        fit_trigger(name, noisy_cube, noisy_cost, params)
    assert error_message in str(exc_info.value)
