from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from edmkit.classifiers import ProbabilityCube, argmax_lowest
from edmkit.costs import CostMatrices
from edmkit.errors import InvalidParam
from edmkit.triggers.base import TriggerModel
from edmkit.triggers.simulate import check_cube, cost_table, first_trigger_indices, grid_search, policy_cost
from edmkit.utils.logger import logger

VARIANCE_FLOOR = 1e-9
V_CANDIDATES = (1, 2, 3, 4, 5)
QUANTILE_GRID = tuple(round(0.05 * i, 2) for i in range(19, 0, -1))


def envelope_features(posteriors: np.ndarray) -> np.ndarray:
    """Posterior vector followed by the margin p1 - p2, shape (..., n_classes + 1)."""
    ordered = np.sort(posteriors, axis=-1)
    margin = ordered[..., -1] - (ordered[..., -2] if posteriors.shape[-1] > 1 else 0.0)
    return np.concatenate([posteriors, margin[..., None]], axis=-1)


def envelope_scores(features: np.ndarray, mean: np.ndarray, variance: np.ndarray) -> np.ndarray:
    """Squared standardized distance to the envelope centre."""
    return np.sum((features - mean) ** 2 / variance, axis=-1)


@dataclass(frozen=True, eq=False)
class TeaserState(TriggerModel):
    """
    Gaussian acceptance envelopes per timestamp and predicted class, plus a consistency requirement.

    ``means`` and ``variances`` have shape (m, n_classes, n_classes + 1) and ``thresholds``
    shape (m, n_classes). A prediction of class c at index k is accepted when its score
    against envelope ``[k, c]`` is at most ``thresholds[k, c]``; the model triggers after
    ``v`` consecutive acceptances.
    """

    means: np.ndarray
    variances: np.ndarray
    thresholds: np.ndarray
    v: int
    quantile: float = 0.95
    fit_cost: Optional[float] = None

    name = "teaser"

    @property
    def n_timestamps(self) -> int:
        return len(self.thresholds)

    def acceptance(self, posteriors: np.ndarray) -> np.ndarray:
        steps = np.arange(posteriors.shape[1])[None, :]
        predicted = argmax_lowest(posteriors)
        scores = envelope_scores(
            envelope_features(posteriors), self.means[steps, predicted], self.variances[steps, predicted]
        )
        return scores <= self.thresholds[steps, predicted]

    def trigger_mask(self, posteriors: np.ndarray) -> np.ndarray:
        return consecutive_runs(self.acceptance(posteriors)) >= self.v

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trigger": self.name,
            "v": self.v,
            "quantile": self.quantile,
            "thresholds": self.thresholds.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "fit_cost": self.fit_cost,
        }


def consecutive_runs(accepted: np.ndarray) -> np.ndarray:
    """Length of the run of accepted timestamps ending at each index; a rejection resets it."""
    runs = np.zeros(accepted.shape, dtype=int)
    current = np.zeros(accepted.shape[0], dtype=int)
    for k in range(accepted.shape[1]):
        current = np.where(accepted[:, k], current + 1, 0)
        runs[:, k] = current
    return runs


def _envelope_members(predicted: np.ndarray, correct: np.ndarray, k: int, c: int) -> np.ndarray:
    members = correct[:, k] & (predicted[:, k] == c)
    if not members.any():
        members = np.ones(len(predicted), dtype=bool)
    return members


def teaser_envelopes(cube: ProbabilityCube, quantile: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Envelope centres, variances and acceptance thresholds for every (timestamp, class).

    Envelope ``[k, c]`` is fit on the series correctly predicted as ``c`` at ``k``, or on
    every series at ``k`` when there is none. Its threshold is the ``quantile`` of the
    members' own scores.

    Raises:
        InvalidParam: If ``quantile`` lies outside [0, 1].
    """
    if not 0.0 <= quantile <= 1.0:
        raise InvalidParam(f"quantile must lie in [0, 1], got {quantile}")
    features = envelope_features(cube.values)
    predicted = argmax_lowest(cube.values)
    correct = predicted == cube.labels[:, None]
    m, n_classes, width = cube.n_timestamps, cube.n_classes, features.shape[-1]

    means, variances = np.empty((m, n_classes, width)), np.empty((m, n_classes, width))
    thresholds = np.empty((m, n_classes))
    for k in range(m):
        for c in range(n_classes):
            members = features[_envelope_members(predicted, correct, k, c), k]
            means[k, c] = members.mean(axis=0)
            variances[k, c] = members.var(axis=0) + VARIANCE_FLOOR
            thresholds[k, c] = np.quantile(envelope_scores(members, means[k, c], variances[k, c]), quantile)

    for array in (means, variances, thresholds):
        array.setflags(write=False)
    return means, variances, thresholds


def fit_teaser(
    cube: ProbabilityCube,
    cost: CostMatrices,
    quantile: Optional[float] = None,
    v_candidates: Optional[Sequence[int]] = None,
    quantiles: Optional[Sequence[float]] = None,
    jobs: int = 1,
) -> TeaserState:
    """
    Fit class-wise acceptance envelopes on correctly classified calibration series, then pick ``v``.

    Args:
        cube (ProbabilityCube): Out-of-fold calibration posteriors.
        cost (CostMatrices): Cost setting.
        quantile (Optional[float]): Fixed acceptance quantile; searched when omitted.
        v_candidates (Optional[Sequence[int]]): Consecutive acceptances to try. Defaults to 1..5.
        quantiles (Optional[Sequence[float]]): Quantiles searched when ``quantile`` is None.
            Defaults to 0.95 down to 0.05 in steps of 0.05.
        jobs (int): Worker count for candidate evaluation.

    Returns:
        TeaserState: Cheapest (v, quantile) pair; ties go to the smallest ``v``, then the
        largest quantile.
    """
    check_cube(cube, cost)
    v_candidates = sorted(V_CANDIDATES if v_candidates is None else v_candidates)
    if quantile is not None:
        quantiles = [float(quantile)]
    else:
        quantiles = sorted(QUANTILE_GRID if quantiles is None else quantiles, reverse=True)

    envelopes = {q: teaser_envelopes(cube, q) for q in quantiles}
    costs = cost_table(cube, cost)
    m = cube.n_timestamps
    runs = {
        q: consecutive_runs(TeaserState(*envelopes[q], v=1).acceptance(cube.values)) for q in quantiles
    }
    candidates = [(v, q) for v in v_candidates for q in quantiles]

    def score_chunk(chunk):
        return [policy_cost(costs, first_trigger_indices(runs[q] >= v, m)) for v, q in chunk]

    (v, q), best_cost = grid_search(candidates, score_chunk, jobs)
    logger.info(f"TEASER trigger: v={v}, quantile={q} (calibration cost {best_cost:.6f})")
    return TeaserState(*envelopes[q], v=int(v), quantile=float(q), fit_cost=best_cost)
