from dataclasses import dataclass
from itertools import product
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from edmkit.classifiers import ProbabilityCube
from edmkit.costs import CostMatrices
from edmkit.triggers.base import TriggerModel
from edmkit.triggers.simulate import check_cube, cost_table, first_trigger_indices, grid_search, policy_cost
from edmkit.utils.logger import logger

GAMMA_VALUES = tuple(np.arange(-10, 11) / 10.0)


def rule_features(posteriors: np.ndarray, time_fractions: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Largest posterior, margin to the second largest, and elapsed fraction t_k / max_T.

    Args:
        posteriors (np.ndarray): Shape (n, k, n_classes).
        time_fractions (np.ndarray): At least ``k`` values.

    Returns:
        Tuple of three arrays broadcastable to (n, k).
    """
    ordered = np.sort(posteriors, axis=-1)
    p1 = ordered[..., -1]
    p2 = ordered[..., -2] if posteriors.shape[-1] > 1 else np.zeros_like(p1)
    fractions = np.asarray(time_fractions, dtype=float)[: posteriors.shape[1]][None, :]
    return p1, p1 - p2, fractions


def rule_scores(features, gammas: np.ndarray) -> np.ndarray:
    """Rule value ``g1*p1 + g2*(p1-p2) + g3*t/max_T`` for each gamma row, shape (..., G)."""
    p1, margin, fractions = features
    gammas = np.atleast_2d(gammas)
    return (
        p1[..., None] * gammas[:, 0]
        + margin[..., None] * gammas[:, 1]
        + np.broadcast_to(fractions, p1.shape)[..., None] * gammas[:, 2]
    )


@dataclass(frozen=True)
class StoppingRuleState(TriggerModel):
    """Trigger when ``gamma1*p1 + gamma2*(p1 - p2) + gamma3*t_k/max_T >= 0``."""

    gamma1: float
    gamma2: float
    gamma3: float
    time_fractions: Tuple[float, ...]
    fit_cost: Optional[float] = None

    name = "stopping-rule"

    @property
    def n_timestamps(self) -> int:
        return len(self.time_fractions)

    @property
    def gammas(self) -> np.ndarray:
        return np.array([[self.gamma1, self.gamma2, self.gamma3]])

    def trigger_mask(self, posteriors: np.ndarray) -> np.ndarray:
        return rule_scores(rule_features(posteriors, self.time_fractions), self.gammas)[..., 0] >= 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trigger": self.name,
            "gamma": [self.gamma1, self.gamma2, self.gamma3],
            "fit_cost": self.fit_cost,
        }


def fit_stopping_rule(
    cube: ProbabilityCube, cost: CostMatrices, values: Optional[Sequence[float]] = None, jobs: int = 1
) -> StoppingRuleState:
    """
    Exhaustive search of the rule coefficients over ``values``^3.

    Candidates are visited in lexicographic order, so ties go to the
    lexicographically smallest triple.
    """
    check_cube(cube, cost)
    values = sorted(GAMMA_VALUES if values is None else values)
    candidates = list(product(values, repeat=3))
    costs = cost_table(cube, cost)
    fractions = cost.time_fractions
    features = rule_features(cube.values, fractions)
    m = cube.n_timestamps

    def score_chunk(triples):
        triggered = rule_scores(features, np.array(triples)) >= 0
        return [policy_cost(costs, first_trigger_indices(triggered[..., g], m)) for g in range(len(triples))]

    best, best_cost = grid_search(candidates, score_chunk, jobs, chunk_size=len(values) ** 2)
    logger.info(f"Stopping rule: gamma={best} (calibration cost {best_cost:.6f})")
    return StoppingRuleState(
        gamma1=float(best[0]),
        gamma2=float(best[1]),
        gamma3=float(best[2]),
        time_fractions=tuple(float(f) for f in fractions),
        fit_cost=best_cost,
    )
