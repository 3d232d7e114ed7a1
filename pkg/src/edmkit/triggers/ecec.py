from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from edmkit.classifiers import ProbabilityCube, argmax_lowest
from edmkit.costs import CostMatrices
from edmkit.triggers.base import TriggerModel
from edmkit.triggers.simulate import check_cube, cost_table, first_trigger_indices, grid_search, policy_cost
from edmkit.triggers.threshold import THETA_GRID
from edmkit.utils.logger import logger


def reliabilities(cube: ProbabilityCube) -> np.ndarray:
    """
    Smoothed per-timestamp precision of every predicted class, shape (m, n_classes).

    ``r[k, c] = (#correct predictions of c at k + 1) / (#predictions of c at k + 2)``.
    """
    predictions = argmax_lowest(cube.values)
    n_classes = cube.n_classes
    reliability = np.empty((cube.n_timestamps, n_classes))
    for k in range(cube.n_timestamps):
        predicted = np.bincount(predictions[:, k], minlength=n_classes)
        correct = np.bincount(predictions[:, k], weights=predictions[:, k] == cube.labels, minlength=n_classes)
        reliability[k] = (correct + 1.0) / (predicted + 2.0)
    return reliability


def fused_confidence(posteriors: np.ndarray, reliability: np.ndarray) -> np.ndarray:
    """
    Confidence in the current prediction fused over all earlier agreeing predictions.

    ``conf[i, k] = 1 - prod_{j <= k, argmax_j = c} (1 - r[j, c])`` with ``c`` the argmax at ``k``.

    Returns:
        np.ndarray: Shape (n, k).
    """
    predictions = argmax_lowest(posteriors)
    n, k_len = predictions.shape
    rows = np.arange(n)
    doubt = np.ones((n, reliability.shape[1]))
    confidence = np.empty((n, k_len))
    for k in range(k_len):
        current = predictions[:, k]
        doubt[rows, current] *= 1.0 - reliability[k, current]
        confidence[:, k] = 1.0 - doubt[rows, current]
    return confidence


@dataclass(frozen=True, eq=False)
class EcecState(TriggerModel):
    """Trigger when the fused confidence of the current prediction reaches ``theta``."""

    reliability: np.ndarray
    theta: float
    fit_cost: Optional[float] = None

    name = "ecec"

    @property
    def n_timestamps(self) -> int:
        return self.reliability.shape[0]

    def trigger_mask(self, posteriors: np.ndarray) -> np.ndarray:
        return fused_confidence(posteriors, self.reliability) >= self.theta

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trigger": self.name,
            "theta": self.theta,
            "reliability": self.reliability.tolist(),
            "fit_cost": self.fit_cost,
        }


def fit_ecec(
    cube: ProbabilityCube, cost: CostMatrices, grid: Optional[Sequence[float]] = None, jobs: int = 1
) -> EcecState:
    """Estimate class reliabilities, then grid-search the confidence threshold (ties to the smallest)."""
    check_cube(cube, cost)
    grid = sorted(THETA_GRID if grid is None else grid)
    reliability = reliabilities(cube)
    reliability.setflags(write=False)
    confidence = fused_confidence(cube.values, reliability)
    costs = cost_table(cube, cost)
    m = cube.n_timestamps

    def score_chunk(thetas):
        return [policy_cost(costs, first_trigger_indices(confidence >= theta, m)) for theta in thetas]

    theta, best_cost = grid_search(grid, score_chunk, jobs)
    logger.info(f"ECEC trigger: theta={theta} (calibration cost {best_cost:.6f})")
    return EcecState(reliability=reliability, theta=float(theta), fit_cost=best_cost)
