from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from edmkit.classifiers import ProbabilityCube
from edmkit.costs import CostMatrices
from edmkit.triggers.base import TriggerModel
from edmkit.triggers.simulate import check_cube, cost_table, first_trigger_indices, grid_search, policy_cost
from edmkit.utils.logger import logger

THETA_GRID = tuple(np.arange(101) / 100.0)


@dataclass(frozen=True)
class ThresholdState(TriggerModel):
    """Trigger as soon as the largest posterior reaches ``theta``."""

    theta: float
    n_timestamps: int
    fit_cost: Optional[float] = None

    name = "threshold"

    def trigger_mask(self, posteriors: np.ndarray) -> np.ndarray:
        return posteriors.max(axis=-1) >= self.theta

    def to_dict(self) -> Dict[str, Any]:
        return {"trigger": self.name, "theta": self.theta, "fit_cost": self.fit_cost}


def fit_threshold(
    cube: ProbabilityCube, cost: CostMatrices, grid: Optional[Sequence[float]] = None, jobs: int = 1
) -> ThresholdState:
    """
    Pick the confidence threshold with the lowest simulated calibration cost.

    Args:
        cube (ProbabilityCube): Out-of-fold calibration posteriors.
        cost (CostMatrices): Cost setting.
        grid (Optional[Sequence[float]]): Candidate thresholds, ascending. Defaults to 0.00..1.00.
        jobs (int): Worker count for candidate evaluation.

    Returns:
        ThresholdState: Smallest theta among the cost minimizers.
    """
    check_cube(cube, cost)
    grid = sorted(THETA_GRID if grid is None else grid)
    costs = cost_table(cube, cost)
    p_max = cube.values.max(axis=-1)
    m = cube.n_timestamps

    def score_chunk(thetas):
        return [policy_cost(costs, first_trigger_indices(p_max >= theta, m)) for theta in thetas]

    theta, best_cost = grid_search(grid, score_chunk, jobs)
    logger.info(f"Threshold trigger: theta={theta} (calibration cost {best_cost:.6f})")
    return ThresholdState(theta=float(theta), n_timestamps=m, fit_cost=best_cost)
