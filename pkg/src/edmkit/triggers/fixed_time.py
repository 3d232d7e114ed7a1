from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from edmkit.classifiers import ProbabilityCube
from edmkit.costs import CostMatrices
from edmkit.triggers.base import TriggerModel
from edmkit.triggers.simulate import check_cube, fixed_time_costs
from edmkit.utils.logger import logger


@dataclass(frozen=True)
class FixedTimeState(TriggerModel):
    """Always decide at timestamp index ``index``."""

    index: int
    n_timestamps: int
    fit_cost: Optional[float] = None

    name = "fixed-time"

    def trigger_mask(self, posteriors: np.ndarray) -> np.ndarray:
        n, k = posteriors.shape[:2]
        return np.broadcast_to(np.arange(k) >= self.index, (n, k))

    def to_dict(self) -> Dict[str, Any]:
        return {"trigger": self.name, "index": self.index, "fit_cost": self.fit_cost}


def fit_fixed_time(cube: ProbabilityCube, cost: CostMatrices, jobs: int = 1) -> FixedTimeState:
    """Earliest timestamp index with the lowest mean calibration cost."""
    check_cube(cube, cost)
    costs = fixed_time_costs(cube, cost)
    index = int(np.argmin(costs))
    logger.info(f"Fixed-time trigger: index={index} (calibration cost {costs[index]:.6f})")
    return FixedTimeState(index=index, n_timestamps=cube.n_timestamps, fit_cost=float(costs[index]))
