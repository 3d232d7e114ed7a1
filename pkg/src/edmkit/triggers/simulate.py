from typing import Callable, List, Sequence, Tuple, TypeVar

import numpy as np
from joblib import Parallel, delayed

from edmkit.classifiers import OUT_OF_FOLD, ProbabilityCube, argmax_lowest
from edmkit.costs import CostMatrices
from edmkit.errors import EmptyCube, TimestampMismatch
from edmkit.triggers.base import TriggerModel
from edmkit.utils.logger import logger

Candidate = TypeVar("Candidate")


def check_cube(cube: ProbabilityCube, cost: CostMatrices) -> None:
    """
    Reject cubes that cannot be calibrated against ``cost``.

    Raises:
        EmptyCube: If the cube holds no series.
        TimestampMismatch: If cube and cost disagree on timestamps or classes.
    """
    if cube.n_series == 0:
        raise EmptyCube("calibration cube holds no series")
    if cube.n_timestamps != cost.n_timestamps:
        raise TimestampMismatch(f"cube has {cube.n_timestamps} timestamps, cost grid has {cost.n_timestamps}")
    if cube.n_classes != cost.n_classes:
        raise TimestampMismatch(f"cube has {cube.n_classes} classes, cost setting has {cost.n_classes}")
    if cube.provenance != OUT_OF_FOLD:
        logger.warning(f"Calibrating a trigger on a {cube.provenance} cube; confidences will be optimistic")


def cost_table(cube: ProbabilityCube, cost: CostMatrices) -> np.ndarray:
    """Cost of deciding series ``i`` at index ``k`` with the argmax prediction, shape (n, m)."""
    predictions = argmax_lowest(cube.values)
    k_index = np.arange(cube.n_timestamps)[None, :]
    return cost.tables[k_index, cube.labels[:, None], predictions]


def misclf_table(cube: ProbabilityCube, cost: CostMatrices) -> np.ndarray:
    """Misclassification part of :func:`cost_table`, shape (n, m)."""
    return cost.misclf[cube.labels[:, None], argmax_lowest(cube.values)]


def first_trigger_indices(mask: np.ndarray, n_timestamps: int) -> np.ndarray:
    """Index of the first voluntary trigger per row, or the final index when none fires."""
    padded = np.zeros((mask.shape[0], n_timestamps), dtype=bool)
    padded[:, : mask.shape[1]] = mask
    padded[:, -1] = True
    return np.argmax(padded, axis=1)


def policy_cost(costs: np.ndarray, indices: np.ndarray) -> float:
    return float(np.mean(costs[np.arange(len(indices)), indices]))


def simulate_policy(trigger: TriggerModel, cube: ProbabilityCube, cost: CostMatrices) -> float:
    """
    Mean decision cost of ``trigger`` walking every calibration series.

    Each series stops at its first trigger (forced at the last timestamp) and pays
    the cost of its argmax prediction there.
    """
    check_cube(cube, cost)
    indices = first_trigger_indices(trigger.trigger_mask(cube.values), cube.n_timestamps)
    return policy_cost(cost_table(cube, cost), indices)


def fixed_time_costs(cube: ProbabilityCube, cost: CostMatrices) -> np.ndarray:
    """Mean calibration cost of always deciding at each timestamp index."""
    costs = cost_table(cube, cost)
    return np.array([policy_cost(costs, np.full(cube.n_series, k)) for k in range(cube.n_timestamps)])


def _chunks(items: Sequence, size: int) -> List[Sequence]:
    return [items[start : start + size] for start in range(0, len(items), size)]


def grid_search(
    candidates: Sequence[Candidate],
    score_chunk: Callable[[Sequence[Candidate]], List[float]],
    jobs: int = 1,
    chunk_size: int = 256,
) -> Tuple[Candidate, float]:
    """
    Minimize a cost over candidates, evaluating chunks concurrently.

    Ties go to the earliest candidate in ``candidates`` order.

    Returns:
        Tuple[Candidate, float]: Winning candidate and its cost.
    """
    chunks = _chunks(list(candidates), chunk_size)
    scored = Parallel(n_jobs=jobs, prefer="threads")(delayed(score_chunk)(chunk) for chunk in chunks)
    costs = np.array([c for chunk_costs in scored for c in chunk_costs])
    best = int(np.argmin(costs))
    return candidates[best], float(costs[best])
