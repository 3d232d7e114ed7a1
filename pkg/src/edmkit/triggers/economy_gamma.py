from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, Optional, Tuple

import numpy as np

from edmkit.classifiers import ProbabilityCube
from edmkit.costs import CostMatrices
from edmkit.errors import InvalidParam
from edmkit.triggers.base import TriggerModel
from edmkit.triggers.simulate import check_cube, misclf_table, simulate_policy
from edmkit.utils.logger import logger


def equal_frequency_boundaries(confidences: np.ndarray, n_bins: int) -> np.ndarray:
    """
    Cut points splitting ``confidences`` into ``n_bins`` equal-frequency groups.

    Each cut sits halfway between the neighbouring order statistics; duplicate cuts
    are merged, which leaves fewer populated bins when values repeat.
    """
    ordered = np.sort(confidences)
    n = len(ordered)
    cuts = []
    for j in range(1, n_bins):
        position = (j * n) // n_bins
        if 1 <= position <= n - 1:
            cuts.append((ordered[position - 1] + ordered[position]) / 2.0)
    return np.unique(np.asarray(cuts, dtype=float))


def assign_bins(confidences: np.ndarray, boundaries: np.ndarray) -> np.ndarray:
    return np.searchsorted(boundaries, confidences, side="right")


def laplace_transitions(source: np.ndarray, target: np.ndarray, n_bins: int) -> np.ndarray:
    """``P[g, h] = (count(g -> h) + 1) / (count(g) + n_bins)``."""
    counts = np.zeros((n_bins, n_bins))
    np.add.at(counts, (source, target), 1.0)
    return (counts + 1.0) / (counts.sum(axis=1, keepdims=True) + n_bins)


@dataclass(frozen=True, eq=False)
class EconomyGammaState(TriggerModel):
    """
    Confidence-bin Markov forecast of the expected decision cost.

    ``boundaries[k]`` bins the max posterior at index ``k``; ``expected_misclf[k, g]`` is
    the mean misclassification cost of bin ``g``; ``transitions[k]`` moves bins from
    ``k`` to ``k + 1``; ``delays[k]`` is D(t_k).
    """

    n_bins: int
    boundaries: Tuple[np.ndarray, ...]
    expected_misclf: np.ndarray
    transitions: Tuple[np.ndarray, ...]
    delays: np.ndarray
    fit_cost: Optional[float] = None

    name = "economy-gamma"

    @property
    def n_timestamps(self) -> int:
        return len(self.delays)

    def forecast(self, k: int) -> np.ndarray:
        """
        Expected cost of deciding at every index ``tau >= k`` from each current bin.

        Returns:
            np.ndarray: Shape (n_bins, m - k); column ``j`` is ``f(k + j)``.
        """
        m = self.n_timestamps
        reach = np.eye(self.n_bins)
        forecasts = np.empty((self.n_bins, m - k))
        for tau in range(k, m):
            forecasts[:, tau - k] = reach @ self.expected_misclf[tau] + self.delays[tau]
            if tau < m - 1:
                reach = reach @ self.transitions[tau]
        return forecasts

    @cached_property
    def decision_table(self) -> np.ndarray:
        """``table[k, g]`` is True when deciding now is no worse than any later index."""
        m = self.n_timestamps
        table = np.ones((m, self.n_bins), dtype=bool)
        for k in range(m - 1):
            forecasts = self.forecast(k)
            table[k] = forecasts[:, 0] <= forecasts[:, 1:].min(axis=1)
        return table

    def trigger_mask(self, posteriors: np.ndarray) -> np.ndarray:
        confidences = posteriors.max(axis=-1)
        mask = np.empty(confidences.shape, dtype=bool)
        for k in range(confidences.shape[1]):
            bins = assign_bins(confidences[:, k], self.boundaries[k])
            mask[:, k] = self.decision_table[k, bins]
        return mask

    def to_dict(self) -> Dict[str, Any]:
        return {
            "trigger": self.name,
            "n_bins": self.n_bins,
            "boundaries": [b.tolist() for b in self.boundaries],
            "expected_misclf": self.expected_misclf.tolist(),
            "transitions": [p.tolist() for p in self.transitions],
            "fit_cost": self.fit_cost,
        }


def fit_economy_gamma(cube: ProbabilityCube, cost: CostMatrices, n_bins: int = 5, jobs: int = 1) -> EconomyGammaState:
    """
    Bin calibration confidences per timestamp and estimate bin costs and transitions.

    Args:
        cube (ProbabilityCube): Out-of-fold calibration posteriors.
        cost (CostMatrices): Cost setting.
        n_bins (int): Number of equal-frequency confidence bins (K).
        jobs (int): Unused; the fit is a forward pass over timestamps.

    Returns:
        EconomyGammaState: Deterministic fitted state.
    """
    check_cube(cube, cost)
    if n_bins < 1:
        raise InvalidParam(f"n_bins must be >= 1, got {n_bins}")

    confidences = cube.values.max(axis=-1)
    errors = misclf_table(cube, cost)
    m = cube.n_timestamps

    boundaries, bins = [], np.empty(confidences.shape, dtype=int)
    expected = np.empty((m, n_bins))
    for k in range(m):
        cuts = equal_frequency_boundaries(confidences[:, k], n_bins)
        cuts.setflags(write=False)
        boundaries.append(cuts)
        bins[:, k] = assign_bins(confidences[:, k], cuts)
        fallback = errors[:, k].mean()
        for g in range(n_bins):
            members = bins[:, k] == g
            expected[k, g] = errors[members, k].mean() if members.any() else fallback
        logger.debug(f"Economy-gamma index {k}: cuts={cuts.tolist()} expected={expected[k].tolist()}")

    transitions = []
    for k in range(m - 1):
        step = laplace_transitions(bins[:, k], bins[:, k + 1], n_bins)
        step.setflags(write=False)
        transitions.append(step)

    delays = cost.delays
    expected.setflags(write=False)
    delays.setflags(write=False)
    state = EconomyGammaState(
        n_bins=n_bins,
        boundaries=tuple(boundaries),
        expected_misclf=expected,
        transitions=tuple(transitions),
        delays=delays,
    )
    fit_cost = simulate_policy(state, cube, cost)
    logger.info(f"Economy-gamma trigger: K={n_bins} (calibration cost {fit_cost:.6f})")
    return EconomyGammaState(
        n_bins=n_bins,
        boundaries=state.boundaries,
        expected_misclf=expected,
        transitions=state.transitions,
        delays=delays,
        fit_cost=fit_cost,
    )
