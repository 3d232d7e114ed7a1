from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from edmkit.classifiers import ProbabilityCube
from edmkit.costs import CostMatrices
from edmkit.errors import InvalidParam
from edmkit.triggers.base import TriggerModel
from edmkit.triggers.simulate import check_cube, cost_table, simulate_policy
from edmkit.utils.logger import logger


@dataclass(frozen=True, eq=False)
class RidgeRegressor:
    """Linear model with an unpenalized intercept."""

    weights: np.ndarray
    intercept: float

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray, penalty: float = 1.0) -> "RidgeRegressor":
        """
        Closed-form ridge solution on centred data.

        Args:
            X (np.ndarray): Features, shape (n, d).
            y (np.ndarray): Targets, shape (n,).
            penalty (float): L2 penalty on the weights (lambda >= 0).
        """
        x_mean, y_mean = X.mean(axis=0), y.mean()
        Xc, yc = X - x_mean, y - y_mean
        gram = Xc.T @ Xc
        if penalty > 0:
            weights = np.linalg.solve(gram + penalty * np.eye(X.shape[1]), Xc.T @ yc)
        else:
            weights = np.linalg.lstsq(Xc, yc, rcond=None)[0]
        return cls(weights=weights, intercept=float(y_mean - x_mean @ weights))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights + self.intercept


def halting_features(posteriors: np.ndarray, time_fractions: np.ndarray) -> np.ndarray:
    """Posterior vector, margin p1 - p2 and t_k / max_T, shape (n, k, n_classes + 2)."""
    ordered = np.sort(posteriors, axis=-1)
    margin = ordered[..., -1] - (ordered[..., -2] if posteriors.shape[-1] > 1 else 0.0)
    fractions = np.broadcast_to(np.asarray(time_fractions)[: posteriors.shape[1]], margin.shape)
    return np.concatenate([posteriors, margin[..., None], fractions[..., None]], axis=-1)


@dataclass(frozen=True, eq=False)
class CalimeraState(TriggerModel):
    """
    One regressor per non-final index predicting (cost of continuing) - (cost of deciding now).

    The model triggers when the prediction is non-negative.
    """

    regressors: Tuple[Any, ...]
    time_fractions: Tuple[float, ...]
    penalty: float = 1.0
    fit_cost: Optional[float] = None

    name = "calimera"

    @property
    def n_timestamps(self) -> int:
        return len(self.time_fractions)

    def trigger_mask(self, posteriors: np.ndarray) -> np.ndarray:
        features = halting_features(posteriors, np.asarray(self.time_fractions))
        n, k = posteriors.shape[:2]
        mask = np.zeros((n, k), dtype=bool)
        for j in range(min(k, len(self.regressors))):
            mask[:, j] = self.regressors[j].predict(features[:, j]) >= 0
        return mask

    def to_dict(self) -> Dict[str, Any]:
        regressors = []
        for regressor in self.regressors:
            if isinstance(regressor, RidgeRegressor):
                regressors.append({"weights": regressor.weights.tolist(), "intercept": regressor.intercept})
            else:
                regressors.append({"type": type(regressor).__name__})
        return {"trigger": self.name, "penalty": self.penalty, "regressors": regressors, "fit_cost": self.fit_cost}


RegressorFactory = Callable[[np.ndarray, np.ndarray], Any]


def fit_calimera(
    cube: ProbabilityCube,
    cost: CostMatrices,
    penalty: float = 1.0,
    regressor_factory: Optional[RegressorFactory] = None,
    jobs: int = 1,
) -> CalimeraState:
    """
    Backward recursion fitting one halting regressor per timestamp.

    At the final index the optimal cost is the cost of deciding. Earlier, the
    regressor learns ``c*(k+1) - cost_now(k)`` and ``c*(k)`` follows its decision.

    Args:
        cube (ProbabilityCube): Out-of-fold calibration posteriors.
        cost (CostMatrices): Cost setting.
        penalty (float): Ridge penalty lambda.
        regressor_factory (Optional[RegressorFactory]): ``(X, y) -> model with predict``;
            defaults to :class:`RidgeRegressor` with ``penalty``.
        jobs (int): Unused; the recursion is sequential over timestamps.
    """
    check_cube(cube, cost)
    if penalty < 0:
        raise InvalidParam(f"penalty must be >= 0, got {penalty}")
    if regressor_factory is None:
        regressor_factory = lambda X, y: RidgeRegressor.fit(X, y, penalty)  # noqa: E731

    fractions = cost.time_fractions
    features = halting_features(cube.values, fractions)
    cost_now = cost_table(cube, cost)
    m = cube.n_timestamps

    optimal = cost_now[:, -1].copy()
    regressors = [None] * (m - 1)
    for k in range(m - 2, -1, -1):
        targets = optimal - cost_now[:, k]
        regressors[k] = regressor_factory(features[:, k], targets)
        halt = regressors[k].predict(features[:, k]) >= 0
        optimal = np.where(halt, cost_now[:, k], optimal)
        logger.debug(f"CALIMERA index {k}: halting {int(halt.sum())}/{len(halt)} calibration series")

    state = CalimeraState(regressors=tuple(regressors), time_fractions=tuple(float(f) for f in fractions), penalty=penalty)
    fit_cost = simulate_policy(state, cube, cost)
    logger.info(f"CALIMERA trigger: lambda={penalty} (calibration cost {fit_cost:.6f})")
    return CalimeraState(
        regressors=state.regressors, time_fractions=state.time_fractions, penalty=penalty, fit_cost=fit_cost
    )
