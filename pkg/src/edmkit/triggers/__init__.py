from typing import Any, Dict, Optional

from edmkit.classifiers import ProbabilityCube
from edmkit.costs import CostMatrices
from edmkit.errors import InvalidParam
from edmkit.triggers.base import TriggerModel
from edmkit.triggers.calimera import CalimeraState, RidgeRegressor, fit_calimera
from edmkit.triggers.ecec import EcecState, fit_ecec
from edmkit.triggers.economy_gamma import EconomyGammaState, fit_economy_gamma
from edmkit.triggers.fixed_time import FixedTimeState, fit_fixed_time
from edmkit.triggers.simulate import fixed_time_costs, simulate_policy
from edmkit.triggers.stopping_rule import StoppingRuleState, fit_stopping_rule
from edmkit.triggers.teaser import TeaserState, fit_teaser
from edmkit.triggers.threshold import ThresholdState, fit_threshold
from edmkit.utils.logger import logger


def _integer(value: Any) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"not an integer: {value!r}")
    return int(value)


TRIGGER_FITTERS = {
    "threshold": {"fit": fit_threshold, "params": {"theta": float}},
    "stopping-rule": {"fit": fit_stopping_rule, "params": {"gamma": lambda value: [float(g) for g in value]}},
    "economy-gamma": {"fit": fit_economy_gamma, "params": {"n_bins": _integer}},
    "ecec": {"fit": fit_ecec, "params": {}},
    "teaser": {"fit": fit_teaser, "params": {"quantile": float}},
    "calimera": {"fit": fit_calimera, "params": {"penalty": float}},
    "fixed-time": {"fit": fit_fixed_time, "params": {}},
}


def fit_trigger(
    name: str,
    cube: ProbabilityCube,
    cost: CostMatrices,
    params: Optional[Dict[str, Any]] = None,
    jobs: int = 1,
) -> TriggerModel:
    """
    Calibrate the trigger model registered under ``name``.

    An explicit ``theta`` (threshold) or ``gamma`` triple (stopping-rule) skips the
    search and fixes the parameter; its calibration cost is still recorded.

    Raises:
        InvalidParam: For an unknown trigger or parameter.
    """
    entry = TRIGGER_FITTERS.get(name)
    if not entry:
        raise InvalidParam(f"Unsupported trigger: {name}")
    params = dict(params or {})
    unknown = sorted(set(params) - set(entry["params"]))
    if unknown:
        raise InvalidParam(f"Unknown {name} parameters: {unknown}")
    for key, value in params.items():
        try:
            params[key] = entry["params"][key](value)
        except (TypeError, ValueError):
            raise InvalidParam(f"{name} parameter {key} has an invalid value: {value!r}")

    if name == "threshold" and "theta" in params:
        state = ThresholdState(theta=params["theta"], n_timestamps=cost.n_timestamps)
        logger.info(f"Threshold trigger fixed at theta={state.theta}")
        return ThresholdState(state.theta, state.n_timestamps, fit_cost=simulate_policy(state, cube, cost))
    if name == "stopping-rule" and "gamma" in params:
        gamma = params["gamma"]
        if len(gamma) != 3:
            raise InvalidParam(f"gamma needs three coefficients, got {gamma}")
        fractions = tuple(float(f) for f in cost.time_fractions)
        state = StoppingRuleState(*gamma, time_fractions=fractions)
        logger.info(f"Stopping rule fixed at gamma={gamma}")
        return StoppingRuleState(*gamma, time_fractions=fractions, fit_cost=simulate_policy(state, cube, cost))

    return entry["fit"](cube, cost, jobs=jobs, **params)


__all__ = [
    "TRIGGER_FITTERS",
    "CalimeraState",
    "EcecState",
    "EconomyGammaState",
    "FixedTimeState",
    "RidgeRegressor",
    "StoppingRuleState",
    "TeaserState",
    "ThresholdState",
    "TriggerModel",
    "fit_calimera",
    "fit_ecec",
    "fit_economy_gamma",
    "fit_fixed_time",
    "fit_stopping_rule",
    "fit_teaser",
    "fit_threshold",
    "fit_trigger",
    "fixed_time_costs",
    "simulate_policy",
]
