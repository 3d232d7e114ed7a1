from dataclasses import fields
from typing import Protocol, runtime_checkable

import numpy as np

from edmkit.errors import InvalidParam

POSTERIOR_TOLERANCE = 1e-9


@runtime_checkable
class ProbabilisticClassifier(Protocol):
    """
    Anything a collection can hold: ``fit`` on prefixes, then ``predict_proba``.

    ``predict_proba`` returns one row per input prefix, non-negative and summing to 1.
    """

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "ProbabilisticClassifier":
        ...

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        ...


def argmax_lowest(posteriors: np.ndarray) -> np.ndarray:
    """Argmax over the last axis; ties resolve to the lowest class index."""
    return np.argmax(posteriors, axis=-1)


_FIELD_KINDS = {int: (int, np.integer), float: (int, float, np.integer, np.floating), str: (str,)}


def check_field_types(config) -> None:
    """
    Raise InvalidParam when a dataclass config field holds a value of the wrong kind.

    Booleans are not accepted as numbers.
    """
    for item in fields(config):
        value = getattr(config, item.name)
        kinds = _FIELD_KINDS.get(item.type)
        if kinds and (isinstance(value, bool) or not isinstance(value, kinds)):
            raise InvalidParam(f"{item.name} must be {item.type.__name__}, got {value!r}")
