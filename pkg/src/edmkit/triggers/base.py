from abc import ABC, abstractmethod
from typing import Any, Dict

import numpy as np

from edmkit.errors import LengthMismatch


class TriggerModel(ABC):
    """
    Halting policy over posterior histories.

    Subclasses are frozen dataclasses holding fitted parameters and an ``n_timestamps``
    field. Timestamp indices are 0-based; a history for index ``k`` has ``k + 1`` rows.
    """

    name = "trigger"

    @abstractmethod
    def trigger_mask(self, posteriors: np.ndarray) -> np.ndarray:
        """
        Voluntary trigger decisions for every prefix of every history.

        Args:
            posteriors (np.ndarray): Shape (n, k, n_classes) with ``k <= n_timestamps``.

        Returns:
            np.ndarray: Boolean array (n, k); entry ``[i, j]`` is the decision after
            seeing rows ``0..j`` of history ``i``. The forced final decision is not included.
        """

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """Fitted parameters as plain JSON-ready values."""

    def should_trigger(self, history: np.ndarray, k: int) -> bool:
        """
        Decide whether to act at timestamp index ``k``.

        Raises:
            LengthMismatch: If ``history`` does not hold exactly ``k + 1`` posteriors.
        """
        history = np.asarray(history, dtype=float)
        if history.ndim != 2 or history.shape[0] != k + 1:
            raise LengthMismatch(f"history for index {k} must have {k + 1} rows, got shape {history.shape}")
        if k >= self.n_timestamps - 1:
            return True
        return bool(self.trigger_mask(history[None, :, :])[0, k])
