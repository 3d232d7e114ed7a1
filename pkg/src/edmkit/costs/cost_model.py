import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from edmkit.errors import IndexOutOfRange, InvalidSpec


@dataclass(frozen=True)
class LinearDelay:
    """Delay cost ``D(t) = alpha * t / max_T``."""

    alpha: float


@dataclass(frozen=True)
class TableDelay:
    """Delay cost given explicitly, one value per monitored timestamp."""

    values: Tuple[float, ...]


Delay = Union[LinearDelay, TableDelay]


@dataclass(frozen=True)
class CostSpec:
    """
    Cost setting shared by training and evaluation.

    ``misclf`` is indexed ``[true][predicted]``. ``max_T`` is the last timestamp,
    i.e. the full series length.
    """

    n_classes: int
    timestamps: Tuple[int, ...]
    misclf: Tuple[Tuple[float, ...], ...]
    delay: Delay

    @property
    def max_T(self) -> int:
        return self.timestamps[-1]


@dataclass(frozen=True)
class ValidationResult:
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_spec(spec: CostSpec) -> ValidationResult:
    """
    Check every CostSpec invariant.

    Args:
        spec (CostSpec): Spec to check.

    Returns:
        ValidationResult: All violations found, empty when the spec is valid.
    """
    violations = []

    if not isinstance(spec.n_classes, (int, np.integer)) or spec.n_classes < 1:
        violations.append("n_classes must be a positive integer")

    timestamps = list(spec.timestamps)
    if not timestamps:
        violations.append("timestamps must not be empty")
    else:
        if timestamps[0] < 1:
            violations.append("timestamps must be 1-based prefix lengths (>= 1)")
        if any(b <= a for a, b in zip(timestamps, timestamps[1:])):
            violations.append("timestamps not strictly increasing")

    try:
        misclf = np.asarray(spec.misclf, dtype=float)
    except (TypeError, ValueError):
        misclf = np.empty(0)
    if misclf.shape != (spec.n_classes, spec.n_classes):
        violations.append(f"misclf must be {spec.n_classes}x{spec.n_classes}, got shape {misclf.shape}")
    elif not np.all(np.isfinite(misclf)):
        violations.append("misclassification costs must be finite")
    elif np.any(misclf < 0):
        violations.append("negative misclassification cost")

    if isinstance(spec.delay, LinearDelay):
        if not np.isfinite(spec.delay.alpha) or spec.delay.alpha < 0:
            violations.append("linear delay alpha must be a non-negative real")
    elif isinstance(spec.delay, TableDelay):
        values = list(spec.delay.values)
        if len(values) != len(timestamps):
            violations.append(f"delay table has {len(values)} values for {len(timestamps)} timestamps")
        if any(v < 0 or not np.isfinite(v) for v in values):
            violations.append("negative delay cost")
        if any(b < a for a, b in zip(values, values[1:])):
            violations.append("delay table not non-decreasing")
    else:
        violations.append(f"unknown delay kind {type(spec.delay).__name__}")

    return ValidationResult(violations)


def delay_values(spec: CostSpec) -> np.ndarray:
    """Delay cost at every monitored timestamp."""
    if isinstance(spec.delay, LinearDelay):
        fractions = np.asarray(spec.timestamps, dtype=float) / spec.max_T
        return spec.delay.alpha * fractions
    return np.asarray(spec.delay.values, dtype=float)


@dataclass(frozen=True, eq=False)
class CostMatrices:
    """
    Per-timestamp decision costs ``tables[k][y][y_hat] = misclf[y][y_hat] + D(t_k)``.

    Arrays are read-only so instances can be shared between workers.
    """

    spec: CostSpec
    tables: np.ndarray

    @property
    def timestamps(self) -> Tuple[int, ...]:
        return self.spec.timestamps

    @property
    def n_timestamps(self) -> int:
        return len(self.spec.timestamps)

    @property
    def max_T(self) -> int:
        return self.spec.max_T

    @property
    def n_classes(self) -> int:
        return self.spec.n_classes

    @property
    def misclf(self) -> np.ndarray:
        return np.asarray(self.spec.misclf, dtype=float)

    @property
    def delays(self) -> np.ndarray:
        return delay_values(self.spec)

    @property
    def time_fractions(self) -> np.ndarray:
        return np.asarray(self.spec.timestamps, dtype=float) / self.spec.max_T

    def decision_cost(self, y_true: int, y_pred: int, k: int) -> float:
        """
        Cost of predicting ``y_pred`` at timestamp index ``k`` when the truth is ``y_true``.

        Raises:
            IndexOutOfRange: If any index falls outside the cost grid.
        """
        if not 0 <= k < self.n_timestamps:
            raise IndexOutOfRange(f"timestamp index {k} outside [0, {self.n_timestamps})")
        for name, value in (("y_true", y_true), ("y_pred", y_pred)):
            if not 0 <= value < self.n_classes:
                raise IndexOutOfRange(f"{name}={value} outside [0, {self.n_classes})")
        return float(self.tables[k, y_true, y_pred])


def _materialize(spec: CostSpec) -> np.ndarray:
    misclf = np.asarray(spec.misclf, dtype=float)
    tables = misclf[None, :, :] + delay_values(spec)[:, None, None]
    tables.setflags(write=False)
    return tables


def build_cost_matrices(spec: CostSpec) -> CostMatrices:
    """
    Validate ``spec`` and materialize its per-timestamp cost tables.

    Raises:
        InvalidSpec: Listing every violated invariant.
    """
    result = validate_spec(spec)
    if not result.ok:
        raise InvalidSpec(result.violations)
    return CostMatrices(spec=spec, tables=_materialize(spec))


def symmetric_cost_spec(n_classes: int, timestamps: Sequence[int], alpha: float = 1.0) -> CostSpec:
    """Binary, symmetric misclassification cost with a linear delay cost."""
    misclf = tuple(tuple(0.0 if i == j else 1.0 for j in range(n_classes)) for i in range(n_classes))
    return CostSpec(
        n_classes=n_classes,
        timestamps=tuple(int(t) for t in timestamps),
        misclf=misclf,
        delay=LinearDelay(alpha=float(alpha)),
    )


def with_timestamps(spec: CostSpec, timestamps: Sequence[int]) -> CostSpec:
    """Same costs on another timestamp grid. Table delays cannot be re-gridded."""
    if isinstance(spec.delay, TableDelay) and len(spec.delay.values) != len(timestamps):
        raise InvalidSpec(["delay table does not match the requested timestamps"])
    return CostSpec(spec.n_classes, tuple(int(t) for t in timestamps), spec.misclf, spec.delay)


def cost_spec_to_dict(spec: CostSpec) -> Dict[str, Any]:
    if isinstance(spec.delay, LinearDelay):
        delay = {"kind": "linear", "alpha": spec.delay.alpha}
    else:
        delay = {"kind": "table", "values": list(spec.delay.values)}
    return {
        "n_classes": spec.n_classes,
        "timestamps": list(spec.timestamps),
        "misclf": [list(row) for row in spec.misclf],
        "delay": delay,
    }


def _integral(value: Any) -> int:
    if isinstance(value, bool) or int(value) != value:
        raise ValueError(f"{value!r} is not an integer")
    return int(value)


def cost_spec_from_dict(data: Any) -> CostSpec:
    """
    Build a CostSpec from its JSON document form.

    Raises:
        InvalidSpec: On a non-object document, missing keys, an unknown delay kind, or
            values of the wrong type (fractional timestamps included).
    """
    if not isinstance(data, dict):
        raise InvalidSpec([f"cost spec must be a JSON object, got {type(data).__name__}"])
    missing = [key for key in ("n_classes", "timestamps", "misclf", "delay") if key not in data]
    if missing:
        raise InvalidSpec([f"missing key '{key}'" for key in missing])

    delay_doc = data["delay"]
    if not isinstance(delay_doc, dict):
        raise InvalidSpec([f"delay must be an object, got {delay_doc!r}"])
    kind = delay_doc.get("kind")
    if kind not in ("linear", "table"):
        raise InvalidSpec([f"unknown delay kind '{kind}'"])
    try:
        if kind == "linear":
            delay = LinearDelay(alpha=float(delay_doc.get("alpha", 1.0)))
        else:
            delay = TableDelay(values=tuple(float(v) for v in delay_doc.get("values", [])))
        n_classes = _integral(data["n_classes"])
        timestamps = tuple(_integral(t) for t in data["timestamps"])
        misclf = tuple(tuple(float(v) for v in row) for row in data["misclf"])
    except (TypeError, ValueError, OverflowError) as e:
        raise InvalidSpec([f"malformed cost spec value: {e}"])

    return CostSpec(n_classes=n_classes, timestamps=timestamps, misclf=misclf, delay=delay)


def load_cost_spec(path: Union[str, Path]) -> CostSpec:
    """
    Read a cost spec JSON document.

    Raises:
        InvalidSpec: If the file cannot be read or does not hold a valid cost spec.
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except OSError as e:
        raise InvalidSpec([f"cannot read cost spec file {path}: {e.strerror or e}"])
    except ValueError as e:
        raise InvalidSpec([f"cost spec file {path} is not valid JSON: {e}"])
    return cost_spec_from_dict(document)
