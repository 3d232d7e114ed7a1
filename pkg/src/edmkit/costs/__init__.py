from edmkit.costs.cost_model import (
    CostMatrices,
    CostSpec,
    LinearDelay,
    TableDelay,
    ValidationResult,
    build_cost_matrices,
    cost_spec_from_dict,
    cost_spec_to_dict,
    load_cost_spec,
    symmetric_cost_spec,
    validate_spec,
    with_timestamps,
)

__all__ = [
    "CostMatrices",
    "CostSpec",
    "LinearDelay",
    "TableDelay",
    "ValidationResult",
    "build_cost_matrices",
    "cost_spec_from_dict",
    "cost_spec_to_dict",
    "load_cost_spec",
    "symmetric_cost_spec",
    "validate_spec",
    "with_timestamps",
]
