import copy
import difflib
import hashlib
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from edmkit.errors import ConfigError, InvalidParam, UnknownConfigKey
from edmkit.pipeline.evaluation import canonical_json

FREE = "free-form"

# Leaves are None, nested sections are dicts, FREE sections accept any keys.
SCHEMA: Dict[str, Any] = {
    "dataset": {
        "train": None,
        "test": None,
        "normalize": None,
        "synthetic": {"n_per_class": None, "length": None, "t_star": None, "gap": None, "noise_sd": None},
    },
    "cost": {"alpha": None, "misclf": None, "delay_table": None, "spec_file": None},
    "classifier": {"name": None, "params": FREE},
    "trigger": {"name": None, "params": FREE},
    "sweep": {"triggers": None, "alphas": None},
    "timestamps": None,
    "folds": None,
    "seed": None,
    "jobs": None,
    "output": None,
}

DEFAULTS: Dict[str, Any] = {
    "dataset": {"train": None, "test": None, "normalize": True, "synthetic": None},
    "cost": {"alpha": 1.0, "misclf": None, "delay_table": None, "spec_file": None},
    "classifier": {"name": "knn", "params": {}},
    "trigger": {"name": "threshold", "params": {}},
    "sweep": {"triggers": [], "alphas": []},
    "timestamps": 20,
    "folds": 5,
    "seed": 0,
    "jobs": None,
    "output": "reports",
}

def resolve_env_vars(value: Any) -> Any:
    """Resolve ``${VAR}`` placeholders from the environment (empty placeholders become None)."""
    if isinstance(value, str) and value.startswith("${") and value.endswith("}"):
        env_var = value[2:-1]
        return os.getenv(env_var) or None
    return value


def process_env_vars(config: Any) -> Any:
    """Recursively process a loaded document and resolve environment variables."""
    if isinstance(config, dict):
        return {k: process_env_vars(v) for k, v in config.items()}
    elif isinstance(config, list):
        return [process_env_vars(v) for v in config]
    else:
        return resolve_env_vars(config)


def _all_keys(schema: Dict[str, Any], prefix: str = "") -> List[str]:
    keys = []
    for key, sub in schema.items():
        keys.append(prefix + key)
        if isinstance(sub, dict):
            keys.extend(_all_keys(sub, prefix + key + "."))
    return keys


def _suggest(key: str, schema: Dict[str, Any]) -> Optional[str]:
    matches = difflib.get_close_matches(key, list(schema), n=1, cutoff=0.6)
    return matches[0] if matches else None


def _check_keys(node: yaml.Node, schema: Dict[str, Any], path: str = "") -> None:
    if not isinstance(node, yaml.MappingNode):
        return
    for key_node, value_node in node.value:
        key = key_node.value
        if key not in schema:
            raise UnknownConfigKey(path + key, _suggest(key, schema), key_node.start_mark.line + 1)
        sub = schema[key]
        if isinstance(sub, dict):
            _check_keys(value_node, sub, path + key + ".")


def load_config(config_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Load a YAML or JSON configuration file and resolve environment variables.

    Raises:
        ConfigError: If the file is unreadable or not a mapping.
        UnknownConfigKey: With the offending line and a suggested key.
    """
    try:
        text = Path(config_path).read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read config file {config_path}: {e}")
    try:
        node = yaml.compose(text)
        config = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid config file {config_path}: {e}")
    if config is None:
        return {}
    if not isinstance(config, dict):
        raise ConfigError(f"Config file {config_path} must hold a mapping")
    _check_keys(node, SCHEMA)
    return process_env_vars(config)


def _merge(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict) and key != "params":
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _set_dotted(document: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    if dotted not in _all_keys(SCHEMA):
        matches = difflib.get_close_matches(dotted, _all_keys(SCHEMA), n=1)
        raise UnknownConfigKey(dotted, matches[0] if matches else None)
    target = document
    for key in keys[:-1]:
        if not isinstance(target.get(key), dict):
            target[key] = {}
        target = target[key]
    target[keys[-1]] = value


@dataclass(frozen=True)
class SyntheticParams:
    n_per_class: int = 50
    length: int = 100
    t_star: int = 40
    gap: float = 3.0
    noise_sd: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    train: Optional[str] = None
    test: Optional[str] = None
    synthetic: Optional[SyntheticParams] = None
    normalize: bool = True
    alpha: float = 1.0
    misclf: Optional[List[List[float]]] = None
    delay_table: Optional[List[float]] = None
    cost_spec_file: Optional[str] = None
    classifier: str = "knn"
    classifier_params: Dict[str, Any] = field(default_factory=dict)
    trigger: str = "threshold"
    trigger_params: Dict[str, Any] = field(default_factory=dict)
    sweep_triggers: List[str] = field(default_factory=list)
    sweep_alphas: List[float] = field(default_factory=list)
    timestamps: int = 20
    folds: int = 5
    seed: int = 0
    jobs: int = 1
    output: str = "reports"

    def digest(self) -> str:
        """Hash of everything that determines results (``jobs`` and ``output`` excluded)."""
        document = asdict(self)
        for key in ("jobs", "output"):
            document.pop(key)
        return hashlib.sha256(canonical_json(document).encode()).hexdigest()


def _as_int(value: Any, name: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise InvalidParam(f"{name} must be an integer, got {value!r}")


def _as_float(value: Any, name: str) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise InvalidParam(f"{name} must be a real number, got {value!r}")


def build_run_config(document: Dict[str, Any]) -> RunConfig:
    """
    Validate a merged configuration document and build a RunConfig.

    Whether a dataset source is present is checked when the data is loaded, since
    ``synth`` runs without one.

    Raises:
        InvalidParam: On missing or out-of-range values.
    """
    dataset, cost = document["dataset"], document["cost"]
    synthetic = None
    if dataset.get("synthetic") is not None:
        raw = {**asdict(SyntheticParams()), **dataset["synthetic"]}
        synthetic = SyntheticParams(
            n_per_class=_as_int(raw["n_per_class"], "dataset.synthetic.n_per_class"),
            length=_as_int(raw["length"], "dataset.synthetic.length"),
            t_star=_as_int(raw["t_star"], "dataset.synthetic.t_star"),
            gap=_as_float(raw["gap"], "dataset.synthetic.gap"),
            noise_sd=_as_float(raw["noise_sd"], "dataset.synthetic.noise_sd"),
        )
    jobs = document.get("jobs")
    if jobs is None:
        jobs = os.getenv("EDM_JOBS") or 1
    config = RunConfig(
        train=dataset.get("train"),
        test=dataset.get("test"),
        synthetic=synthetic,
        normalize=bool(dataset.get("normalize", True)),
        alpha=_as_float(cost.get("alpha", 1.0), "cost.alpha"),
        misclf=cost.get("misclf"),
        delay_table=cost.get("delay_table"),
        cost_spec_file=cost.get("spec_file"),
        classifier=str(document["classifier"]["name"]),
        classifier_params=dict(document["classifier"].get("params") or {}),
        trigger=str(document["trigger"]["name"]),
        trigger_params=dict(document["trigger"].get("params") or {}),
        sweep_triggers=[str(t) for t in document["sweep"].get("triggers") or []],
        sweep_alphas=[_as_float(a, "sweep.alphas") for a in document["sweep"].get("alphas") or []],
        timestamps=_as_int(document["timestamps"], "timestamps"),
        folds=_as_int(document["folds"], "folds"),
        seed=_as_int(document["seed"], "seed"),
        jobs=_as_int(jobs, "jobs"),
        output=str(document["output"]),
    )

    if config.jobs < 1:
        raise InvalidParam(f"jobs must be >= 1, got {config.jobs}")
    if config.folds < 2:
        raise InvalidParam(f"folds must be >= 2, got {config.folds}")
    if config.timestamps < 1:
        raise InvalidParam(f"timestamps must be >= 1, got {config.timestamps}")
    if config.alpha < 0:
        raise InvalidParam(f"cost.alpha must be >= 0, got {config.alpha}")
    return config


def parse_config(config_path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Build a RunConfig from defaults, an optional config file and flag overrides.

    Args:
        config_path (Optional[Union[str, Path]]): YAML or JSON file.
        overrides (Optional[Dict[str, Any]]): Dotted keys (``"cost.alpha"``) set by flags;
            None values are ignored.

    Returns:
        RunConfig: Flags win over file values, file values over defaults.
    """
    document = copy.deepcopy(DEFAULTS)
    if config_path is not None:
        document = _merge(document, load_config(config_path))
    for dotted, value in (overrides or {}).items():
        if value is not None:
            _set_dotted(document, dotted, value)
    return build_run_config(document)
