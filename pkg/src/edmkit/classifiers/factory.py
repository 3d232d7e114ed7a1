from dataclasses import asdict, fields
from typing import Any, Dict, Optional, Union

from edmkit.classifiers.knn import KnnClassifier, KnnConfig
from edmkit.classifiers.logistic import LogisticClassifier, LogisticConfig
from edmkit.errors import InvalidParam
from edmkit.utils.logger import logger

ClassifierConfig = Union[KnnConfig, LogisticConfig]


class ClassifierFactory:
    CLASSIFIER_CONFIGS = {
        "knn": {"config": KnnConfig, "classifier": KnnClassifier},
        "logistic": {"config": LogisticConfig, "classifier": LogisticClassifier},
    }

    @classmethod
    def name_of(cls, config: ClassifierConfig) -> str:
        for name, entry in cls.CLASSIFIER_CONFIGS.items():
            if isinstance(config, entry["config"]):
                return name
        raise InvalidParam(f"Unsupported classifier config: {type(config).__name__}")

    @classmethod
    def create_classifier(cls, config: ClassifierConfig):
        """Fresh, unfitted classifier for ``config``."""
        name = cls.name_of(config)
        logger.debug(f"Creating {name} classifier with {config}")
        return cls.CLASSIFIER_CONFIGS[name]["classifier"](config)

    @classmethod
    def config_from_params(cls, name: str, params: Optional[Dict[str, Any]] = None) -> ClassifierConfig:
        """
        Build a classifier config from a name and a parameter mapping.

        Raises:
            InvalidParam: For an unknown classifier or parameter.
        """
        entry = cls.CLASSIFIER_CONFIGS.get(name)
        if not entry:
            raise InvalidParam(f"Unsupported classifier: {name}")
        params = dict(params or {})
        known = {f.name for f in fields(entry["config"])}
        unknown = sorted(set(params) - known)
        if unknown:
            raise InvalidParam(f"Unknown {name} parameters: {unknown}")
        return entry["config"](**params)

    @classmethod
    def get_default_config(cls, name: str) -> ClassifierConfig:
        return cls.config_from_params(name)

    @staticmethod
    def describe(config: ClassifierConfig) -> Dict[str, Any]:
        return asdict(config)
