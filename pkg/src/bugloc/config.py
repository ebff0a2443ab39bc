"""Run configuration: JSON file defaults, overridden by command-line flags."""

import json
import os
from dataclasses import asdict, dataclass, field, fields

from .errors import InvalidConfig, IoFailure

CONFIG_ENV = "BUGLOC_CONFIG"


@dataclass
class RunConfig:
    corpus_root: str = ""
    bugs_path: str = ""
    model_dir: str = ""
    language: str = "c"
    mode: str = "srcml"
    threshold: float = 0.1
    bugs_per_fold: int = 100
    ranker: str = "rf"
    sampling: str = "none"
    relevancy_scope: str = "per_fold"
    stopwords: str = ""
    relevancy: dict = field(default_factory=dict)
    ranker_params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.threshold >= 0:
            raise InvalidConfig(f"threshold must be >= 0, got {self.threshold}")
        if int(self.bugs_per_fold) < 1:
            raise InvalidConfig(f"bugs_per_fold must be >= 1, got {self.bugs_per_fold}")
        if not isinstance(self.relevancy, dict) or not isinstance(self.ranker_params, dict):
            raise InvalidConfig("relevancy and ranker_params must be objects")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise InvalidConfig("configuration must be a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise InvalidConfig(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**data)

    def override(self, **values):
        """Copy with every non-None value replaced."""
        data = self.to_dict()
        data.update({k: v for k, v in values.items() if v is not None})
        return RunConfig.from_dict(data)


def load_config(path=None):
    """Config from ``path``, else the file named by ``$BUGLOC_CONFIG``, else defaults."""
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data)
