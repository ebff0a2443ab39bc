"""Versioned JSON bundles holding a trained pipeline."""

import json
from dataclasses import dataclass, field

from .dnnrel import RelevancyModel
from .errors import CorruptModel, IoFailure, VersionMismatch
from .ranker import FoldRanker, Ranker

FORMAT_VERSION = 1


@dataclass
class ModelBundle:
    """Final ranker, optional relevancy model, per-fold rankers and provenance."""

    ranker: Ranker
    relevancy: RelevancyModel = None
    fold_rankers: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    def to_dict(self):
        rel = self.relevancy.to_dict() if self.relevancy is not None else {}
        return {
            "format_version": FORMAT_VERSION,
            "vocabulary": rel.get("vocabulary"),
            "autoencoder": rel.get("autoencoder"),
            "relevancy_net": rel.get("relevancy_net"),
            "relevancy": {k: v for k, v in rel.items()
                          if k not in ("vocabulary", "autoencoder", "relevancy_net")},
            "ranker": self.ranker.to_dict(),
            "fold_rankers": [f.to_dict() for f in self.fold_rankers],
            "config": self.config,
            "inputs": self.inputs,
        }

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict) or "format_version" not in data:
            raise CorruptModel("model file has no format_version")
        if data["format_version"] != FORMAT_VERSION:
            raise VersionMismatch(
                f"model format {data['format_version']} cannot be read by format {FORMAT_VERSION}")
        try:
            relevancy = None
            if data.get("relevancy_net") is not None:
                relevancy = RelevancyModel.from_dict({
                    **(data.get("relevancy") or {}),
                    "vocabulary": data["vocabulary"],
                    "autoencoder": data["autoencoder"],
                    "relevancy_net": data["relevancy_net"],
                })
            return cls(Ranker.from_dict(data["ranker"]), relevancy,
                       [FoldRanker.from_dict(f) for f in data.get("fold_rankers", [])],
                       dict(data.get("config") or {}), dict(data.get("inputs") or {}))
        except (KeyError, TypeError) as exc:
            raise CorruptModel(f"model file is missing {exc}") from exc


def save_model(path, bundle):
    payload = bundle.to_dict() if hasattr(bundle, "to_dict") else bundle
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)
    except OSError as exc:
        raise IoFailure(f"cannot write model to {path}: {exc}") from exc


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read model {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise CorruptModel(f"model file {path} is not valid JSON: {exc}") from exc
    return ModelBundle.from_dict(data)
