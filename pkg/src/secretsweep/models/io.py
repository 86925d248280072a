"""Model serialization.

One JSON document per model: {kind, parameters, threshold, metadata,
spec_fingerprint}. Parameters are stored as plain floats, whose JSON
text round-trips exactly, so a loaded model predicts bit-identically.

The fingerprint ties a model to the featurizer it was trained with;
compute it from the featurizer's canonical dict form and compare on
load before trusting feature indices.
"""

import hashlib
import json

from .gbdt import GbdtModel, Tree
from .logistic import LogisticModel


class ModelFormatError(ValueError):
    pass


def spec_fingerprint(featurizer_dict: dict) -> str:
    """sha256 over the canonical JSON of a featurizer's dict form."""
    canonical = json.dumps(featurizer_dict, sort_keys=True,
                           separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _tree_to_dict(tree: Tree) -> dict:
    return {
        "feature": list(tree.feature),
        "threshold": list(tree.threshold),
        "left": list(tree.left),
        "right": list(tree.right),
        "value": list(tree.value),
    }


def _tree_from_dict(d: dict) -> Tree:
    return Tree(
        feature=tuple(int(v) for v in d["feature"]),
        threshold=tuple(float(v) for v in d["threshold"]),
        left=tuple(int(v) for v in d["left"]),
        right=tuple(int(v) for v in d["right"]),
        value=tuple(float(v) for v in d["value"]),
    )


def model_to_dict(model) -> dict:
    if isinstance(model, LogisticModel):
        kind = "logistic"
        parameters = {
            "weights": [float(w) for w in model.weights],
            "bias": model.bias,
        }
    elif isinstance(model, GbdtModel):
        kind = "gbdt"
        parameters = {
            "trees": [_tree_to_dict(t) for t in model.trees],
            "learning_rate": model.learning_rate,
            "base_logit": model.base_logit,
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return {
        "kind": kind,
        "parameters": parameters,
        "threshold": model.threshold,
        "metadata": model.metadata,
        "spec_fingerprint": model.spec_fingerprint,
    }


def model_from_dict(payload: dict):
    try:
        kind = payload["kind"]
        parameters = payload["parameters"]
        threshold = float(payload["threshold"])
        metadata = payload.get("metadata", {})
        fingerprint = payload.get("spec_fingerprint", "")
    except (KeyError, TypeError) as exc:
        raise ModelFormatError(f"malformed model document: {exc}") from exc
    if kind == "logistic":
        return LogisticModel(
            weights=parameters["weights"],
            bias=float(parameters["bias"]),
            threshold=threshold,
            spec_fingerprint=fingerprint,
            metadata=metadata,
        )
    if kind == "gbdt":
        return GbdtModel(
            trees=tuple(_tree_from_dict(t) for t in parameters["trees"]),
            learning_rate=float(parameters["learning_rate"]),
            base_logit=float(parameters["base_logit"]),
            threshold=threshold,
            spec_fingerprint=fingerprint,
            metadata=metadata,
        )
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"not valid JSON: {exc}") from exc
    return model_from_dict(payload)
