"""End-to-end assembly: labeled findings or rows in, tuned models out.

A trained pipeline is one model-file on disk: the featurizer rides along in
the model metadata (its fingerprint doubles as an integrity check), so
scoring later needs nothing but the file.
"""

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .detectors import Finding, LABEL_NOT_SECRET, LABEL_SECRET
from .features import (
    CodeFeatureSpec,
    TfIdfModel,
    assemble_code_features,
    fit_code_spec,
    fit_tfidf,
    transform_tfidf,
)
from .evaluation import stratified_split
from .models import (
    GbdtModel,
    LogisticModel,
    TrainConfig,
    load_model,
    predict_gbdt_many,
    predict_logistic_many,
    save_model,
    spec_fingerprint,
    train_gbdt,
    train_logistic,
    tune_threshold,
)
from .synth import generate_synthetic_secrets, load_templates
from .textprep import Row

Featurizer = Union[CodeFeatureSpec, TfIdfModel]
Model = Union[LogisticModel, GbdtModel]


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineResult:
    """A trained model, its featurizer, and the split it was trained on."""

    model: Model
    featurizer: Featurizer
    train: tuple
    val: tuple
    test: tuple

    def save(self, path) -> None:
        save_model(self.model, path)


def _extension(path: str) -> str:
    dot = path.rfind(".")
    return path[dot + 1:].lower() if dot >= 0 else ""


def row_id(row: Row) -> str:
    return f"{row.page_id}:{row.line_number}"


def featurize(item, featurizer: Featurizer):
    if isinstance(featurizer, CodeFeatureSpec):
        return assemble_code_features(item, _extension(item.path), featurizer)
    if isinstance(featurizer, TfIdfModel):
        return transform_tfidf(item.tokens, featurizer)
    raise PipelineError(f"unknown featurizer {type(featurizer).__name__}")


def predict_many(model: Model, vectors) -> np.ndarray:
    if isinstance(model, LogisticModel):
        return predict_logistic_many(model, vectors)
    if isinstance(model, GbdtModel):
        return predict_gbdt_many(model, vectors)
    raise PipelineError(f"unknown model {type(model).__name__}")


def score_items(model: Model, featurizer: Featurizer, items: Sequence) -> np.ndarray:
    if not items:
        return np.zeros(0, dtype=np.float64)
    return predict_many(model, [featurize(item, featurizer) for item in items])


def _as_binary(label: str) -> int:
    return 1 if label == LABEL_SECRET else 0


def _split(examples, ratios, seed):
    if ratios is None:
        pool = tuple(examples)
        return pool, pool, pool
    train, val, test = stratified_split(examples, ratios=ratios, seed=seed)
    return tuple(train), tuple(val), tuple(test)


def _tune_and_attach(model, featurizer, val, config, extra_metadata):
    scores = score_items(model, featurizer, [item for item, _ in val])
    labels = [_as_binary(label) for _, label in val]
    tuned = tune_threshold(scores, labels, config.target_recall)
    featurizer_dict = featurizer.to_dict()
    metadata = dict(model.metadata)
    metadata["featurizer"] = featurizer_dict
    metadata["threshold_tuning"] = {
        "target_recall": config.target_recall,
        "recall": tuned.recall,
        "precision": tuned.precision,
        "warning": tuned.warning,
    }
    metadata.update(extra_metadata)
    return replace(
        model,
        threshold=tuned.threshold,
        spec_fingerprint=spec_fingerprint(featurizer_dict),
        metadata=metadata,
    )


def train_code_model(
    findings: Sequence[Finding],
    target_recall: float = 0.99,
    seed: int = 0,
    config: Optional[TrainConfig] = None,
    ratios: Optional[Tuple[float, float, float]] = (0.7, 0.1, 0.2),
) -> PipelineResult:
    """Logistic model over code findings: split, fit features, train, tune.

    Findings must carry gold labels and candidate plaintext. ``ratios`` of
    None skips the split and trains, tunes, and tests on the full set (the
    desk-scale fallback for very small label stores).
    """
    if config is None:
        config = TrainConfig(seed=seed, target_recall=target_recall)
    gold = [f for f in findings if f.label in (LABEL_SECRET, LABEL_NOT_SECRET)]
    if not gold:
        raise PipelineError("no gold-labeled findings to train on")
    redacted = sum(1 for f in gold if f.candidate is None)
    if redacted:
        raise PipelineError(
            f"{redacted} finding(s) lack candidate plaintext; "
            "scan with --keep-plaintext to train"
        )
    examples = [(f, f.label) for f in gold]
    train, val, test = _split(examples, ratios, config.seed)
    spec = fit_code_spec([f.candidate for f, _ in train])
    vectors = [featurize(f, spec) for f, _ in train]
    labels = [_as_binary(label) for _, label in train]
    model = train_logistic(vectors, labels, config)
    model = _tune_and_attach(
        model, spec, val, config,
        {"split": {"train": len(train), "val": len(val), "test": len(test)}},
    )
    return PipelineResult(model=model, featurizer=spec, train=train, val=val, test=test)


def fill_unlabeled(rows: Sequence[Row]) -> List[Row]:
    """Rows with unlabeled entries assumed benign (labeled not_secret).

    Document corpora label only the planted/confirmed secrets; every other
    row is treated as ordinary prose.
    """
    out = []
    for row in rows:
        if row.label in (LABEL_SECRET, LABEL_NOT_SECRET):
            out.append(row)
        else:
            out.append(replace(row, label=LABEL_NOT_SECRET))
    return out


def train_docs_model(
    rows: Sequence[Row],
    synth_count: int = 0,
    target_recall: float = 0.99,
    seed: int = 0,
    config: Optional[TrainConfig] = None,
    ratios: Optional[Tuple[float, float, float]] = (0.7, 0.1, 0.2),
) -> PipelineResult:
    """TF-IDF + GBDT over document rows, with synthetic positive augmentation.

    Synthetic secret rows are generated up front and split along with the
    real rows; TF-IDF is fitted on the training slice only.
    """
    if config is None:
        config = TrainConfig(seed=seed, target_recall=target_recall)
    gold = [r for r in rows if r.label in (LABEL_SECRET, LABEL_NOT_SECRET)]
    if len(gold) != len(rows):
        raise PipelineError(
            "rows must be fully labeled; use fill_unlabeled for raw corpora"
        )
    dataset = list(gold)
    if synth_count:
        dataset.extend(
            generate_synthetic_secrets(load_templates(), synth_count, config.seed)
        )
    examples = [(r, r.label) for r in dataset]
    train, val, test = _split(examples, ratios, config.seed)
    tfidf = fit_tfidf([r.tokens for r, _ in train])
    vectors = [featurize(r, tfidf) for r, _ in train]
    labels = [_as_binary(label) for _, label in train]
    model = train_gbdt(vectors, labels, config)
    model = _tune_and_attach(
        model, tfidf, val, config,
        {
            "synthetic_positives": synth_count,
            "split": {"train": len(train), "val": len(val), "test": len(test)},
        },
    )
    return PipelineResult(model=model, featurizer=tfidf, train=train, val=val, test=test)


def featurizer_from_dict(d: dict) -> Featurizer:
    kind = d.get("kind")
    if kind == "code":
        return CodeFeatureSpec.from_dict(d)
    if kind == "tfidf":
        return TfIdfModel.from_dict(d)
    raise PipelineError(f"unknown featurizer kind {kind!r}")


def load_bundle(path) -> Tuple[Model, Featurizer]:
    """Model plus its embedded featurizer, fingerprint-checked."""
    model = load_model(path)
    featurizer_dict = model.metadata.get("featurizer")
    if featurizer_dict is None:
        raise PipelineError("model file has no embedded featurizer")
    if spec_fingerprint(featurizer_dict) != model.spec_fingerprint:
        raise PipelineError("featurizer does not match the model fingerprint")
    return model, featurizer_from_dict(featurizer_dict)
