"""Dataset splitting, confusion metrics, and heuristic-vs-model reports.

Displayed tables round to 2 decimal places, half-up; JSON output keeps
4 decimals. Degenerate ratios (no predicted positives, no actual
positives) come back as 0 with an explicit flag instead of failing.
"""

import json
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np

from .detectors import LABEL_NOT_SECRET, LABEL_SECRET

FLAG_NO_PREDICTED_POSITIVES = "no_predicted_positives"
FLAG_NO_ACTUAL_POSITIVES = "no_actual_positives"
FLAG_F1_UNDEFINED = "f1_undefined"


class MetricsError(ValueError):
    pass


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 0:
                raise ValueError(f"{name} must be a non-negative integer")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def scaled(self, k: int) -> "ConfusionCounts":
        return ConfusionCounts(self.tp * k, self.fp * k,
                               self.tn * k, self.fn * k)


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    counts: ConfusionCounts
    degenerate_flags: frozenset

    def to_dict(self) -> dict:
        return {
            "precision": round(self.precision, 4),
            "recall": round(self.recall, 4),
            "f1": round(self.f1, 4),
            "counts": {"tp": self.counts.tp, "fp": self.counts.fp,
                       "tn": self.counts.tn, "fn": self.counts.fn},
            "degenerate_flags": sorted(self.degenerate_flags),
        }


def display_rounded(value: float) -> str:
    """Two decimal places, half-up, as the tables print them."""
    quantized = Decimal(repr(value)).quantize(Decimal("0.01"),
                                              rounding=ROUND_HALF_UP)
    return str(quantized)


def compute_metrics(counts: ConfusionCounts) -> MetricsReport:
    if counts.total == 0:
        raise MetricsError("cannot compute metrics on all-zero counts")
    flags = set()
    if counts.tp + counts.fp > 0:
        precision = counts.tp / (counts.tp + counts.fp)
    else:
        precision = 0.0
        flags.add(FLAG_NO_PREDICTED_POSITIVES)
    if counts.tp + counts.fn > 0:
        recall = counts.tp / (counts.tp + counts.fn)
    else:
        recall = 0.0
        flags.add(FLAG_NO_ACTUAL_POSITIVES)
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        flags.add(FLAG_F1_UNDEFINED)
    return MetricsReport(precision=precision, recall=recall, f1=f1,
                         counts=counts, degenerate_flags=frozenset(flags))


def stratified_split(examples: Sequence[Tuple[Any, Any]],
                     ratios: Tuple[float, float, float] = (0.7, 0.1, 0.2),
                     seed: int = 0):
    """Per-class seeded shuffle and contiguous cuts into train/val/test.

    Examples are (item, label) pairs; every pair lands in exactly one of
    the three outputs, and a fixed seed fixes the assignment.
    """
    if not examples:
        raise SplitError("cannot split an empty dataset")
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise SplitError("ratios must be three positive numbers")
    if not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise SplitError("ratios must sum to 1")

    by_label: Dict[Any, List[int]] = {}
    for index, (_, label) in enumerate(examples):
        by_label.setdefault(label, []).append(index)

    rng = np.random.default_rng(seed)
    train, val, test = [], [], []
    for label in sorted(by_label, key=repr):
        indices = np.array(by_label[label], dtype=np.int64)
        rng.shuffle(indices)
        n = len(indices)
        cut1 = int(ratios[0] * n + 1e-9)
        cut2 = int((ratios[0] + ratios[1]) * n + 1e-9)
        train.extend(examples[i] for i in indices[:cut1])
        val.extend(examples[i] for i in indices[cut1:cut2])
        test.extend(examples[i] for i in indices[cut2:])
    return train, val, test


@dataclass(frozen=True)
class EvalResult:
    model: MetricsReport
    heuristic: MetricsReport
    predictions: Tuple[dict, ...]

    def comparison_table(self) -> str:
        header = f"{'approach':<12} {'precision':>9} {'recall':>7} {'f1':>6}"
        lines = [header]
        for name, report in (("heuristic", self.heuristic),
                             ("model", self.model)):
            lines.append(
                f"{name:<12} {display_rounded(report.precision):>9}"
                f" {display_rounded(report.recall):>7}"
                f" {display_rounded(report.f1):>6}"
            )
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(),
                "heuristic": self.heuristic.to_dict()}


def _counts_from(pairs: Sequence[Tuple[bool, bool]]) -> ConfusionCounts:
    tp = sum(1 for predicted, gold in pairs if predicted and gold)
    fp = sum(1 for predicted, gold in pairs if predicted and not gold)
    fn = sum(1 for predicted, gold in pairs if not predicted and gold)
    tn = sum(1 for predicted, gold in pairs if not predicted and not gold)
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def evaluate_pipeline(score_fn: Callable[[Any], float],
                      items: Sequence[Tuple[str, Any, str]],
                      threshold: float) -> EvalResult:
    """Score labeled items and tally model vs flag-everything heuristic.

    Items are (id, payload, gold_label) triples with gold either
    "secret" or "not_secret"; anything else is reported as unlabeled.
    The heuristic row treats every item as flagged, which is how the
    raw detectors behave before any filtering.
    """
    if not items:
        raise MetricsError("nothing to evaluate")
    unlabeled = [item_id for item_id, _, gold in items
                 if gold not in (LABEL_SECRET, LABEL_NOT_SECRET)]
    if unlabeled:
        raise MetricsError(
            "unlabeled items cannot be scored: " + ", ".join(unlabeled)
        )

    predictions = []
    model_pairs = []
    heuristic_pairs = []
    for item_id, payload, gold in items:
        score = float(score_fn(payload))
        predicted = score >= threshold
        is_secret = gold == LABEL_SECRET
        model_pairs.append((predicted, is_secret))
        heuristic_pairs.append((True, is_secret))
        predictions.append({
            "id": item_id,
            "score": round(score, 4),
            "predicted": bool(predicted),
            "gold": gold,
        })

    return EvalResult(
        model=compute_metrics(_counts_from(model_pairs)),
        heuristic=compute_metrics(_counts_from(heuristic_pairs)),
        predictions=tuple(predictions),
    )


def write_predictions(path, predictions: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in predictions:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_predictions(path) -> List[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def metrics_from_predictions(predictions: Sequence[dict]) -> MetricsReport:
    """Recompute the summary from emitted per-item records."""
    pairs = [(record["predicted"], record["gold"] == LABEL_SECRET)
             for record in predictions]
    if not pairs:
        raise MetricsError("nothing to evaluate")
    return compute_metrics(_counts_from(pairs))
