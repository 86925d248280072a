"""Recall-first decision threshold tuning."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ThresholdError(ValueError):
    """Recall is undefined without at least one positive label."""


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    recall: float
    precision: float
    warning: bool = False


def tune_threshold(scores: Sequence[float],
                   labels: Sequence[int],
                   target_recall: float = 0.99) -> ThresholdResult:
    """Pick the cut maximizing precision subject to recall >= target.

    Candidates are the unique scores plus 0; a sample is flagged when its
    score >= threshold. Ties on precision go to the higher threshold. If
    no candidate reaches the target the result falls back to 0, flagging
    everything, with the warning bit set.
    """
    scores = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if scores.shape != y.shape or scores.ndim != 1:
        raise ValueError("scores and labels must align one-to-one")
    if not 0 < target_recall <= 1:
        raise ValueError("target_recall must be in (0, 1]")
    n_pos = int((y == 1.0).sum())
    if n_pos == 0:
        raise ThresholdError("no positive labels; recall is undefined")

    candidates = np.unique(np.append(scores, 0.0))
    best = None
    for t in candidates:
        flagged = scores >= t
        tp = int((flagged & (y == 1.0)).sum())
        recall = tp / n_pos
        if recall < target_recall:
            continue
        n_flagged = int(flagged.sum())
        precision = tp / n_flagged if n_flagged else 0.0
        if best is None or (precision, t) > (best.precision, best.threshold):
            best = ThresholdResult(
                threshold=float(t), recall=recall, precision=precision,
            )
    if best is not None:
        return best

    flagged = scores >= 0.0
    tp = int((flagged & (y == 1.0)).sum())
    n_flagged = int(flagged.sum())
    return ThresholdResult(
        threshold=0.0,
        recall=tp / n_pos,
        precision=tp / n_flagged if n_flagged else 0.0,
        warning=True,
    )
