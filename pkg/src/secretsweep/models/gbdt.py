"""Gradient-boosted trees for document rows.

Second-order boosting on the logistic loss: per round g = p - y and
h = p(1 - p), with positive examples upweighted to counter class
imbalance. Trees are grown level by level with an exact greedy split
search; gain = 1/2 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)], a node
splits only when the gain is positive and both children carry at least
min_child_hessian, and leaves score -G/(H+l). Ties in the split search
go to the lowest feature index, then the lowest threshold. Missing
features read as 0. Training is deterministic.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, Sequence, Tuple

import numpy as np

from ..features import FeatureVector, stack_features
from . import kernels
from .config import TrainConfig
from .errors import TrainingError

POSITIVE_WEIGHT_CAP = 100.0


@dataclass(frozen=True)
class Tree:
    """Flat parallel-array binary tree, root at index 0.

    feature[i] < 0 marks a leaf; children always sit at higher indices
    than their parent, which rules out cycles.
    """

    feature: Tuple[int, ...]
    threshold: Tuple[float, ...]
    left: Tuple[int, ...]
    right: Tuple[int, ...]
    value: Tuple[float, ...]

    def __post_init__(self):
        n = len(self.feature)
        if n == 0:
            raise ValueError("a tree needs at least one node")
        if not (len(self.threshold) == len(self.left)
                == len(self.right) == len(self.value) == n):
            raise ValueError("node arrays must have equal length")
        for i in range(n):
            if not math.isfinite(self.value[i]):
                raise ValueError(f"non-finite leaf value at node {i}")
            if self.feature[i] < 0:
                if self.left[i] != -1 or self.right[i] != -1:
                    raise ValueError(f"leaf node {i} must not have children")
            else:
                if not math.isfinite(self.threshold[i]):
                    raise ValueError(f"non-finite threshold at node {i}")
                for child in (self.left[i], self.right[i]):
                    if not i < child < n:
                        raise ValueError(
                            f"node {i} child {child} out of order or range"
                        )

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def score(self, lookup: Dict[int, float]) -> float:
        """Leaf value reached by a sparse feature mapping."""
        node = 0
        while self.feature[node] >= 0:
            x = lookup.get(self.feature[node], 0.0)
            node = self.left[node] if x < self.threshold[node] else self.right[node]
        return self.value[node]

    def depth(self) -> int:
        depths = [0] * self.n_nodes
        deepest = 0
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depths[self.left[i]] = depths[i] + 1
                depths[self.right[i]] = depths[i] + 1
                deepest = max(deepest, depths[i] + 1)
        return deepest


@dataclass(frozen=True, eq=False)
class GbdtModel:
    trees: Tuple[Tree, ...]
    learning_rate: float
    base_logit: float
    threshold: float = 0.5
    spec_fingerprint: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not math.isfinite(self.base_logit):
            raise ValueError("base_logit must be finite")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _weighted_logloss(logits, y, sample_weight) -> float:
    per_row = np.logaddexp(0.0, logits) - y * logits
    return float(np.sum(sample_weight * per_row) / np.sum(sample_weight))


class _TreeBuilder:
    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.value = []

    def add(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def split(self, node, feat, thr, left, right):
        self.feature[node] = int(feat)
        self.threshold[node] = float(thr)
        self.left[node] = left
        self.right[node] = right

    def seal(self, node, g, h, lam):
        denom = h + lam
        self.value[node] = float(-g / denom) if denom > 0 else 0.0

    def build(self) -> Tree:
        return Tree(
            feature=tuple(self.feature),
            threshold=tuple(self.threshold),
            left=tuple(self.left),
            right=tuple(self.right),
            value=tuple(self.value),
        )


def _slot_totals(slot_of_row, g, h, n_slots):
    live = slot_of_row >= 0
    slots = slot_of_row[live]
    g_tot = np.bincount(slots, weights=g[live], minlength=n_slots)
    h_tot = np.bincount(slots, weights=h[live], minlength=n_slots)
    cnt = np.bincount(slots, minlength=n_slots)
    return g_tot, h_tot, cnt.astype(np.int64)


def _grow_tree(matrix, g, h, lam, min_child_hessian, max_depth):
    builder = _TreeBuilder()
    slot_nodes = [builder.add()]
    slot_of_row = np.zeros(matrix.n_rows, dtype=np.int64)

    for _ in range(max_depth):
        n_slots = len(slot_nodes)
        g_tot, h_tot, cnt_tot = _slot_totals(slot_of_row, g, h, n_slots)
        _, best_feat, best_thr = kernels.best_splits(
            matrix, slot_of_row, g, h, g_tot, h_tot, cnt_tot,
            lam, min_child_hessian, n_slots,
        )
        next_left = np.full(n_slots, -1, dtype=np.int64)
        next_right = np.full(n_slots, -1, dtype=np.int64)
        new_slot_nodes = []
        for slot, node in enumerate(slot_nodes):
            if best_feat[slot] >= 0:
                left = builder.add()
                right = builder.add()
                builder.split(node, best_feat[slot], best_thr[slot],
                              left, right)
                next_left[slot] = len(new_slot_nodes)
                new_slot_nodes.append(left)
                next_right[slot] = len(new_slot_nodes)
                new_slot_nodes.append(right)
            else:
                builder.seal(node, g_tot[slot], h_tot[slot], lam)
        if not new_slot_nodes:
            break
        slot_of_row = kernels.route_rows(
            matrix, slot_of_row, best_feat, best_thr, next_left, next_right,
        )
        slot_nodes = new_slot_nodes
    else:
        # Nodes at the depth cap become leaves regardless of gain.
        n_slots = len(slot_nodes)
        g_tot, h_tot, _ = _slot_totals(slot_of_row, g, h, n_slots)
        for slot, node in enumerate(slot_nodes):
            builder.seal(node, g_tot[slot], h_tot[slot], lam)

    return builder.build()


def _flatten(trees: Sequence[Tree]):
    roots = np.zeros(len(trees), dtype=np.int64)
    feat, thr, left, right, value = [], [], [], [], []
    offset = 0
    for t, tree in enumerate(trees):
        roots[t] = offset
        feat.extend(tree.feature)
        thr.extend(tree.threshold)
        left.extend(c if c < 0 else c + offset for c in tree.left)
        right.extend(c if c < 0 else c + offset for c in tree.right)
        value.extend(tree.value)
        offset += tree.n_nodes
    return (
        roots,
        np.asarray(feat, dtype=np.int64),
        np.asarray(thr, dtype=np.float64),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(value, dtype=np.float64),
    )


def _forest_scores(matrix, trees: Sequence[Tree]) -> np.ndarray:
    if not trees:
        return np.zeros(matrix.n_rows, dtype=np.float64)
    roots, feat, thr, left, right, value = _flatten(trees)
    return kernels.predict_forest(matrix, roots, feat, thr, left, right, value)


def _matrix(vectors: Sequence[FeatureVector]) -> kernels.SparseMatrix:
    indptr, indices, data, shape = stack_features(vectors)
    return kernels.SparseMatrix.from_arrays(indptr, indices, data, shape)


def train_gbdt(vectors: Sequence[FeatureVector],
               labels: Sequence[int],
               config: TrainConfig = TrainConfig()) -> GbdtModel:
    if not vectors:
        raise TrainingError("cannot train on empty data")
    matrix = _matrix(vectors)
    if matrix.data.size and matrix.data.min() < 0:
        raise TrainingError(
            "tree training expects non-negative feature values"
        )
    y = np.asarray(labels, dtype=np.float64)
    if y.shape != (matrix.n_rows,):
        raise TrainingError("labels must align one-to-one with the vectors")
    if not np.isin(y, (0.0, 1.0)).all():
        raise TrainingError("labels must be 0 or 1")
    n_pos = int(y.sum())
    n_neg = matrix.n_rows - n_pos
    if n_pos == 0 or n_neg == 0:
        raise TrainingError("training data must contain both classes")

    if config.positive_weight is not None:
        pos_weight = float(config.positive_weight)
    else:
        pos_weight = min(n_neg / n_pos, POSITIVE_WEIGHT_CAP)
    sample_weight = np.where(y == 1.0, pos_weight, 1.0)

    prior = float(np.sum(sample_weight * y) / np.sum(sample_weight))
    base_logit = math.log(prior / (1.0 - prior))

    lam = config.l2_lambda
    logits = np.full(matrix.n_rows, base_logit, dtype=np.float64)
    trees = []
    loss_curve = [_weighted_logloss(logits, y, sample_weight)]
    for _ in range(config.n_trees):
        p = _sigmoid(logits)
        g = (p - y) * sample_weight
        h = p * (1.0 - p) * sample_weight
        tree = _grow_tree(matrix, g, h, lam,
                          config.min_child_hessian, config.max_depth)
        trees.append(tree)
        logits += config.learning_rate * _forest_scores(matrix, [tree])
        loss_curve.append(_weighted_logloss(logits, y, sample_weight))

    return GbdtModel(
        trees=tuple(trees),
        learning_rate=config.learning_rate,
        base_logit=base_logit,
        metadata={
            "config": config.to_dict(),
            "n_rows": matrix.n_rows,
            "n_positive": n_pos,
            "positive_weight": pos_weight,
            "loss_curve": loss_curve,
            "final_loss": loss_curve[-1],
        },
    )


def predict_gbdt(model: GbdtModel, fv: FeatureVector) -> float:
    """P(positive) for a single feature vector; absent features are 0."""
    lookup = dict(fv.entries)
    total = sum(tree.score(lookup) for tree in model.trees)
    z = model.base_logit + model.learning_rate * total
    return float(_sigmoid(np.array([z]))[0])


def predict_gbdt_many(model: GbdtModel,
                      vectors: Sequence[FeatureVector]) -> np.ndarray:
    if not vectors:
        return np.zeros(0, dtype=np.float64)
    matrix = _matrix(vectors)
    scores = _forest_scores(matrix, model.trees)
    return _sigmoid(model.base_logit + model.learning_rate * scores)


def truncated(model: GbdtModel, n_trees: int) -> GbdtModel:
    """Copy of the model keeping only the first n_trees rounds."""
    if not 0 <= n_trees <= len(model.trees):
        raise ValueError("n_trees out of range")
    return replace(model, trees=model.trees[:n_trees])
