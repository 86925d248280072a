"""Training hyperparameters shared by both model families."""

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class TrainConfig:
    """Knobs for train_logistic and train_gbdt.

    positive_weight left at None means the GBDT trainer derives it from
    the class balance of the training set.
    """

    learning_rate: float = 0.1
    epochs: int = 500
    l2_lambda: float = 1.0
    n_trees: int = 100
    max_depth: int = 4
    min_child_hessian: float = 1.0
    positive_weight: float = None
    target_recall: float = 0.99
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be non-negative")
        if self.n_trees < 0:
            raise ValueError("n_trees must be non-negative")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.min_child_hessian < 0:
            raise ValueError("min_child_hessian must be non-negative")
        if self.positive_weight is not None and self.positive_weight <= 0:
            raise ValueError("positive_weight must be positive when given")
        if not 0 < self.target_recall <= 1:
            raise ValueError("target_recall must be in (0, 1]")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, payload):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(payload) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**payload)
