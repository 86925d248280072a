"""Errors raised by model training."""


class TrainingError(ValueError):
    """Training preconditions not met (empty data, single class, ...)."""


class DivergenceError(TrainingError):
    """Loss became non-finite during optimization; lower the learning rate."""
