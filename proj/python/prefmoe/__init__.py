"""Mixture of experts whose gate prefers human rules within a loss budget."""

from ._core import (
    Model,
    PmoeError,
    RuleSet,
    auc,
    check_gradients,
    hard_coverage,
    load_csv,
    loss,
    loss_gradients,
    predict,
    soft_coverage,
    synthesize,
    train,
)

__all__ = [
    "Model",
    "PmoeError",
    "RuleSet",
    "auc",
    "check_gradients",
    "hard_coverage",
    "load_csv",
    "loss",
    "loss_gradients",
    "predict",
    "soft_coverage",
    "synthesize",
    "train",
]
