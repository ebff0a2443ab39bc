"""Learning machinery shared by the relevancy model and the final rankers."""

from .net import (
    Activation,
    FeedForwardNet,
    Loss,
    net_forward,
    net_gradient_check,
    net_train,
    sigmoid,
)
from .tree import (
    EnsembleKind,
    RegressionTree,
    TreeEnsemble,
    fit_forest,
    fit_gboost,
    fit_tree,
)

__all__ = [
    "Activation",
    "EnsembleKind",
    "FeedForwardNet",
    "Loss",
    "RegressionTree",
    "TreeEnsemble",
    "fit_forest",
    "fit_gboost",
    "fit_tree",
    "net_forward",
    "net_gradient_check",
    "net_train",
    "sigmoid",
]
