"""Decision trees and forests trained to minimize decision (SPO) loss."""

from .core import (
    Dataset,
    Decision,
    Node,
    SplitRule,
    Tree,
    evaluate_model,
    leaf_mean,
    load_tree,
    mse_loss,
    normalized_spo_loss,
    save_tree,
    spo_loss,
    tree_training_loss,
)
from .oracles import (
    DecisionOracle,
    GridShortestPathOracle,
    PolytopeLpOracle,
    value_bounds,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Decision",
    "DecisionOracle",
    "GridShortestPathOracle",
    "Node",
    "PolytopeLpOracle",
    "SplitRule",
    "Tree",
    "evaluate_model",
    "leaf_mean",
    "load_tree",
    "mse_loss",
    "normalized_spo_loss",
    "save_tree",
    "spo_loss",
    "tree_training_loss",
    "value_bounds",
]
