"""
Training: optimizer, trainer with early stopping and pruning, cross-validation and search.
"""

from .optim import AdamState, adam_step  # noqa: F401
from .trainer import TrainConfig, TrainHistory, auto_prune, build_network, train, validation_split  # noqa: F401
from .search import SearchSpace, cross_validate, random_search  # noqa: F401
