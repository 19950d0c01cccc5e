"""Xiangqi evaluation tuning by comparison training with tapered weights."""

from .board import Move, Outcome, Position, apply_move, format_fen, legal_moves, parse_fen, perft, undo_move
from .evaluation import WeightStore, evaluate, load_weights, phase_alpha, save_weights
from .features import FeatureLayout, FeatureVector, extract
from .search import SearchResult, iterative_search, search
from .training import (
    TrainerConfig,
    TrainingSample,
    UpdateDelta,
    apply_balanced_tapered,
    compare_position,
    init_weights,
    test_accuracy,
    train,
    train_batch,
)

__version__ = "0.1.0"
