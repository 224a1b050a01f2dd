"""ResNet-18 style encoder: pre-training, fine-tuning and 512-d style vectors."""
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .data import ImageSet, batch_indices, holdout_split
from .estimator import StyleEncoder
from .model import FEATURE_DIM, StyleNet, build_encoder
from .preprocess import INPUT_HEIGHT, INPUT_WIDTH, fit_canvas, to_tensor
from .schedule import DECAY_PER_ITERATION, INITIAL_LR, ExponentialDecay, lr_at
from .train import TrainedEncoder, TrainHyperparams, accuracy, fine_tune, pretrain, train

__all__ = [
    "CheckpointError", "DECAY_PER_ITERATION", "ExponentialDecay", "FEATURE_DIM", "INITIAL_LR",
    "INPUT_HEIGHT", "INPUT_WIDTH", "ImageSet", "StyleEncoder", "StyleNet", "TrainHyperparams",
    "TrainedEncoder", "accuracy", "batch_indices", "build_encoder", "fine_tune", "fit_canvas",
    "holdout_split", "load_checkpoint", "lr_at", "pretrain", "save_checkpoint", "to_tensor", "train",
]
