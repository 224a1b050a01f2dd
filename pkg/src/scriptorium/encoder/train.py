"""Font-classification pre-training and writer fine-tuning."""
import copy
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .checkpoint import load_checkpoint, save_checkpoint
from .data import batch_indices
from .model import FEATURE_DIM, StyleNet, build_encoder
from .preprocess import INPUT_HEIGHT, INPUT_WIDTH, MEAN, STD, to_tensor
from .schedule import DECAY_PER_ITERATION, INITIAL_LR, ExponentialDecay

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainHyperparams:
    initial_lr: float = INITIAL_LR
    decay: float = DECAY_PER_ITERATION
    batch_size: int = 32
    patience: int = 30
    pseudo_epoch: int = 1000
    max_iterations: int = None
    seed: int = 0
    eval_batch_size: int = 64

    def __post_init__(self):
        if self.initial_lr <= 0:
            raise ValueError(f"learning rate must be positive, got {self.initial_lr}")
        if not 0 < self.decay < 1:
            raise ValueError(f"decay must lie in (0, 1), got {self.decay}")
        for name in ("batch_size", "patience", "pseudo_epoch", "eval_batch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


class TrainedEncoder:
    """A StyleNet plus its spec header and training provenance."""

    def __init__(self, model, spec=None, provenance=None):
        self.model = model
        self.spec = spec or encoder_spec(model)
        self.provenance = provenance or {}

    @torch.no_grad()
    def logits(self, images, batch_size=64):
        self.model.eval()
        out = [self.model(to_tensor(images[i:i + batch_size])) for i in range(0, len(images), batch_size)]
        return torch.cat(out).numpy()

    @torch.no_grad()
    def encode(self, images, batch_size=64):
        """Pooled 512-d style vectors, one row per image, as float32."""
        images = list(images)
        if not images:
            return np.zeros((0, FEATURE_DIM), dtype=np.float32)
        self.model.eval()
        out = []
        for i in range(0, len(images), batch_size):
            x = to_tensor(images[i:i + batch_size])
            out.append(self.model.features(x).numpy())
        vectors = np.concatenate(out).astype(np.float32)
        if not np.all(np.isfinite(vectors)):
            raise FloatingPointError("encoder produced non-finite style vectors")
        return vectors

    def save(self, path):
        save_checkpoint(path, self.model.state_dict(), self.spec, self.provenance)

    @classmethod
    def load(cls, path):
        state, spec, provenance = load_checkpoint(path)
        if spec.get("feature_dim") != FEATURE_DIM:
            raise ValueError(f"checkpoint feature_dim {spec.get('feature_dim')} != {FEATURE_DIM}")
        model = StyleNet(spec["num_classes"])
        model.load_state_dict(state)
        model.eval()
        return cls(model, spec, provenance)


def encoder_spec(model, classes=None):
    spec = {
        "topology": "resnet18",
        "feature_dim": FEATURE_DIM,
        "num_classes": model.num_classes,
        "input_height": INPUT_HEIGHT,
        "input_width": INPUT_WIDTH,
        "mean": MEAN,
        "std": STD,
    }
    if classes is not None:
        spec["classes"] = list(classes)
    return spec


@torch.no_grad()
def accuracy(model, image_set, batch_size=64):
    model.eval()
    correct = 0
    for i in range(0, len(image_set), batch_size):
        x = to_tensor(image_set.items[i:i + batch_size])
        pred = model(x).argmax(dim=1).numpy()
        correct += int((pred == image_set.labels[i:i + batch_size]).sum())
    return correct / max(1, len(image_set))


def _check_labels(image_set, num_classes, name):
    if len(image_set) == 0:
        raise ValueError(f"{name} split is empty")
    labels = image_set.labels
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ValueError(
            f"{name} labels must lie in [0, {num_classes}); got range [{labels.min()}, {labels.max()}]"
        )


def train(model, train_set, hyperparams, val_set, log_path=None, state_path=None,
          resume=False, provenance=None):
    """Minibatch Adam with per-iteration lr decay and pseudo-epoch early stopping.

    Validation accuracy is measured every ``pseudo_epoch`` iterations. Training
    stops after ``patience`` pseudo-epochs without strict improvement, or at
    ``max_iterations``. The model is left holding the best checkpoint's weights.

    With ``state_path`` the full loop state is saved after every pseudo-epoch;
    ``resume=True`` continues from it and yields the same result as an
    uninterrupted run.
    """
    hp = hyperparams
    _check_labels(train_set, model.num_classes, "training")
    _check_labels(val_set, model.num_classes, "validation")

    optimizer = torch.optim.Adam(model.parameters(), lr=hp.initial_lr)
    schedule = ExponentialDecay(optimizer, hp.initial_lr, hp.decay)
    loop = {
        "iteration": 0, "best_accuracy": -1.0, "best_epoch": 0,
        "since_best": 0, "loss_sum": 0.0, "loss_count": 0, "history": [],
    }
    best_state = None

    if resume and state_path is not None and Path(state_path).exists():
        saved = torch.load(state_path, weights_only=False)
        model.load_state_dict(saved["model"])
        optimizer.load_state_dict(saved["optimizer"])
        schedule.load_state_dict(saved["schedule"])
        loop = saved["loop"]
        best_state = saved["best_state"]
        logger.info("resumed at iteration %d", loop["iteration"])

    log_fh = open(log_path, "a" if resume else "w") if log_path else None
    n = len(train_set)

    def end_of_epoch():
        nonlocal best_state
        acc = accuracy(model, val_set, hp.eval_batch_size)
        epoch = math.ceil(loop["iteration"] / hp.pseudo_epoch)
        mean_loss = loop["loss_sum"] / max(1, loop["loss_count"])
        loop["loss_sum"], loop["loss_count"] = 0.0, 0
        if acc > loop["best_accuracy"]:
            loop["best_accuracy"], loop["best_epoch"], loop["since_best"] = acc, epoch, 0
            best_state = copy.deepcopy(model.state_dict())
        else:
            loop["since_best"] += 1
        record = {
            "pseudo_epoch": epoch,
            "iteration": loop["iteration"],
            "lr": schedule.lr,
            "train_loss": round(mean_loss, 6),
            "val_accuracy": round(acc, 6),
        }
        loop["history"].append(record)
        if log_fh:
            log_fh.write(json.dumps(record, sort_keys=True) + "\n")
            log_fh.flush()
        logger.info("pseudo-epoch %d: %s", epoch, record)
        if state_path is not None:
            torch.save({
                "model": model.state_dict(),
                "optimizer": optimizer.state_dict(),
                "schedule": schedule.state_dict(),
                "loop": loop,
                "best_state": best_state,
            }, state_path)

    try:
        stopped_early = loop["since_best"] >= hp.patience
        while not stopped_early:
            if hp.max_iterations is not None and loop["iteration"] >= hp.max_iterations:
                break
            idx = batch_indices(n, hp.batch_size, hp.seed, loop["iteration"])
            x = to_tensor([train_set.items[i] for i in idx])
            y = torch.from_numpy(train_set.labels[idx])
            model.train()
            loss = F.cross_entropy(model(x), y)
            if not torch.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss {loss.item()} at iteration {loop['iteration']} "
                    f"(lr={schedule.lr:.3e}, labels={y.tolist()})"
                )
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            schedule.step()
            loop["iteration"] += 1
            loop["loss_sum"] += float(loss.item())
            loop["loss_count"] += 1
            if loop["iteration"] % hp.pseudo_epoch == 0:
                end_of_epoch()
                stopped_early = loop["since_best"] >= hp.patience
        if loop["iteration"] % hp.pseudo_epoch != 0 or best_state is None:
            end_of_epoch()
    finally:
        if log_fh:
            log_fh.close()

    model.load_state_dict(best_state)
    model.eval()
    record = dict(provenance or {})
    record.update({
        "hyperparams": asdict(hp),
        "train_digest": train_set.digest(),
        "iterations": loop["iteration"],
        "best_pseudo_epoch": loop["best_epoch"],
        "best_val_accuracy": loop["best_accuracy"],
        "history": loop["history"],
    })
    return record


def pretrain(train_set, val_set, hyperparams=None, num_classes=None, classes=None, **kwargs):
    """Build a fresh encoder and train it as a font classifier."""
    hp = hyperparams or TrainHyperparams()
    num_classes = num_classes or max(train_set.num_classes, val_set.num_classes)
    model = build_encoder(num_classes, seed=hp.seed)
    provenance = train(model, train_set, hp, val_set, **kwargs)
    return TrainedEncoder(model, encoder_spec(model, classes), provenance)


def fine_tune(encoder, train_set, val_set, lr=INITIAL_LR, hyperparams=None, classes=None, **kwargs):
    """Swap the head for one sized to the writer count and train the whole network."""
    num_writers = max(train_set.num_classes, val_set.num_classes)
    if num_writers < 2 or len(np.unique(train_set.labels)) < 2:
        raise ValueError("fine-tuning needs at least two writers")
    hp = hyperparams or TrainHyperparams()
    hp = TrainHyperparams(**{**asdict(hp), "initial_lr": lr})
    model = copy.deepcopy(encoder.model)
    model.replace_head(num_writers, seed=hp.seed)
    parent = {k: encoder.provenance.get(k) for k in ("train_digest", "iterations", "best_val_accuracy")}
    provenance = train(model, train_set, hp, val_set, provenance={"parent": parent}, **kwargs)
    return TrainedEncoder(model, encoder_spec(model, classes), provenance)
