"""scikit-learn style wrapper around pre-training, fine-tuning and encoding."""
import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.preprocessing import LabelEncoder
from sklearn.utils.validation import check_is_fitted

from .data import ImageSet, holdout_split
from .schedule import DECAY_PER_ITERATION, INITIAL_LR
from .train import TrainHyperparams, TrainedEncoder, fine_tune, pretrain


class StyleEncoder(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Style encoder trained by classifying images into fonts (or writers).

    ``X`` is a sequence of images, each an ``(H, W)`` / ``(H, W, 3)`` uint8
    array or a path to an image file. ``transform`` returns 512-d style
    vectors; ``predict`` returns class labels from the classifier head.

    Parameters
    ----------
    lr, decay, batch_size, patience, pseudo_epoch, max_iterations, seed
        Training schedule, see :class:`TrainHyperparams`.
    val_fraction : float
        Share of groups (or samples, without ``groups``) held out for early
        stopping when no explicit validation set is given to ``fit``.
    """

    def __init__(self, lr=INITIAL_LR, decay=DECAY_PER_ITERATION, batch_size=32, patience=30,
                 pseudo_epoch=1000, max_iterations=None, val_fraction=0.05, seed=0):
        self.lr = lr
        self.decay = decay
        self.batch_size = batch_size
        self.patience = patience
        self.pseudo_epoch = pseudo_epoch
        self.max_iterations = max_iterations
        self.val_fraction = val_fraction
        self.seed = seed

    def _hyperparams(self):
        return TrainHyperparams(
            initial_lr=self.lr, decay=self.decay, batch_size=self.batch_size,
            patience=self.patience, pseudo_epoch=self.pseudo_epoch,
            max_iterations=self.max_iterations, seed=self.seed,
        )

    def _split(self, X, y, groups, X_val, y_val):
        labels = self.label_encoder_.transform(y)
        full = ImageSet(list(X), labels, groups)
        if X_val is not None:
            return full, ImageSet(list(X_val), self.label_encoder_.transform(y_val))
        return holdout_split(full, self.val_fraction, self.seed)

    def fit(self, X, y, groups=None, X_val=None, y_val=None, **train_kwargs):
        """Pre-train from scratch. ``groups`` keeps samples of a group (e.g. a word) together."""
        self.label_encoder_ = LabelEncoder().fit(y)
        if len(self.label_encoder_.classes_) < 2:
            raise ValueError("need at least two classes")
        train_set, val_set = self._split(X, y, groups, X_val, y_val)
        self.encoder_ = pretrain(
            train_set, val_set, self._hyperparams(),
            num_classes=len(self.label_encoder_.classes_),
            classes=[str(c) for c in self.label_encoder_.classes_],
            **train_kwargs,
        )
        self.classes_ = self.label_encoder_.classes_
        return self

    def fine_tune(self, X, y, groups=None, X_val=None, y_val=None, **train_kwargs):
        """Replace the head with one output per writer in ``y`` and train the whole network."""
        check_is_fitted(self, "encoder_")
        encoder = LabelEncoder().fit(y)
        if len(encoder.classes_) < 2:
            raise ValueError("fine-tuning needs at least two writers")
        self.label_encoder_ = encoder
        train_set, val_set = self._split(X, y, groups, X_val, y_val)
        self.encoder_ = fine_tune(
            self.encoder_, train_set, val_set, lr=self.lr, hyperparams=self._hyperparams(),
            classes=[str(c) for c in encoder.classes_], **train_kwargs,
        )
        self.classes_ = encoder.classes_
        return self

    def transform(self, X):
        check_is_fitted(self, "encoder_")
        return self.encoder_.encode(list(X))

    def predict_proba(self, X):
        check_is_fitted(self, "encoder_")
        logits = self.encoder_.logits(list(X)).astype(np.float64)
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def save(self, path):
        check_is_fitted(self, "encoder_")
        self.encoder_.save(path)

    @classmethod
    def load(cls, path):
        """Estimator wrapping a saved checkpoint; classes come from its spec header."""
        encoder = TrainedEncoder.load(path)
        hp = encoder.provenance.get("hyperparams", {})
        est = cls(**{k: hp[v] for k, v in (
            ("lr", "initial_lr"), ("decay", "decay"), ("batch_size", "batch_size"),
            ("patience", "patience"), ("pseudo_epoch", "pseudo_epoch"),
            ("max_iterations", "max_iterations"), ("seed", "seed"),
        ) if v in hp})
        est.encoder_ = encoder
        classes = encoder.spec.get("classes") or [str(i) for i in range(encoder.spec["num_classes"])]
        est.classes_ = np.asarray(classes)
        est.label_encoder_ = LabelEncoder().fit(est.classes_)
        return est
