"""Labeled image collections and deterministic batching."""
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..synthgen.dataset import read_index


@dataclass
class ImageSet:
    """Images (arrays or file paths) with dense integer labels and optional groups.

    ``groups`` tags samples that must stay on the same side of a split, e.g. the
    word index of a synthetic sample or the document id of a real word image.
    """

    items: list
    labels: np.ndarray
    groups: np.ndarray = None

    def __post_init__(self):
        self.items = list(self.items)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.items) != len(self.labels):
            raise ValueError(f"{len(self.items)} images but {len(self.labels)} labels")
        if self.groups is not None:
            self.groups = np.asarray(self.groups)
            if len(self.groups) != len(self.labels):
                raise ValueError("groups must align with labels")

    def __len__(self):
        return len(self.items)

    @property
    def num_classes(self):
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def subset(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return ImageSet(
            [self.items[i] for i in indices],
            self.labels[indices],
            None if self.groups is None else self.groups[indices],
        )

    def digest(self):
        """Content digest over labels and image bytes (file contents or pixel arrays)."""
        h = hashlib.sha256()
        h.update(self.labels.astype("<i8").tobytes())
        for item in self.items:
            if isinstance(item, (str, Path)):
                h.update(Path(item).read_bytes())
            else:
                h.update(np.ascontiguousarray(item).tobytes())
        return h.hexdigest()

    @classmethod
    def from_dataset_dir(cls, root):
        """Font-labeled samples of a generated dataset; groups are word indices."""
        rows = read_index(root)
        return cls(
            [r[0] for r in rows],
            [r[1] for r in rows],
            [r[2] for r in rows],
        )


def holdout_split(image_set, fraction=0.05, seed=0):
    """Hold out a ``fraction`` of groups (at least one) as validation.

    With groups, every sample of a held-out group goes to validation, so a
    font-labeled set keeps all fonts but validates on unseen words. Without
    groups, individual samples are held out.
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    keys = image_set.groups if image_set.groups is not None else np.arange(len(image_set))
    unique = np.unique(keys)
    if len(unique) < 2:
        raise ValueError("need at least two groups to hold any out")
    rng = np.random.default_rng([seed, 0x686F6C64])
    count = min(len(unique) - 1, max(1, math.ceil(fraction * len(unique))))
    held = set(rng.choice(unique, size=count, replace=False).tolist())
    mask = np.array([k in held for k in keys.tolist()])
    return image_set.subset(np.flatnonzero(~mask)), image_set.subset(np.flatnonzero(mask))


def batch_indices(n, batch_size, seed, iteration):
    """Indices for ``iteration``: consecutive slices of per-epoch seeded permutations.

    A pure function of its arguments, so a resumed run sees the same batches.
    """
    start = iteration * batch_size
    out = []
    while len(out) < batch_size:
        epoch, pos = divmod(start + len(out), n)
        perm = np.random.default_rng([seed, epoch]).permutation(n)
        take = min(batch_size - len(out), n - pos)
        out.extend(perm[pos:pos + take].tolist())
    return np.asarray(out, dtype=np.int64)
