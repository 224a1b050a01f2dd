"""Generator configuration and per-sample randomized render recipes."""
import hashlib
import json
import struct
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .._validation import ConfigurationError, check_range

_RANGE_FIELDS = (
    "rotation_deg", "tps_shift", "blur_sigma", "dilation_radius",
    "brightness", "contrast", "saturation", "hue",
)


@dataclass(frozen=True)
class GeneratorConfig:
    """Sampling ranges for the augmentation chain.

    Every ``(min, max)`` pair is sampled uniformly. ``tps_shift`` is a fraction
    of ``canvas_height``; ``dilation_radius`` is an inclusive integer range.
    """

    rotation_deg: tuple = (-10.0, 10.0)
    tps_grid: tuple = (3, 5)
    tps_shift: tuple = (-0.04, 0.04)
    blur_sigma: tuple = (0.0, 1.5)
    dilation_radius: tuple = (0, 2)
    brightness: tuple = (-0.2, 0.2)
    contrast: tuple = (-0.2, 0.2)
    saturation: tuple = (-0.2, 0.2)
    hue: tuple = (-0.05, 0.05)
    canvas_height: int = 64
    num_backgrounds: int = 8

    def __post_init__(self):
        for name in _RANGE_FIELDS:
            value = getattr(self, name)
            if len(value) != 2:
                raise ConfigurationError(f"{name} must be a (min, max) pair")
            object.__setattr__(self, name, tuple(value))
            check_range(name, *value)
        object.__setattr__(self, "tps_grid", tuple(int(v) for v in self.tps_grid))
        if self.blur_sigma[0] < 0:
            raise ConfigurationError("blur_sigma must be >= 0")
        if self.dilation_radius[0] < 0:
            raise ConfigurationError("dilation_radius must be >= 0")
        if min(self.tps_grid) < 2:
            raise ConfigurationError("tps_grid needs at least 2 rows and 2 columns")
        if self.canvas_height < 16:
            raise ConfigurationError("canvas_height must be >= 16")
        if self.num_backgrounds < 1:
            raise ConfigurationError("num_backgrounds must be >= 1")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown generator config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class RenderRecipe:
    seed: int
    rotation_deg: float
    tps_grid: tuple
    tps_displacements: np.ndarray = field(compare=False)
    blur_sigma: float
    background_id: int
    background_offset: tuple
    dilation_radius: int
    jitter: tuple
    canvas_height: int

    def __eq__(self, other):
        if not isinstance(other, RenderRecipe):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(json.dumps(self.to_dict(), sort_keys=True))

    def to_dict(self):
        d = asdict(self)
        d["tps_displacements"] = np.asarray(self.tps_displacements).tolist()
        d["tps_grid"] = list(self.tps_grid)
        d["background_offset"] = list(self.background_offset)
        d["jitter"] = list(self.jitter)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["tps_displacements"] = np.asarray(d["tps_displacements"], dtype=np.float64)
        for key in ("tps_grid", "background_offset", "jitter"):
            d[key] = tuple(d[key])
        return cls(**d)

    @classmethod
    def identity(cls, canvas_height=64, tps_grid=(3, 5)):
        """Recipe whose augmentations are all no-ops (white procedural background 0 aside)."""
        rows, cols = tps_grid
        return cls(
            seed=0, rotation_deg=0.0, tps_grid=tuple(tps_grid),
            tps_displacements=np.zeros((rows * cols, 2)),
            blur_sigma=0.0, background_id=0, background_offset=(0, 0),
            dilation_radius=0, jitter=(0.0, 0.0, 0.0, 0.0),
            canvas_height=canvas_height,
        )


def derive_seed(root_seed, font_id, word_index):
    """64-bit per-sample seed: a hash of the (root_seed, font_id, word_index) counter."""
    packed = struct.pack(
        "<QQQ",
        int(root_seed) & 0xFFFFFFFFFFFFFFFF,
        int(font_id) & 0xFFFFFFFFFFFFFFFF,
        int(word_index) & 0xFFFFFFFFFFFFFFFF,
    )
    return int.from_bytes(hashlib.blake2b(packed, digest_size=8).digest(), "little")


def sample_recipe(root_seed, font_id, word_index, config=None):
    config = config or GeneratorConfig()
    seed = derive_seed(root_seed, font_id, word_index)
    rng = np.random.Generator(np.random.Philox(key=seed))
    rows, cols = config.tps_grid
    h = config.canvas_height

    rotation = float(rng.uniform(*config.rotation_deg))
    shift = rng.uniform(*config.tps_shift, size=(rows * cols, 2)) * h
    blur = float(rng.uniform(*config.blur_sigma))
    background_id = int(rng.integers(0, config.num_backgrounds))
    offset = tuple(int(v) for v in rng.integers(0, 1 << 16, size=2))
    lo, hi = config.dilation_radius
    dilation = int(rng.integers(int(lo), int(hi) + 1))
    jitter = tuple(
        float(rng.uniform(*getattr(config, name)))
        for name in ("brightness", "contrast", "saturation", "hue")
    )
    return RenderRecipe(
        seed=seed, rotation_deg=rotation, tps_grid=(rows, cols),
        tps_displacements=shift, blur_sigma=blur, background_id=background_id,
        background_offset=offset, dilation_radius=dilation, jitter=jitter,
        canvas_height=h,
    )
