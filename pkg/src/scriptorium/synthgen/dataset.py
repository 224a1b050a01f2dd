"""Font x word dataset enumeration, sharded PNG export and manifests."""
import hashlib
import json
import logging
import multiprocessing as mp
from dataclasses import dataclass, field, replace
from pathlib import Path

import cv2
import numpy as np

from .._validation import ConfigurationError
from .fonts import WordLexicon
from .recipe import GeneratorConfig, sample_recipe
from .render import generate_sample, procedural_background

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
INDEX_NAME = "index.tsv"
IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff")


def load_backgrounds(directory=None, count=8):
    """Texture images from ``directory`` (sorted by name), or ``count`` procedural ones."""
    if directory is None:
        return [procedural_background(i) for i in range(count)]
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigurationError(f"background directory does not exist: {directory}")
    pool = []
    for path in sorted(directory.iterdir(), key=lambda p: p.name):
        if path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        img = cv2.imread(str(path), cv2.IMREAD_COLOR)
        if img is None:
            logger.warning("skipping unreadable background %s", path)
            continue
        pool.append(cv2.cvtColor(img, cv2.COLOR_BGR2RGB))
    if not pool:
        raise ConfigurationError(f"background pool is empty: {directory}")
    return pool


def encode_png(image):
    bgr = cv2.cvtColor(image, cv2.COLOR_RGB2BGR) if image.ndim == 3 else image
    ok, buf = cv2.imencode(".png", bgr, [cv2.IMWRITE_PNG_COMPRESSION, 3])
    if not ok:
        raise RuntimeError("PNG encoding failed")
    return buf.tobytes()


def sample_name(font_id, word_index):
    return f"{font_id}_{word_index}.png"


@dataclass
class DatasetManifest:
    num_fonts: int
    num_words: int
    root_seed: int
    split_name: str = "train"
    config: dict = field(default_factory=dict)
    config_digest: str = ""
    fonts: list = field(default_factory=list)
    words: list = field(default_factory=list)
    shard_size: int = 1000
    shards: dict = field(default_factory=dict)
    samples_digest: str = ""

    @property
    def sample_count(self):
        return self.num_fonts * self.num_words

    def shard_of(self, font_id, word_index):
        return (font_id * self.num_words + word_index) // self.shard_size

    def relpath(self, font_id, word_index):
        return f"shard_{self.shard_of(font_id, word_index):04d}/{sample_name(font_id, word_index)}"

    def to_dict(self):
        return {
            "format": "scriptorium-dataset/1",
            "num_fonts": self.num_fonts,
            "num_words": self.num_words,
            "sample_count": self.sample_count,
            "root_seed": self.root_seed,
            "split_name": self.split_name,
            "config": self.config,
            "config_digest": self.config_digest,
            "fonts": self.fonts,
            "words": self.words,
            "shard_size": self.shard_size,
            "shards": self.shards,
            "samples_digest": self.samples_digest,
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def digest(self):
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    @classmethod
    def from_dict(cls, data):
        if data.get("format") != "scriptorium-dataset/1":
            raise ValueError(f"unsupported dataset manifest format: {data.get('format')!r}")
        if data["sample_count"] != data["num_fonts"] * data["num_words"]:
            raise ValueError("manifest sample_count does not equal num_fonts * num_words")
        kwargs = {k: data[k] for k in (
            "num_fonts", "num_words", "root_seed", "split_name", "config",
            "config_digest", "fonts", "words", "shard_size", "shards", "samples_digest",
        )}
        return cls(**kwargs)

    @classmethod
    def load(cls, root):
        path = Path(root) / MANIFEST_NAME
        return cls.from_dict(json.loads(path.read_text()))


class FontSquare:
    """Random-access view over every (font, word) combination.

    Sample ``i`` is font ``i // W`` rendering word ``i % W``. Nothing is cached,
    so the view is cheap to copy into worker processes.
    """

    def __init__(self, fonts, lexicon, config=None, root_seed=0, backgrounds=None):
        if not fonts:
            raise ConfigurationError("font pool is empty")
        if not isinstance(lexicon, WordLexicon):
            lexicon = WordLexicon(tuple(lexicon))
        backgrounds = backgrounds if backgrounds is not None else load_backgrounds()
        if not backgrounds:
            raise ConfigurationError("background pool is empty")
        config = config or GeneratorConfig()
        if config.num_backgrounds != len(backgrounds):
            config = replace(config, num_backgrounds=len(backgrounds))
        self.fonts = list(fonts)
        self.lexicon = lexicon
        self.config = config
        self.root_seed = int(root_seed)
        self.backgrounds = backgrounds

    @property
    def num_fonts(self):
        return len(self.fonts)

    @property
    def num_words(self):
        return len(self.lexicon)

    def __len__(self):
        return self.num_fonts * self.num_words

    def sample(self, font_id, word_index):
        if not (0 <= font_id < self.num_fonts and 0 <= word_index < self.num_words):
            raise IndexError(f"({font_id}, {word_index}) outside {self.num_fonts} x {self.num_words}")
        recipe = sample_recipe(self.root_seed, font_id, word_index, self.config)
        return generate_sample(self.lexicon[word_index], self.fonts[font_id], recipe, self.backgrounds)

    def __getitem__(self, index):
        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError(index)
        return self.sample(index // self.num_words, index % self.num_words)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def manifest(self, split_name="train", shard_size=1000):
        return DatasetManifest(
            num_fonts=self.num_fonts,
            num_words=self.num_words,
            root_seed=self.root_seed,
            split_name=split_name,
            config=self.config.to_dict(),
            config_digest=self.config.digest(),
            fonts=[
                {"font_id": f.font_id, "name": f.name, "sha256": f.digest()}
                for f in self.fonts
            ],
            words=list(self.lexicon.words),
            shard_size=shard_size,
        )


def generate_dataset(fonts, lexicon, config=None, root_seed=0, backgrounds=None):
    """Stream every sample in canonical (font_id, word_index) order plus the manifest.

    Returns ``(samples, manifest)`` where ``samples`` is a lazy iterator.
    """
    view = FontSquare(fonts, lexicon, config, root_seed, backgrounds)
    return iter(view), view.manifest()


def _relpath(index, num_words, shard_size):
    font_id, word_index = divmod(index, num_words)
    return f"shard_{index // shard_size:04d}/{sample_name(font_id, word_index)}"


# per-process state for export workers; set once by the pool initializer
_worker_view = None
_worker_shard_size = 1000


def _init_worker(view, shard_size):
    global _worker_view, _worker_shard_size
    _worker_view = view
    _worker_shard_size = shard_size


def _render_chunk(args):
    root, indices = args
    out = []
    for i in indices:
        font_id, word_index = divmod(i, _worker_view.num_words)
        data = encode_png(_worker_view.sample(font_id, word_index).image)
        (Path(root) / _relpath(i, _worker_view.num_words, _worker_shard_size)).write_bytes(data)
        out.append((i, hashlib.sha256(data).hexdigest()))
    return out


def write_dataset(view, out_dir, workers=1, shard_size=1000, split_name="train", chunk=64):
    """Render every sample of ``view`` to ``out_dir`` as sharded PNGs.

    Writes ``index.tsv`` (path, font_id, word_index, word, sha256) in canonical
    order and ``manifest.json``. Output bytes do not depend on ``workers``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = view.manifest(split_name=split_name, shard_size=shard_size)
    n = len(view)
    num_shards = -(-n // shard_size)
    for s in range(num_shards):
        (out_dir / f"shard_{s:04d}").mkdir(exist_ok=True)
    manifest.shards = {
        f"shard_{s:04d}": min(shard_size, n - s * shard_size) for s in range(num_shards)
    }

    tasks = [(str(out_dir), range(a, min(a + chunk, n))) for a in range(0, n, chunk)]
    hashes = [None] * n
    if workers <= 1:
        _init_worker(view, shard_size)
        for part in map(_render_chunk, tasks):
            for i, h in part:
                hashes[i] = h
    else:
        ctx = mp.get_context("fork")
        with ctx.Pool(workers, initializer=_init_worker, initargs=(view, shard_size)) as pool:
            for part in pool.imap_unordered(_render_chunk, tasks):
                for i, h in part:
                    hashes[i] = h

    lines = []
    for i, h in enumerate(hashes):
        font_id, word_index = divmod(i, view.num_words)
        rel = _relpath(i, view.num_words, shard_size)
        lines.append(f"{rel}\t{font_id}\t{word_index}\t{view.lexicon[word_index]}\t{h}\n")
    index_blob = "".join(lines).encode()
    (out_dir / INDEX_NAME).write_bytes(index_blob)
    manifest.samples_digest = hashlib.sha256(index_blob).hexdigest()
    (out_dir / MANIFEST_NAME).write_text(manifest.dumps())
    return manifest


def read_index(root):
    """Rows of ``(path, font_id, word_index, word, sha256)`` from a written dataset."""
    root = Path(root)
    rows = []
    with open(root / INDEX_NAME, encoding="utf-8") as fh:
        for line in fh:
            rel, font_id, word_index, word, digest = line.rstrip("\n").split("\t")
            rows.append((root / rel, int(font_id), int(word_index), word, digest))
    return rows


def load_image(path):
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise FileNotFoundError(f"cannot read image: {path}")
    if img.ndim == 2:
        return img
    if img.shape[2] == 4:
        img = img[:, :, :3]
    return cv2.cvtColor(img, cv2.COLOR_BGR2RGB)
