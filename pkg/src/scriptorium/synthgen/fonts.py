"""Font pools and word lexicons."""
import hashlib
import logging
import string
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fontTools.ttLib import TTFont, TTLibError

from .._validation import ConfigurationError

logger = logging.getLogger(__name__)

FONT_SUFFIXES = (".ttf", ".otf", ".woff", ".woff2")
REQUIRED_CHARS = string.ascii_lowercase + string.ascii_uppercase


@dataclass(frozen=True)
class FontAsset:
    font_id: int
    glyph_source: Path
    name: str
    codepoints: frozenset = field(default=frozenset(), repr=False, compare=False)

    def has_glyph(self, char):
        return ord(char) in self.codepoints

    def digest(self):
        return hashlib.sha256(Path(self.glyph_source).read_bytes()).hexdigest()


def read_cmap(path):
    """Codepoints mapped by a font file, or ``None`` if it cannot be parsed."""
    try:
        with TTFont(str(path), lazy=True) as font:
            cmap = font.getBestCmap()
    except (TTLibError, OSError, ImportError, AssertionError, KeyError) as exc:
        logger.warning("skipping unparseable font %s: %s", path, exc)
        return None
    if not cmap:
        logger.warning("skipping font without a unicode cmap: %s", path)
        return None
    return frozenset(cmap)


def load_font_pool(directory, max_fonts=None):
    """Load up to ``max_fonts`` usable fonts from ``directory``.

    Files are visited in lexicographic filename order; fonts that fail to parse
    or lack any basic Latin letter are skipped with a warning. Surviving fonts
    get dense ids ``0..n-1`` in that order.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigurationError(f"font directory does not exist: {directory}")
    candidates = sorted(
        (p for p in directory.iterdir() if p.suffix.lower() in FONT_SUFFIXES),
        key=lambda p: p.name,
    )
    pool = []
    for path in candidates:
        if max_fonts is not None and len(pool) >= max_fonts:
            break
        codepoints = read_cmap(path)
        if codepoints is None:
            continue
        missing = [c for c in REQUIRED_CHARS if ord(c) not in codepoints]
        if missing:
            logger.warning("skipping %s: missing glyphs %s", path.name, "".join(missing))
            continue
        pool.append(FontAsset(len(pool), path, path.stem, codepoints))
    if not pool:
        raise ConfigurationError(f"no usable scalable fonts found in {directory}")
    return pool


@dataclass(frozen=True)
class WordLexicon:
    words: tuple

    def __post_init__(self):
        if not self.words:
            raise ConfigurationError("lexicon is empty")
        if any(not w for w in self.words):
            raise ConfigurationError("lexicon contains an empty word")

    def __len__(self):
        return len(self.words)

    def __getitem__(self, index):
        return self.words[index]


def read_vocabulary(path):
    """One word per line; blank lines and surrounding whitespace ignored."""
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def default_vocabulary_path():
    return Path(__file__).resolve().parent.parent / "data" / "vocabulary.txt"


def sample_lexicon(vocabulary, num_words, seed):
    """Draw ``num_words`` distinct words from ``vocabulary`` using ``seed``.

    With ``num_words=None`` the full vocabulary is kept in file order.
    """
    vocabulary = list(dict.fromkeys(vocabulary))
    if num_words is None:
        return WordLexicon(tuple(vocabulary))
    if num_words < 1:
        raise ConfigurationError("num_words must be >= 1")
    if num_words > len(vocabulary):
        raise ConfigurationError(
            f"requested {num_words} words but vocabulary has {len(vocabulary)}"
        )
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, 0x776F7264])
    picks = rng.choice(len(vocabulary), size=num_words, replace=False)
    return WordLexicon(tuple(vocabulary[i] for i in picks))
