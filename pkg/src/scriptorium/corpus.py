"""Writer-labeled corpus manifests.

A manifest is tab-separated text, one image per line::

    # corpus: IAM
    path	writer_id	document_id	kind	split
    words/a01-000u-00-00.png	000	a01-000u	word	train

``path`` is relative to the manifest's directory unless absolute. ``kind`` is
one of ``word``, ``signature_genuine``, ``signature_forged``; ``split`` is a
free-form tag (``train``, ``test``, ``val``...) and may be empty.
"""
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .encoder.data import ImageSet, holdout_split
from .synthgen.dataset import read_index

KINDS = ("word", "signature_genuine", "signature_forged")
COLUMNS = ("path", "writer_id", "document_id", "kind", "split")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusEntry:
    path: str
    writer_id: str
    document_id: str
    kind: str = "word"
    split: str = ""


@dataclass
class CorpusManifest:
    name: str
    entries: list
    root: Path = field(default_factory=Path)

    def resolve(self, entry):
        p = Path(entry.path)
        return p if p.is_absolute() else self.root / p

    def select(self, split=None, kinds=None):
        out = [e for e in self.entries
               if (split is None or e.split == split) and (kinds is None or e.kind in kinds)]
        return CorpusManifest(self.name, out, self.root)

    def writers(self):
        return sorted({e.writer_id for e in self.entries})

    def validate(self, check_paths=True):
        """Raise :class:`ManifestError` on the first bad entry."""
        if not self.entries:
            raise ManifestError(f"corpus {self.name!r} has no entries")
        for i, e in enumerate(self.entries):
            if not e.writer_id:
                raise ManifestError(f"entry {i} ({e.path}) has an empty writer_id")
            if not e.document_id:
                raise ManifestError(f"entry {i} ({e.path}) has an empty document_id")
            if e.kind not in KINDS:
                raise ManifestError(f"entry {i} ({e.path}) has unknown kind {e.kind!r}")
            if check_paths and not self.resolve(e).exists():
                raise ManifestError(f"image not found: {self.resolve(e)}")
        return self

    def filter_min_documents(self, min_documents):
        """Keep writers that contribute at least ``min_documents`` distinct documents."""
        docs = {}
        for e in self.entries:
            docs.setdefault(e.writer_id, set()).add(e.document_id)
        keep = {w for w, d in docs.items() if len(d) >= min_documents}
        return CorpusManifest(self.name, [e for e in self.entries if e.writer_id in keep], self.root)

    def image_set(self):
        """Images with dense writer labels (sorted writer ids) grouped by document."""
        writers = {w: i for i, w in enumerate(self.writers())}
        return ImageSet(
            [self.resolve(e) for e in self.entries],
            [writers[e.writer_id] for e in self.entries],
            [e.document_id for e in self.entries],
        )

    def dumps(self):
        lines = [f"# corpus: {self.name}", "\t".join(COLUMNS)]
        lines += ["\t".join((e.path, e.writer_id, e.document_id, e.kind, e.split)) for e in self.entries]
        return "\n".join(lines) + "\n"

    def save(self, path):
        Path(path).write_text(self.dumps(), encoding="utf-8")


def read_manifest(path, check_paths=True):
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    name = path.stem
    entries = []
    header_seen = False
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("corpus:"):
                name = body.split(":", 1)[1].strip()
            continue
        cells = line.split("\t")
        if not header_seen and tuple(c.strip() for c in cells[:2]) == COLUMNS[:2]:
            header_seen = True
            continue
        if len(cells) < 3:
            raise ManifestError(f"{path}:{lineno}: expected at least path, writer_id, document_id")
        cells += [""] * (5 - len(cells))
        entries.append(CorpusEntry(cells[0], cells[1], cells[2], cells[3] or "word", cells[4]))
    return CorpusManifest(name, entries, path.parent).validate(check_paths)


def manifest_from_dataset(root, docs_per_writer=2, val_fraction=0.05, seed=0):
    """Treat each font of a generated dataset as a writer.

    Words held out by the same split the trainer uses are tagged ``test``, the
    rest ``train``; within a font, word ``i`` goes to document ``i % docs_per_writer``.
    """
    root = Path(root).resolve()
    rows = read_index(root)
    full = ImageSet([r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows])
    _, held = holdout_split(full, val_fraction, seed)
    held_words = set(held.groups.tolist())
    entries = []
    for path, font_id, word_index, _, _ in rows:
        writer = f"font{font_id:05d}"
        entries.append(CorpusEntry(
            str(Path(path).relative_to(root)), writer,
            f"{writer}-d{word_index % docs_per_writer}", "word",
            "test" if word_index in held_words else "train",
        ))
    return CorpusManifest(root.name, entries, root)


def summary(manifest):
    kinds = Counter(e.kind for e in manifest.entries)
    splits = Counter(e.split for e in manifest.entries)
    return {
        "corpus": manifest.name,
        "entries": len(manifest.entries),
        "writers": len(manifest.writers()),
        "documents": len({e.document_id for e in manifest.entries}),
        "kinds": dict(sorted(kinds.items())),
        "splits": dict(sorted(splits.items())),
    }
