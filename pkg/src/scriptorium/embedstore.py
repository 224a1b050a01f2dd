"""Style-vector storage and per-writer / per-document aggregation.

Store file layout (little-endian)::

    8 bytes   magic b"SCRPTEMB"
    uint32    format version
    uint32    vector dimension
    uint64    header length in bytes
    header    UTF-8 JSON: provenance, record ids, template ids and counts
    payload   records: float32[n_records, dim], then templates: float64[n_templates, dim]
"""
import json
import struct
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"SCRPTEMB"
VERSION = 1


class StoreFormatError(ValueError):
    pass


def aggregate(vectors):
    """Component-wise arithmetic mean, independent of row order.

    Rows are shifted by the column minimum and summed in sorted order, so the
    result is bit-identical under permutation and ``mean([v] * k) == v``.
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("aggregate needs a non-empty list of equal-length vectors")
    low = X.min(axis=0)
    diffs = np.sort(X - low, axis=0)
    return low + diffs.sum(axis=0) / len(X)


@dataclass(frozen=True)
class EmbeddingRecord:
    sample_id: str
    writer_id: str
    document_id: str
    vector: np.ndarray = field(compare=False)
    kind: str = "word"

    def __post_init__(self):
        if not (self.sample_id and self.writer_id and self.document_id):
            raise ValueError("record ids must be non-empty")


@dataclass(frozen=True)
class WriterTemplate:
    writer_id: str
    mean_vector: np.ndarray = field(compare=False)
    count: int

    def __eq__(self, other):
        return (
            isinstance(other, WriterTemplate)
            and (self.writer_id, self.count) == (other.writer_id, other.count)
            and np.array_equal(self.mean_vector, other.mean_vector)
        )


@dataclass(frozen=True)
class DocumentVector:
    document_id: str
    writer_id: str
    mean_vector: np.ndarray = field(compare=False)
    word_count: int

    def __eq__(self, other):
        return (
            isinstance(other, DocumentVector)
            and (self.document_id, self.writer_id, self.word_count)
            == (other.document_id, other.writer_id, other.word_count)
            and np.array_equal(self.mean_vector, other.mean_vector)
        )


def _group(records, key):
    groups = defaultdict(list)
    for r in records:
        groups[key(r)].append(r)
    return groups


def build_writer_templates(records):
    """One mean vector per writer, sorted by writer id."""
    groups = _group(records, lambda r: r.writer_id)
    return [
        WriterTemplate(w, aggregate([r.vector for r in groups[w]]), len(groups[w]))
        for w in sorted(groups)
    ]


def build_document_vectors(records):
    """One mean vector per document, sorted by document id."""
    groups = _group(records, lambda r: r.document_id)
    out = []
    for doc in sorted(groups):
        writers = {r.writer_id for r in groups[doc]}
        if len(writers) != 1:
            raise ValueError(f"document {doc!r} is attributed to several writers: {sorted(writers)}")
        out.append(DocumentVector(doc, writers.pop(), aggregate([r.vector for r in groups[doc]]),
                                  len(groups[doc])))
    return out


class EmbeddingStore:
    """Records plus writer templates; immutable once built."""

    def __init__(self, records=(), templates=None, provenance=None, dim=None):
        self.records = list(records)
        if dim is None:
            dim = len(self.records[0].vector) if self.records else 512
        self.dim = int(dim)
        for r in self.records:
            if np.shape(r.vector) != (self.dim,):
                raise ValueError(f"record {r.sample_id!r} has shape {np.shape(r.vector)}, expected ({self.dim},)")
        self.templates = build_writer_templates(self.records) if templates is None else list(templates)
        self.provenance = provenance or {}

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        return (
            isinstance(other, EmbeddingStore)
            and self.dim == other.dim
            and self.provenance == other.provenance
            and [(r.sample_id, r.writer_id, r.document_id, r.kind) for r in self.records]
            == [(r.sample_id, r.writer_id, r.document_id, r.kind) for r in other.records]
            and np.array_equal(self.vectors, other.vectors)
            and self.templates == other.templates
        )

    @property
    def vectors(self):
        if not self.records:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([np.asarray(r.vector, dtype=np.float32) for r in self.records])

    @property
    def writer_ids(self):
        return [r.writer_id for r in self.records]

    def documents(self):
        return build_document_vectors(self.records)

    def select(self, keep):
        """Store holding the records for which ``keep(record)`` is true; templates rebuilt."""
        return EmbeddingStore([r for r in self.records if keep(r)], provenance=self.provenance, dim=self.dim)

    @classmethod
    def from_arrays(cls, vectors, writer_ids, document_ids, sample_ids=None, provenance=None,
                    kinds=None):
        vectors = np.asarray(vectors, dtype=np.float32)
        if sample_ids is None:
            sample_ids = [str(i) for i in range(len(vectors))]
        if kinds is None:
            kinds = ["word"] * len(vectors)
        records = [
            EmbeddingRecord(str(s), str(w), str(d), v, str(k))
            for s, w, d, v, k in zip(sample_ids, writer_ids, document_ids, vectors, kinds)
        ]
        return cls(records, provenance=provenance, dim=vectors.shape[1] if vectors.ndim == 2 else None)

    def save(self, path):
        header = json.dumps({
            "provenance": self.provenance,
            "records": [[r.sample_id, r.writer_id, r.document_id, r.kind] for r in self.records],
            "templates": [[t.writer_id, t.count] for t in self.templates],
        }, sort_keys=True, separators=(",", ":")).encode()
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<IIQ", VERSION, self.dim, len(header)))
            fh.write(header)
            fh.write(np.ascontiguousarray(self.vectors, dtype="<f4").tobytes())
            for t in self.templates:
                fh.write(np.ascontiguousarray(t.mean_vector, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path):
        blob = Path(path).read_bytes()
        if blob[:8] != MAGIC:
            raise StoreFormatError(f"{path} is not an embedding store")
        if len(blob) < 24:
            raise StoreFormatError(f"{path} is truncated")
        version, dim, header_len = struct.unpack_from("<IIQ", blob, 8)
        if version != VERSION:
            raise StoreFormatError(f"unsupported store version {version} (expected {VERSION})")
        start = 24 + header_len
        if len(blob) < start:
            raise StoreFormatError(f"{path} is truncated inside the header")
        header = json.loads(blob[24:start])
        n, m = len(header["records"]), len(header["templates"])
        expected = start + 4 * n * dim + 8 * m * dim
        if len(blob) != expected:
            raise StoreFormatError(f"{path} has {len(blob)} bytes, expected {expected} (truncated or corrupt)")
        vectors = np.frombuffer(blob, dtype="<f4", count=n * dim, offset=start).reshape(n, dim)
        means = np.frombuffer(blob, dtype="<f8", count=m * dim, offset=start + 4 * n * dim).reshape(m, dim)
        records = [
            EmbeddingRecord(ids[0], ids[1], ids[2], vectors[i].astype(np.float32), *ids[3:])
            for i, ids in enumerate(header["records"])
        ]
        templates = [
            WriterTemplate(w, means[i].astype(np.float64), c)
            for i, (w, c) in enumerate(header["templates"])
        ]
        return cls(records, templates, header["provenance"], dim=dim)

    def export_tsv(self, path):
        """Tab-separated: sample_id, writer_id, document_id, kind, then one column per dimension."""
        with open(path, "w", encoding="utf-8") as fh:
            cols = "\t".join(f"v{i}" for i in range(self.dim))
            fh.write(f"sample_id\twriter_id\tdocument_id\tkind\t{cols}\n")
            for r in self.records:
                values = "\t".join(repr(float(x)) for x in np.asarray(r.vector, dtype=np.float32))
                fh.write(f"{r.sample_id}\t{r.writer_id}\t{r.document_id}\t{r.kind}\t{values}\n")


def read_tsv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        dim = len(header) - 4
        ids, vectors = [], []
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            ids.append(parts[:4])
            vectors.append([float(x) for x in parts[4:]])
    if not ids:
        return EmbeddingStore(dim=dim)
    s, w, d, k = zip(*ids)
    return EmbeddingStore.from_arrays(np.asarray(vectors, dtype=np.float32), w, d, s, kinds=k)


save_store = EmbeddingStore.save
load_store = EmbeddingStore.load
