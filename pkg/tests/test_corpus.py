import numpy as np
import pytest

from conftest import toy_view
from scriptorium.corpus import (
    CorpusEntry, CorpusManifest, ManifestError, manifest_from_dataset, read_manifest, summary,
)
from scriptorium.encoder import ImageSet, holdout_split
from scriptorium.synthgen import write_dataset


def write_images(root, names):
    import cv2

    for name in names:
        path = root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        cv2.imwrite(str(path), np.full((8, 8), 255, np.uint8))


def test_read_manifest_with_header_and_name(tmp_path):
    write_images(tmp_path, ["a.png", "b.png", "sig/c.png"])
    (tmp_path / "m.tsv").write_text(
        "# corpus: IAM\npath\twriter_id\tdocument_id\tkind\tsplit\n"
        "a.png\tw1\td1\tword\ttrain\nb.png\tw2\td2\n"
        "sig/c.png\tw1\td3\tsignature_forged\ttest\n")
    m = read_manifest(tmp_path / "m.tsv")
    assert m.name == "IAM" and len(m.entries) == 3
    assert m.entries[1] == CorpusEntry("b.png", "w2", "d2", "word", "")
    assert m.resolve(m.entries[2]) == tmp_path / "sig/c.png"
    assert [e.path for e in m.select(split="train").entries] == ["a.png"]
    assert [e.path for e in m.select(kinds=("signature_forged",)).entries] == ["sig/c.png"]


def test_manifest_name_defaults_to_file_stem(tmp_path):
    write_images(tmp_path, ["a.png"])
    (tmp_path / "cvl.tsv").write_text("a.png\tw\td\n")
    assert read_manifest(tmp_path / "cvl.tsv").name == "cvl"


def test_save_and_reload(tmp_path):
    write_images(tmp_path, ["x.png", "y.png"])
    m = CorpusManifest("demo", [CorpusEntry("x.png", "w", "d1"), CorpusEntry("y.png", "v", "d2", split="test")],
                       tmp_path)
    m.save(tmp_path / "demo.tsv")
    back = read_manifest(tmp_path / "demo.tsv")
    assert back.entries == m.entries and back.name == "demo"


@pytest.mark.parametrize("row,match", [
    ("a.png\t\td", "empty writer_id"),
    ("a.png\tw\t", "empty document_id"),
    ("a.png\tw\td\tprinted", "unknown kind"),
    ("missing.png\tw\td", "image not found"),
    ("a.png\tw", "expected at least"),
])
def test_invalid_rows(tmp_path, row, match):
    write_images(tmp_path, ["a.png"])
    (tmp_path / "m.tsv").write_text(row + "\n")
    with pytest.raises(ManifestError, match=match):
        read_manifest(tmp_path / "m.tsv")


def test_missing_manifest_and_empty(tmp_path):
    with pytest.raises(ManifestError, match="not found"):
        read_manifest(tmp_path / "nope.tsv")
    (tmp_path / "e.tsv").write_text("# corpus: x\n")
    with pytest.raises(ManifestError, match="no entries"):
        read_manifest(tmp_path / "e.tsv")


def test_filter_min_documents_and_image_set():
    entries = [CorpusEntry(f"{w}{d}{i}.png", w, f"{w}-{d}") for w, d, i in
               [("b", 1, 0), ("b", 2, 0), ("a", 1, 0), ("a", 1, 1), ("c", 1, 0), ("c", 2, 0), ("c", 3, 0)]]
    m = CorpusManifest("x", entries)
    kept = m.filter_min_documents(2)
    assert kept.writers() == ["b", "c"]
    data = kept.image_set()
    assert list(data.labels) == [0, 0, 1, 1, 1]
    assert list(data.groups) == ["b-1", "b-2", "c-1", "c-2", "c-3"]


def test_manifest_from_dataset_matches_training_split(tmp_path, toy_font_dir):
    view = toy_view(toy_font_dir, 40)
    write_dataset(view, tmp_path / "ds", shard_size=30)
    m = manifest_from_dataset(tmp_path / "ds", docs_per_writer=2, val_fraction=0.1, seed=3)
    assert len(m.entries) == 80 and m.writers() == ["font00000", "font00001"]
    assert {e.document_id for e in m.entries} == {f"font0000{f}-d{d}" for f in (0, 1) for d in (0, 1)}
    full = ImageSet.from_dataset_dir(tmp_path / "ds")
    _, held = holdout_split(full, 0.1, 3)
    test_paths = sorted(str(m.resolve(e)) for e in m.entries if e.split == "test")
    assert test_paths == sorted(str(p) for p in held.items)
    assert all(m.resolve(e).is_file() for e in m.entries)
    info = summary(m)
    assert info["entries"] == 80 and info["writers"] == 2 and info["documents"] == 4
    assert info["splits"] == {"test": len(test_paths), "train": 80 - len(test_paths)}
