import os
import shutil
import subprocess
import sys
from pathlib import Path

import matplotlib
import pytest

from scriptorium.synthgen import (
    FontSquare, default_vocabulary_path, load_font_pool, read_vocabulary, sample_lexicon,
)

REPO = Path(__file__).resolve().parents[1]
MPL_FONTS = Path(matplotlib.get_data_path()) / "fonts" / "ttf"

# Two visually distant faces for two-class toy jobs, five for writer toys.
TOY_FONTS = ("DejaVuSans.ttf", "DejaVuSerif-Italic.ttf")
WRITER_FONTS = (
    "DejaVuSans.ttf", "DejaVuSansMono-Bold.ttf", "DejaVuSerif-Italic.ttf",
    "STIXGeneralBol.ttf", "cmtt10.ttf",
)


def _copy_fonts(dest, names):
    dest.mkdir(parents=True, exist_ok=True)
    for name in names:
        shutil.copy(MPL_FONTS / name, dest / name)
    return dest


@pytest.fixture(scope="session")
def toy_font_dir(tmp_path_factory):
    return _copy_fonts(tmp_path_factory.mktemp("toy_fonts"), TOY_FONTS)


@pytest.fixture(scope="session")
def writer_font_dir(tmp_path_factory):
    return _copy_fonts(tmp_path_factory.mktemp("writer_fonts"), WRITER_FONTS)


@pytest.fixture(scope="session")
def dejavu(toy_font_dir):
    return load_font_pool(toy_font_dir)[0]


@pytest.fixture(scope="session")
def vocabulary():
    return read_vocabulary(default_vocabulary_path())


@pytest.fixture(scope="session")
def handwriting_font_dir():
    """Directory with at least 100 usable handwriting fonts, fetched on first use."""
    path = Path(os.environ.get("SCRIPTORIUM_FONT_DIR", REPO / "fonts"))
    if not path.is_dir() or len(list(path.glob("*.woff"))) < 100:
        subprocess.run([sys.executable, str(REPO / "scripts" / "fetch_fonts.py"), "--out", str(path)],
                       check=False)
    if len(load_font_pool(path)) < 100:
        pytest.fail(f"fewer than 100 usable fonts in {path}; run scripts/fetch_fonts.py")
    return path


def toy_view(font_dir, num_words, seed=1):
    fonts = load_font_pool(font_dir)
    lexicon = sample_lexicon(read_vocabulary(default_vocabulary_path()), num_words, seed)
    return FontSquare(fonts, lexicon, root_seed=seed)


# -- acceptance summary --------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        n = marker.args[0]
        previous = _criteria.get(n, (True, ""))
        _criteria[n] = (previous[0] and not failed, marker.kwargs.get("title", previous[1]))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok, title = _criteria[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}")
