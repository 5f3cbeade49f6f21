import os
from pathlib import Path

import pytest


def data_root():
    """Directory holding downloaded datasets (``$SCATPCA_DATA`` or /root/data)."""
    return Path(os.environ.get("SCATPCA_DATA", "/root/data"))


def mnist_dir():
    for candidate in (data_root() / "mnist", data_root()):
        if any((candidate / f"t10k-images-idx3-ubyte{ext}").exists() for ext in ("", ".gz")):
            return candidate
    return None


@pytest.fixture(scope="session")
def mnist_root():
    root = mnist_dir()
    if root is None:
        pytest.skip(f"MNIST not found under {data_root()}")
    return root


_ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion.

    Usage: ``record = criterion(3, "path combinatorics")`` then
    ``record(passed, detail)``.  The summary lines are printed at the end
    of the run, one per criterion.
    """
    def start(number, title):
        _ACCEPTANCE[number] = [title, "FAIL", "did not complete"]

        def record(passed, detail):
            _ACCEPTANCE[number][1:] = ["PASS" if passed else "FAIL", detail]
            print(f"criterion {number} ({title}): {_ACCEPTANCE[number][1]} - {detail}")
            return passed
        return record
    return start


def skip_criterion(number, title, reason):
    _ACCEPTANCE[number] = [title, "SKIP", reason]
    pytest.skip(reason)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    def natural(label):
        digits = "".join(ch for ch in str(label) if ch.isdigit())
        return int(digits), str(label)

    for number in sorted(_ACCEPTANCE, key=natural):
        title, status, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"{status:4s} criterion {str(number):>3s} {title}: {detail}")
