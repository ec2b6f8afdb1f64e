import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if ROOT not in sys.path:
    sys.path.insert(0, ROOT)

from xai_components.base import StructuredDebugLogger  # noqa: E402
from xai_components.xai_udiscsp.model import Instance  # noqa: E402

EXAMPLE_PATH = os.path.join(ROOT, "instances", "example1.json")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-size benchmark tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size benchmark runs (enable with --runslow or -m slow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow") or "slow" in (config.getoption("-m") or ""):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def example():
    return Instance.example()


@pytest.fixture
def example_path():
    return EXAMPLE_PATH


@pytest.fixture
def debug_log(tmp_path, monkeypatch):
    """Routes structured debug events to a file for the duration of a test."""
    target = tmp_path / "debug.jsonl"
    monkeypatch.setenv("XIRCUITS_DEBUG", "1")
    monkeypatch.setenv("XIRCUITS_DEBUG_FILE", str(target))
    StructuredDebugLogger.enable(str(target))
    yield target
    logger = StructuredDebugLogger.get_logger()
    if logger._target is not None:
        logger._target.close()
    delattr(StructuredDebugLogger, "logger")


@pytest.fixture(autouse=True)
def quiet_logger(monkeypatch):
    monkeypatch.delenv("XIRCUITS_DEBUG", raising=False)
    if hasattr(StructuredDebugLogger, "logger"):
        delattr(StructuredDebugLogger, "logger")
    yield
