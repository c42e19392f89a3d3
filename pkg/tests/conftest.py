import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def quiet_env(monkeypatch, tmp_path):
    monkeypatch.delenv("BLOCKRANK_VERBOSE", raising=False)
    monkeypatch.setenv("BLOCKRANK_REPORTS_DIR", str(tmp_path / "reports"))
