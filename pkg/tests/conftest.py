import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gmixer.store import write_bundle


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_store(tmp_path):
    """3-entry store: e1, e2, and the normalized bisector, dim 4."""
    e1 = np.array([1.0, 0.0, 0.0, 0.0])
    e2 = np.array([0.0, 1.0, 0.0, 0.0])
    mid = (e1 + e2) / np.sqrt(2)
    path = tmp_path / "small.gmxb"
    write_bundle(path, ["a", "b", "c"], np.vstack([e1, e2, mid]))
    from gmixer.store import load_bundle

    return load_bundle(path)
