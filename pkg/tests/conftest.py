import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eksaii.data import LabeledDataset  # noqa: E402


def make_blobs(seed=0, n_per_class=(10, 10, 10), spread=1.0, sep=4.0, m=2):
    rng = np.random.default_rng(seed)
    X, y = [], []
    for c, n in enumerate(n_per_class):
        centre = np.zeros(m)
        centre[c % m] = sep * (1 + c // m)
        X.append(centre + spread * rng.normal(size=(n, m)))
        y += [f"c{c}"] * n
    return LabeledDataset(np.vstack(X), y, [f"c{c}" for c in range(len(n_per_class))])


@pytest.fixture
def blobs():
    return make_blobs()
