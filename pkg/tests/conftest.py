import numpy as np
import pytest

from salp import synth
from salp.data import Dataset, Sample


@pytest.fixture
def blob_dataset(tmp_path):
    """Small well-separated 3-blob dataset written to disk and loaded back."""
    from salp.data import load_dataset_full

    X, y = synth.make_blobs(n_classes=3, n_dims=5, n_samples=90,
                            separation=8.0, seed=7)
    manifest = synth.write_dataset(tmp_path / "blobs", X, y, n_classes=3)
    return load_dataset_full(manifest)


def make_memory_dataset(X, y, n_classes):
    samples = [Sample(id=i, true_label=int(lab)) for i, lab in enumerate(y)]
    return Dataset(samples=samples, features=np.asarray(X, dtype=np.float64),
                   n_classes=n_classes)
