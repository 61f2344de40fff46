import numpy as np

from salp.data import Dataset, Sample


def memory_dataset(n, n_classes=5):
    """In-memory labeled dataset with trivial features, for session-level tests."""
    samples = [Sample(id=i, true_label=i % n_classes) for i in range(n)]
    features = np.arange(n, dtype=np.float64)[:, None] * [1.0, 0.5]
    return Dataset(samples=samples, features=features, n_classes=n_classes)
