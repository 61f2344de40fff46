"""Built-in dataset generators so experiments need no external data.

``make_blobs`` draws unit-variance Gaussian clusters around centers with an
exact minimum pairwise separation (in sigma units). ``make_digits`` builds a
5000-sample handwritten-digits set from the public 8x8 digits bundled with
scikit-learn: each image is upscaled 3x, placed at a seeded offset inside a
28x28 canvas, and perturbed with seeded pixel noise, cycling per class to a
balanced 500 samples per digit (784 raw dimensions).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import Sample, write_features, write_labels, write_manifest

DIGITS_CANVAS = 28
DIGITS_UPSCALE = 3


def make_blobs(n_classes: int, n_dims: int, n_samples: int, separation: float,
               seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian blobs (sigma = 1) whose centers are exactly ``separation`` apart."""
    if n_classes < 2:
        raise ValueError("need at least two blobs")
    if n_dims < n_classes:
        raise ValueError(f"need n_dims >= n_classes to place {n_classes} orthogonal centers")
    if n_samples < n_classes:
        raise ValueError("need at least one sample per blob")
    rng = np.random.Generator(np.random.PCG64(seed))
    basis, _ = np.linalg.qr(rng.standard_normal((n_dims, n_dims)))
    # orthonormal rows are sqrt(2) apart; rescale so centers sit exactly at
    # `separation`
    centers = basis.T[:n_classes] * (separation / np.sqrt(2.0))
    counts = [n_samples // n_classes] * n_classes
    for k in range(n_samples % n_classes):
        counts[k] += 1
    X = np.empty((n_samples, n_dims))
    y = np.empty(n_samples, dtype=np.int64)
    row = 0
    for cls, count in enumerate(counts):
        X[row:row + count] = centers[cls] + rng.standard_normal((count, n_dims))
        y[row:row + count] = cls
        row += count
    return X, y


def _upscale_and_place(image8: np.ndarray, offset: tuple[int, int],
                       rng: np.random.Generator, noise: float) -> np.ndarray:
    big = np.kron(image8, np.ones((DIGITS_UPSCALE, DIGITS_UPSCALE)))
    canvas = np.zeros((DIGITS_CANVAS, DIGITS_CANVAS))
    dy, dx = offset
    size = 8 * DIGITS_UPSCALE
    canvas[dy:dy + size, dx:dx + size] = big
    canvas += rng.normal(0.0, noise, canvas.shape)
    return np.clip(canvas, 0.0, 16.0).ravel()


def make_digits(n_samples: int = 5000, seed: int = 0,
                noise: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Balanced 28x28 handwritten-digit set derived from the bundled 8x8 digits."""
    from sklearn.datasets import load_digits

    if n_samples % 10 != 0:
        raise ValueError("n_samples must be a multiple of 10 for balanced classes")
    per_class = n_samples // 10
    base = load_digits()
    images = base.images  # (1797, 8, 8), values 0..16
    labels = base.target
    rng = np.random.Generator(np.random.PCG64(seed))
    max_offset = DIGITS_CANVAS - 8 * DIGITS_UPSCALE  # 4

    X = np.empty((n_samples, DIGITS_CANVAS * DIGITS_CANVAS))
    y = np.empty(n_samples, dtype=np.int64)
    row = 0
    for digit in range(10):
        pool = images[labels == digit]
        for k in range(per_class):
            offset = (int(rng.integers(0, max_offset + 1)),
                      int(rng.integers(0, max_offset + 1)))
            X[row] = _upscale_and_place(pool[k % len(pool)], offset, rng, noise)
            y[row] = digit
            row += 1
    return X, y


def write_dataset(directory: str | Path, X: np.ndarray, y: np.ndarray | None,
                  n_classes: int, thumbnails: str | None = None) -> Path:
    """Write features/labels/manifest into a directory; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_features(directory / "features.bin", X)
    labels_entry = None
    if y is not None:
        write_labels(directory / "labels.txt", y)
        labels_entry = "labels.txt"
    manifest = directory / "manifest.txt"
    write_manifest(manifest, features="features.bin", labels=labels_entry,
                   classes=n_classes, thumbnails=thumbnails)
    return manifest


def samples_from_labels(y: np.ndarray) -> list[Sample]:
    return [Sample(id=i, true_label=int(lab)) for i, lab in enumerate(y)]
