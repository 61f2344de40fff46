"""Latent-feature substitute: PCA with a seeded iterative eigensolver.

The pipeline accepts any externally produced feature matrix; this module is
the built-in way to shrink a raw high-dimensional matrix to a latent space.
The eigensolver is block power iteration with QR re-orthonormalization and a
final Rayleigh-Ritz rotation, started from PCG64(seed) Gaussian vectors and
converged when every Rayleigh quotient changes by at most 1e-8 relative, so
fits are reproducible for a fixed seed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import check_features

EIG_TOL = 1e-8
_MAX_SWEEPS = 10000


@dataclass(frozen=True)
class PcaModel:
    """Fitted principal directions: mean, orthonormal components, variances."""

    mean: np.ndarray
    components: np.ndarray          # k x n_dims, rows orthonormal
    explained_variance: np.ndarray  # length k, non-increasing
    degenerate: bool = False

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_input_dims(self) -> int:
        return self.components.shape[1]


def _top_eigenpairs(cov: np.ndarray, k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Largest-k eigenpairs of a symmetric PSD matrix by block power iteration."""
    d = cov.shape[0]
    oversample = min(10, d - k)
    width = k + oversample
    rng = np.random.Generator(np.random.PCG64(seed))
    V, _ = np.linalg.qr(rng.standard_normal((d, width)))
    prev = None
    for _ in range(_MAX_SWEEPS):
        W = cov @ V
        rayleigh = np.einsum("ij,ij->j", V, W)
        if prev is not None:
            scale = np.maximum(np.abs(rayleigh), np.finfo(float).tiny)
            if np.max(np.abs(rayleigh - prev) / scale) <= EIG_TOL:
                break
        prev = rayleigh
        norm = np.linalg.norm(W)
        if norm == 0.0:
            # zero covariance: any orthonormal basis is an eigenbasis
            return np.zeros(k), V[:, :k].T
        V, _ = np.linalg.qr(W)
    # Rayleigh-Ritz: exact eigenpairs within the converged subspace
    projected = V.T @ cov @ V
    projected = 0.5 * (projected + projected.T)
    eigvals, eigvecs = np.linalg.eigh(projected)
    order = np.argsort(eigvals)[::-1][:k]
    values = np.maximum(eigvals[order], 0.0)
    vectors = (V @ eigvecs[:, order]).T
    # deterministic orientation: largest-magnitude entry of each row positive
    for row in vectors:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            row *= -1.0
    return values, vectors


def pca_fit(X, k: int, seed: int) -> PcaModel:
    """Top-k principal directions of mean-centered X."""
    X = check_features(X)
    n, d = X.shape
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k={k} out of range [1, {min(n, d)}]")
    mean = X.mean(axis=0)
    centered = X - mean
    denom = max(n - 1, 1)
    cov = (centered.T @ centered) / denom
    values, vectors = _top_eigenpairs(cov, k, seed)
    degenerate = bool(np.trace(cov) <= 1e-24)
    if degenerate:
        warnings.warn("feature matrix has zero variance; components are arbitrary",
                      RuntimeWarning, stacklevel=2)
    return PcaModel(mean=mean, components=vectors, explained_variance=values,
                    degenerate=degenerate)


def pca_transform(model: PcaModel, X) -> np.ndarray:
    """Project rows onto the fitted components: row i -> components @ (x_i - mean)."""
    X = check_features(X)
    if X.shape[1] != model.n_input_dims:
        raise ValueError(
            f"dimension mismatch: model expects {model.n_input_dims}, got {X.shape[1]}"
        )
    return (X - model.mean) @ model.components.T


def pca_inverse_transform(model: PcaModel, Y) -> np.ndarray:
    """Map latent rows back into the input space (lossless when k = rank)."""
    Y = np.asarray(Y, dtype=np.float64)
    return Y @ model.components + model.mean


class PCAReducer(BaseEstimator, TransformerMixin):
    """sklearn-style wrapper around :func:`pca_fit` / :func:`pca_transform`."""

    def __init__(self, n_components: int = 128, random_state: int = 0):
        self.n_components = n_components
        self.random_state = random_state

    def fit(self, X, y=None):
        model = pca_fit(X, self.n_components, self.random_state)
        self.model_ = model
        self.mean_ = model.mean
        self.components_ = model.components
        self.explained_variance_ = model.explained_variance
        return self

    def transform(self, X):
        return pca_transform(self.model_, X)

    def inverse_transform(self, Y):
        return pca_inverse_transform(self.model_, Y)
