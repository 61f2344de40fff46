"""Exact (dense O(N^2)) t-SNE for 2-D embeddings.

High-dimensional affinities come from per-point Gaussian kernels whose
bandwidths are binary-searched so each row's effective neighbor count
(2^entropy) matches the requested perplexity. The embedding minimizes the
KL divergence to a Student-t low-dimensional kernel by momentum gradient
descent with an early-exaggeration phase. Everything is seeded and
single-threaded-deterministic; there is no Barnes-Hut approximation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from .errors import DataFormatError
from .validation import check_features

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

ENTROPY_TOL = 1e-4     # in perplexity units
_MAX_BISECTIONS = 200


@dataclass(frozen=True)
class TsneParams:
    perplexity: float = 40.0
    max_iters: int = 1000
    learning_rate: float = 200.0
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch_iter: int = 250
    early_exaggeration_factor: float = 12.0
    exaggeration_iters: int = 250
    entropy_tol: float = ENTROPY_TOL

    def __post_init__(self):
        if self.perplexity <= 1:
            raise ValueError("perplexity must exceed 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric joint probabilities p_ij with zero diagonal and unit mass."""

    p: np.ndarray
    perplexity: float
    entropy_tol: float


@dataclass(frozen=True)
class Projection2D:
    """2-D embedding plus the KL trace recorded during optimization."""

    y: np.ndarray
    kl_history: tuple[float, ...]
    kl_history_iters: tuple[int, ...]
    seed: int
    params: TsneParams = field(default_factory=TsneParams)


def pairwise_sq_dists(X) -> np.ndarray:
    """Squared Euclidean distances; exact zero diagonal, exact symmetry."""
    X = check_features(X)
    sq = np.einsum("ij,ij->i", X, X)
    D = sq[:, None] + sq[None, :] - 2.0 * (X @ X.T)
    np.maximum(D, 0.0, out=D)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return D


def _row_affinities(neg_dists: np.ndarray, beta: float) -> tuple[np.ndarray, float]:
    """Gaussian row probabilities at precision beta and their perplexity.

    ``neg_dists`` holds -(d_ij - min d) for j != i so the exponent never
    overflows; the shift cancels in the normalization.
    """
    p = np.exp(neg_dists * beta)
    total = p.sum()
    p /= total
    # entropy in bits, guarding 0 log 0
    nz = p[p > 0.0]
    entropy_bits = float(-(nz * np.log2(nz)).sum())
    return p, 2.0 ** entropy_bits


def conditional_affinities(D: np.ndarray, perplexity: float,
                           tol: float = ENTROPY_TOL) -> np.ndarray:
    """Row-stochastic conditional probabilities with per-row calibrated bandwidth.

    For each row a binary search over the Gaussian precision matches
    2^entropy to ``perplexity`` within ``tol``. If 200 iterations cannot
    bracket the target (e.g. degenerate geometry makes it unreachable) the
    row keeps the closest bracket value and a warning names the row.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if n < 2:
        raise ValueError("need at least two points")
    if perplexity >= n:
        raise ValueError(f"perplexity {perplexity} must be below N={n}")
    P = np.zeros((n, n))
    for i in range(n):
        d_row = np.delete(D[i], i)
        shifted = -(d_row - d_row.min())
        beta, beta_lo, beta_hi = 1.0, 0.0, np.inf
        p = None
        converged = False
        for _ in range(_MAX_BISECTIONS):
            p, perp = _row_affinities(shifted, beta)
            diff = perp - perplexity
            if abs(diff) <= tol:
                converged = True
                break
            if diff > 0:          # too many effective neighbors: sharpen
                beta_lo = beta
                beta = beta * 2.0 if np.isinf(beta_hi) else 0.5 * (beta_lo + beta_hi)
            else:                 # too few: flatten
                beta_hi = beta
                beta = beta / 2.0 if beta_lo == 0.0 else 0.5 * (beta_lo + beta_hi)
        if not converged:
            warnings.warn(
                f"perplexity calibration did not converge for row {i}; "
                f"using closest bracket value", RuntimeWarning, stacklevel=2)
        P[i, :i] = p[:i]
        P[i, i + 1:] = p[i:]
    return P


def symmetrize(P_cond: np.ndarray) -> AffinityMatrix:
    """Joint affinities p_ij = (p_j|i + p_i|j) / 2N, renormalized to unit mass."""
    P_cond = np.asarray(P_cond, dtype=np.float64)
    n = P_cond.shape[0]
    P = (P_cond + P_cond.T) / (2.0 * n)
    np.fill_diagonal(P, 0.0)
    P /= P.sum()
    return AffinityMatrix(p=P, perplexity=float("nan"), entropy_tol=ENTROPY_TOL)


def _student_t_q(Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized Student-t kernel and normalized Q for an embedding.

    Hot path of the optimizer: skips input validation and exact
    symmetrization (fp asymmetry is ~1 ulp and cancels in the gradient).
    """
    sq = np.einsum("ij,ij->i", Y, Y)
    D = sq[:, None] + sq[None, :]
    D -= 2.0 * (Y @ Y.T)
    np.maximum(D, 0.0, out=D)
    D += 1.0
    num = np.reciprocal(D, out=D)
    np.fill_diagonal(num, 0.0)
    Q = num / num.sum()
    return num, Q


def kl_divergence(P: AffinityMatrix | np.ndarray, Y) -> float:
    """KL(P || Q) of the embedding; p_ij = 0 terms contribute nothing."""
    p = P.p if isinstance(P, AffinityMatrix) else np.asarray(P, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    _, Q = _student_t_q(Y)
    mask = p > 0.0
    return float(np.sum(p[mask] * np.log(p[mask] / Q[mask])))


def tsne_gradient(P: AffinityMatrix | np.ndarray, Y) -> np.ndarray:
    """Analytic gradient 4 sum_j (p_ij - q_ij) (y_i - y_j) / (1 + |y_i - y_j|^2)."""
    p = P.p if isinstance(P, AffinityMatrix) else np.asarray(P, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    num, Q = _student_t_q(Y)
    W = (p - Q) * num
    return 4.0 * (W.sum(axis=1)[:, None] * Y - W @ Y)


if HAVE_NUMBA:
    # Fused single-pass kernels for the optimizer hot loop: identical exact
    # O(N^2) math as the numpy reference above, an order of magnitude less
    # memory traffic, sequential and therefore deterministic. They assume a
    # symmetric affinity matrix (an AffinityMatrix invariant) and take the
    # exaggeration factor as a scalar so the scaled matrix is never built.

    @njit(cache=True)
    def _fused_gradient(p, Y, exaggeration, grad):  # pragma: no cover - numba
        n = Y.shape[0]
        num_sum = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                d0 = Y[i, 0] - Y[j, 0]
                d1 = Y[i, 1] - Y[j, 1]
                num_sum += 2.0 / (1.0 + d0 * d0 + d1 * d1)
        for i in range(n):
            grad[i, 0] = 0.0
            grad[i, 1] = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                d0 = Y[i, 0] - Y[j, 0]
                d1 = Y[i, 1] - Y[j, 1]
                num = 1.0 / (1.0 + d0 * d0 + d1 * d1)
                w = (exaggeration * p[i, j] - num / num_sum) * num
                g0 = w * d0
                g1 = w * d1
                grad[i, 0] += g0
                grad[i, 1] += g1
                grad[j, 0] -= g0
                grad[j, 1] -= g1
        for i in range(n):
            grad[i, 0] *= 4.0
            grad[i, 1] *= 4.0

    @njit(cache=True)
    def _fused_kl(p, Y):  # pragma: no cover - numba
        n = Y.shape[0]
        num_sum = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                d0 = Y[i, 0] - Y[j, 0]
                d1 = Y[i, 1] - Y[j, 1]
                num_sum += 2.0 / (1.0 + d0 * d0 + d1 * d1)
        kl = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                d0 = Y[i, 0] - Y[j, 0]
                d1 = Y[i, 1] - Y[j, 1]
                q = (1.0 / (1.0 + d0 * d0 + d1 * d1)) / num_sum
                if p[i, j] > 0.0:
                    kl += p[i, j] * np.log(p[i, j] / q)
                if p[j, i] > 0.0:
                    kl += p[j, i] * np.log(p[j, i] / q)
        return kl


def _optimizer_gradient(p_true, Y, exaggeration, grad_buffer):
    if HAVE_NUMBA:
        _fused_gradient(p_true, Y, exaggeration, grad_buffer)
        return grad_buffer
    p_work = p_true if exaggeration == 1.0 else p_true * exaggeration
    return tsne_gradient(p_work, Y)


def _optimizer_kl(p_true, Y) -> float:
    if HAVE_NUMBA:
        return float(_fused_kl(p_true, Y))
    return kl_divergence(p_true, Y)


def tsne_optimize(P: AffinityMatrix, params: TsneParams, seed: int) -> Projection2D:
    """Momentum gradient descent from a seeded Gaussian start (std 1e-4).

    The KL trace (against the un-exaggerated affinities) is recorded at
    iteration 0, every 50 iterations, and at the final iteration.
    """
    p_true = np.asarray(P.p, dtype=np.float64)
    n = p_true.shape[0]
    if n < 3:
        raise ValueError("need at least three points to embed")
    rng = np.random.Generator(np.random.PCG64(seed))
    Y = rng.standard_normal((n, 2)) * 1e-4
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    grad_buffer = np.zeros_like(Y)

    history: list[float] = [_optimizer_kl(p_true, Y)]
    history_iters: list[int] = [0]

    for it in range(params.max_iters):
        exaggeration = (params.early_exaggeration_factor
                        if it < params.exaggeration_iters else 1.0)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                grad = _optimizer_gradient(p_true, Y, exaggeration, grad_buffer)
        except ZeroDivisionError:
            # every pairwise kernel value underflowed: coordinates overflowed
            raise FloatingPointError(
                f"embedding diverged at iteration {it}; lower the learning rate"
            ) from None
        momentum = (params.momentum_early if it < params.momentum_switch_iter
                    else params.momentum_late)
        # reference-style per-coordinate gains: grow when the gradient keeps
        # opposing the velocity, shrink when they agree
        opposing = (grad > 0.0) != (velocity > 0.0)
        gains = np.where(opposing, gains + 0.2, gains * 0.8)
        np.maximum(gains, 0.01, out=gains)
        velocity = momentum * velocity - params.learning_rate * (gains * grad)
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
        if not np.isfinite(Y).all():
            raise FloatingPointError(
                f"embedding diverged at iteration {it}; lower the learning rate")
        step = it + 1
        if step % 50 == 0 or step == params.max_iters:
            history.append(_optimizer_kl(p_true, Y))
            history_iters.append(step)

    return Projection2D(y=Y, kl_history=tuple(history),
                        kl_history_iters=tuple(history_iters),
                        seed=seed, params=params)


def project_features(X, params: TsneParams, seed: int) -> Projection2D:
    """Full pipeline: distances -> calibrated affinities -> optimized embedding."""
    D = pairwise_sq_dists(X)
    P_cond = conditional_affinities(D, params.perplexity, params.entropy_tol)
    P = symmetrize(P_cond)
    return tsne_optimize(P, params, seed)


class ExactTSNE(BaseEstimator):
    """sklearn-style front end; ``fit_transform`` returns the 2-D embedding."""

    def __init__(self, perplexity: float = 40.0, max_iters: int = 1000,
                 learning_rate: float = 200.0, random_state: int = 0):
        self.perplexity = perplexity
        self.max_iters = max_iters
        self.learning_rate = learning_rate
        self.random_state = random_state

    def _params(self) -> TsneParams:
        return TsneParams(perplexity=self.perplexity, max_iters=self.max_iters,
                          learning_rate=self.learning_rate)

    def fit(self, X, y=None):
        projection = project_features(X, self._params(), self.random_state)
        self.projection_ = projection
        self.embedding_ = projection.y
        self.kl_history_ = projection.kl_history
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_


# ---------------------------------------------------------------------------
# Projection file
# ---------------------------------------------------------------------------

def write_projection(path: str | Path, ids, projection: Projection2D) -> None:
    ids = list(ids)
    if len(ids) != projection.y.shape[0]:
        raise ValueError("id count does not match projection rows")
    params = projection.params
    with open(path, "w") as fh:
        fh.write(f"# salp-proj v1 seed={projection.seed} "
                 f"perplexity={params.perplexity!r} iters={params.max_iters}\n")
        for sample_id, (x, y) in zip(ids, projection.y):
            fh.write(f"{sample_id} {float(x)!r} {float(y)!r}\n")


def read_projection(path: str | Path) -> tuple[list[int], np.ndarray, dict]:
    """Returns (ids, coordinates, header metadata)."""
    path = Path(path)
    if not path.exists():
        raise DataFormatError(f"projection file not found: {path}")
    meta: dict = {}
    ids: list[int] = []
    rows: list[tuple[float, float]] = []
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# salp-proj v1"):
            raise DataFormatError(f"{path}: bad projection header: {header!r}")
        for token in header.split()[3:]:
            key, _, value = token.partition("=")
            meta[key] = value
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise DataFormatError(f"{path}: line {lineno} is not 'id x y'")
            ids.append(int(parts[0]))
            rows.append((float(parts[1]), float(parts[2])))
    # a latent-space session legitimately has no embedding rows
    coords = (np.asarray(rows, dtype=np.float64) if rows
              else np.zeros((0, 2)))
    return ids, coords, meta
