"""Optimum-path forest machinery on the complete Euclidean graph.

Three layers:

* :func:`minimax_forest` — multi-source best-first search computing, for every
  node, the minimax (bottleneck) path cost to the nearest root: the minimum
  over paths of the maximum edge length. The priority queue pops equal-cost
  entries in insertion order, and roots are seeded in ascending id order, so
  results are fully deterministic.
* :func:`opf_semi_propagate` — one forest per class (roots = that class's
  supervised samples, run over all points); each unsupervised sample gets the
  cheapest class, the runner-up cost from any other class, and the confidence
  ``1 - win/(win + rival)``.
* :func:`opf_train` / :func:`opf_classify` — the supervised classifier:
  prototypes are both endpoints of every inter-class MST edge, training costs
  come from the prototype-rooted forest, and a query takes the label of the
  training node minimizing max(trained_cost, distance).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .validation import check_features, check_labels

NO_PRED = -1


@dataclass(frozen=True)
class ForestResult:
    """Per-node path cost, predecessor, conquering root (and its label if known)."""

    cost: np.ndarray
    pred: np.ndarray        # predecessor id, NO_PRED for roots
    root: np.ndarray
    root_label: np.ndarray | None = None


@dataclass(frozen=True)
class PropagationResult:
    """Per-unsupervised-sample outcome of semi-supervised propagation."""

    ids: np.ndarray          # unsupervised sample ids, ascending
    labels: np.ndarray       # assigned class per id
    win_cost: np.ndarray     # cheapest path cost (conquering class)
    rival_cost: np.ndarray   # cheapest cost from any other class
    confidence: np.ndarray   # 1 - win/(win + rival), in [0.5, 1]

    def confidence_of(self) -> dict[int, float]:
        return {int(i): float(c) for i, c in zip(self.ids, self.confidence)}

    def label_of(self) -> dict[int, int]:
        return {int(i): int(lab) for i, lab in zip(self.ids, self.labels)}


def euclidean_distances(points: np.ndarray) -> np.ndarray:
    """Dense symmetric distance matrix (plain Euclidean, not squared)."""
    points = check_features(points, name="points")
    sq = np.einsum("ij,ij->i", points, points)
    D = sq[:, None] + sq[None, :] - 2.0 * (points @ points.T)
    np.maximum(D, 0.0, out=D)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    return np.sqrt(D)


def minimax_forest(points, roots, dist: np.ndarray | None = None) -> ForestResult:
    """Multi-source minimax-path forest over the complete graph.

    ``cost[s]`` is the minimum over paths from any root to ``s`` of the
    maximum edge length along the path; ``pred``/``root`` trace the optimum
    paths. ``dist`` may carry a precomputed distance matrix to share across
    per-class runs.
    """
    if dist is None:
        dist = euclidean_distances(points)
    n = dist.shape[0]
    roots = sorted(int(r) for r in roots)
    if not roots:
        raise ValueError("root set must not be empty")
    if roots[0] < 0 or roots[-1] >= n:
        raise ValueError(f"root id out of range [0, {n})")

    cost = np.full(n, np.inf)
    pred = np.full(n, NO_PRED, dtype=np.int64)
    root = np.full(n, NO_PRED, dtype=np.int64)
    done = np.zeros(n, dtype=bool)

    heap: list[tuple[float, int, int]] = []
    seq = 0
    for r in roots:
        cost[r] = 0.0
        root[r] = r
        heap.append((0.0, seq, r))
        seq += 1
    heapq.heapify(heap)

    while heap:
        c, _, u = heapq.heappop(heap)
        if done[u] or c > cost[u]:
            continue
        done[u] = True
        offer = np.maximum(c, dist[u])
        better = offer < cost
        better[done] = False
        if not better.any():
            continue
        cost[better] = offer[better]
        pred[better] = u
        root[better] = root[u]
        for v in np.flatnonzero(better):
            heapq.heappush(heap, (cost[v], seq, int(v)))
            seq += 1

    return ForestResult(cost=cost, pred=pred, root=root)


def confidence(win_cost, rival_cost):
    """Label confidence 1 - win/(win + rival); 0.5 when both costs are zero.

    Requires win <= rival (the winning cost is minimal by construction), so
    the result always lands in [0.5, 1].
    """
    win = np.asarray(win_cost, dtype=np.float64)
    rival = np.asarray(rival_cost, dtype=np.float64)
    if np.any(win > rival):
        raise ValueError("win_cost must not exceed rival_cost")
    total = win + rival
    out = np.where(total > 0.0, 1.0 - np.divide(win, np.where(total > 0.0, total, 1.0)),
                   0.5)
    if out.ndim == 0:
        return float(out)
    return out


def opf_semi_propagate(points, supervised, unsupervised,
                       dist: np.ndarray | None = None) -> PropagationResult:
    """Propagate labels from supervised samples to every unsupervised one.

    ``supervised`` is an (id, label) sequence, ``unsupervised`` an id
    sequence; together they must cover the rows of ``points`` exactly. Ties
    on the winning cost go to the smallest class id.
    """
    points = check_features(points, name="points")
    n = points.shape[0]
    sup_ids = [int(i) for i, _ in supervised]
    sup_labels = {int(i): int(lab) for i, lab in supervised}
    unsup_ids = sorted(int(i) for i in unsupervised)
    if set(sup_ids) & set(unsup_ids):
        raise ValueError("supervised and unsupervised id sets overlap")
    if set(sup_ids) | set(unsup_ids) != set(range(n)):
        raise ValueError("supervised + unsupervised ids must cover all points")
    classes = sorted(set(sup_labels.values()))
    if len(classes) < 2:
        raise ValueError("need supervised samples from at least two classes")

    if dist is None:
        dist = euclidean_distances(points)

    per_class = np.empty((len(classes), n))
    for k, cls in enumerate(classes):
        roots = [i for i in sup_ids if sup_labels[i] == cls]
        per_class[k] = minimax_forest(points, roots, dist=dist).cost

    unsup = np.asarray(unsup_ids, dtype=np.int64)
    costs = per_class[:, unsup]                      # classes x unsupervised
    best_idx = np.argmin(costs, axis=0)              # argmin -> smallest class on ties
    win = costs[best_idx, np.arange(len(unsup))]
    masked = costs.copy()
    masked[best_idx, np.arange(len(unsup))] = np.inf
    rival = masked.min(axis=0)
    labels = np.array([classes[k] for k in best_idx], dtype=np.int64)
    conf = confidence(win, rival)
    return PropagationResult(ids=unsup, labels=labels, win_cost=win,
                             rival_cost=rival, confidence=conf)


# ---------------------------------------------------------------------------
# Supervised OPF classifier
# ---------------------------------------------------------------------------

def _minimum_spanning_tree(dist: np.ndarray) -> list[tuple[int, int]]:
    """Prim's algorithm on a dense distance matrix; edges as (parent, child)."""
    n = dist.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    attach = np.full(n, NO_PRED, dtype=np.int64)
    in_tree[0] = True
    best[0] = 0.0
    np.minimum(best, dist[0], out=best)
    attach[1:] = 0
    edges: list[tuple[int, int]] = []
    for _ in range(n - 1):
        candidates = np.where(in_tree, np.inf, best)
        v = int(np.argmin(candidates))
        edges.append((int(attach[v]), v))
        in_tree[v] = True
        closer = dist[v] < best
        closer[in_tree] = False
        best[closer] = dist[v][closer]
        attach[closer] = v
    return edges


@dataclass(frozen=True)
class OpfModel:
    """Trained supervised OPF: points, working labels, path costs, prototypes."""

    points: np.ndarray
    input_labels: np.ndarray
    labels: np.ndarray          # root-propagated labels used at classification
    trained_cost: np.ndarray
    prototypes: frozenset[int]


def opf_train(points, labels) -> OpfModel:
    """Fit the supervised classifier: MST boundary prototypes + minimax costs."""
    points = check_features(points, name="points")
    labels = check_labels(labels)
    n = points.shape[0]
    if labels.size != n:
        raise ValueError("labels length must match point count")
    if n == 0:
        raise ValueError("training set is empty")

    if len(set(labels.tolist())) == 1:
        # degenerate single-class model: every point a zero-cost prototype
        return OpfModel(points=points, input_labels=labels, labels=labels.copy(),
                        trained_cost=np.zeros(n),
                        prototypes=frozenset(range(n)))

    dist = euclidean_distances(points)
    prototypes: set[int] = set()
    for a, b in _minimum_spanning_tree(dist):
        if labels[a] != labels[b]:
            prototypes.add(a)
            prototypes.add(b)
    forest = minimax_forest(points, sorted(prototypes), dist=dist)
    propagated = labels[forest.root]
    return OpfModel(points=points, input_labels=labels, labels=propagated,
                    trained_cost=forest.cost, prototypes=frozenset(prototypes))


def opf_classify(model: OpfModel, x) -> tuple[int, float]:
    """Label of the training node minimizing max(trained_cost, distance to x).

    Ties break by smaller trained cost, then smaller node id.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    gaps = np.linalg.norm(model.points - x, axis=1)
    score = np.maximum(model.trained_cost, gaps)
    winner = min(range(len(score)),
                 key=lambda t: (score[t], model.trained_cost[t], t))
    return int(model.labels[winner]), float(score[winner])


def opf_classify_batch(model: OpfModel, X) -> np.ndarray:
    """Vectorized :func:`opf_classify` for a matrix of query rows."""
    X = check_features(X)
    sq_train = np.einsum("ij,ij->i", model.points, model.points)
    sq_query = np.einsum("ij,ij->i", X, X)
    D = sq_query[:, None] + sq_train[None, :] - 2.0 * (X @ model.points.T)
    np.maximum(D, 0.0, out=D)
    np.sqrt(D, out=D)
    scores = np.maximum(D, model.trained_cost[None, :])
    out = np.empty(X.shape[0], dtype=np.int64)
    for i, row in enumerate(scores):
        m = row.min()
        cands = np.flatnonzero(row == m)
        if len(cands) > 1:
            tc = model.trained_cost[cands]
            cands = cands[tc == tc.min()]
        out[i] = model.labels[cands[0]]
    return out


# ---------------------------------------------------------------------------
# Estimator wrappers
# ---------------------------------------------------------------------------

class SemiSupervisedOPF(BaseEstimator):
    """Label propagation with confidences; ``y`` uses -1 for unlabeled rows."""

    def fit(self, X, y):
        X = check_features(X)
        y = check_labels(y)
        supervised = [(int(i), int(y[i])) for i in np.flatnonzero(y >= 0)]
        unsupervised = [int(i) for i in np.flatnonzero(y < 0)]
        result = opf_semi_propagate(X, supervised, unsupervised)
        transduction = y.copy()
        transduction[result.ids] = result.labels
        self.result_ = result
        self.transduction_ = transduction
        conf = np.full(len(y), np.nan)
        conf[result.ids] = result.confidence
        self.confidence_ = conf
        return self


class OPFClassifier(BaseEstimator, ClassifierMixin):
    """Supervised optimum-path-forest classifier (no hyperparameters)."""

    def fit(self, X, y):
        self.model_ = opf_train(X, y)
        self.classes_ = np.unique(check_labels(y))
        return self

    def predict(self, X):
        return opf_classify_batch(self.model_, X)


# ---------------------------------------------------------------------------
# Propagation dump
# ---------------------------------------------------------------------------

def write_propagation(path, result: PropagationResult) -> None:
    with open(path, "w") as fh:
        for i in range(len(result.ids)):
            fh.write(f"{int(result.ids[i])} {int(result.labels[i])} "
                     f"{result.win_cost[i]:.9g} {result.rival_cost[i]:.9g} "
                     f"{result.confidence[i]:.9g}\n")


def read_propagation(path) -> PropagationResult:
    ids, labels, wins, rivals, confs = [], [], [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise ValueError(f"{path}: line {lineno} is not 'id label win rival conf'")
            ids.append(int(parts[0]))
            labels.append(int(parts[1]))
            wins.append(float(parts[2]))
            rivals.append(float(parts[3]))
            confs.append(float(parts[4]))
    return PropagationResult(ids=np.asarray(ids, dtype=np.int64),
                             labels=np.asarray(labels, dtype=np.int64),
                             win_cost=np.asarray(wins),
                             rival_cost=np.asarray(rivals),
                             confidence=np.asarray(confs))
