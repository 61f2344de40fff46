import numpy as np
import pytest

from salp.opf import (OPFClassifier, SemiSupervisedOPF, confidence,
                      euclidean_distances, minimax_forest, opf_classify,
                      opf_classify_batch, opf_semi_propagate, opf_train,
                      read_propagation, write_propagation)
from salp import synth


# ---------------------------------------------------------------------------
# Brute-force oracle: exhaustive simple-path enumeration of bottleneck costs
# ---------------------------------------------------------------------------

def brute_minimax_costs(dist, roots, prune=True):
    n = dist.shape[0]
    best = [np.inf] * n
    for r in roots:
        best[r] = 0.0

    def dfs(u, visited, cur_max):
        for v in range(n):
            if visited & (1 << v):
                continue
            new_max = max(cur_max, dist[u][v])
            if new_max < best[v]:
                best[v] = new_max
            if not prune or new_max < max(best):
                dfs(v, visited | (1 << v), new_max)

    for r in roots:
        dfs(r, 1 << r, 0.0)
    return np.array(best)


def brute_propagate(dist, sup_labels: dict[int, int], unsup_ids):
    classes = sorted(set(sup_labels.values()))
    per_class = {cls: brute_minimax_costs(dist, [i for i, lab in sup_labels.items()
                                                 if lab == cls])
                 for cls in classes}
    out = {}
    for s in unsup_ids:
        ranked = sorted((per_class[cls][s], cls) for cls in classes)
        win, label = ranked[0]
        rival = min(cost for cost, cls in ranked if cls != label)
        out[s] = (label, win, rival)
    return out


def random_instance(rng, max_nodes=8):
    n = int(rng.integers(2, max_nodes + 1))
    points = rng.integers(0, 8, size=(n, int(rng.integers(1, 3)))).astype(float)
    return points


class TestMinimaxForest:
    def test_line_of_three_hand_case(self):
        points = np.array([[0.0], [1.0], [3.0]])
        forest = minimax_forest(points, [0])
        np.testing.assert_array_equal(forest.cost, [0.0, 1.0, 2.0])
        assert forest.pred[2] == 1  # 0 -> 1 -> 3 beats the direct edge of 3
        assert forest.root.tolist() == [0, 0, 0]

    def test_every_node_a_root(self):
        points = np.array([[0.0], [2.0], [5.0]])
        forest = minimax_forest(points, [0, 1, 2])
        np.testing.assert_array_equal(forest.cost, 0.0)
        assert (forest.pred == -1).all()

    def test_two_clusters_bottleneck_is_the_gap(self):
        points = np.array([[0.0], [0.1], [5.0], [5.1]])
        forest = minimax_forest(points, [0])
        assert forest.cost[2] == pytest.approx(4.9)
        assert forest.cost[3] == pytest.approx(4.9)

    def test_equal_cost_conquest_goes_to_first_inserted_root(self):
        points = np.array([[0.0], [2.0], [4.0]])
        forest = minimax_forest(points, [0, 2])
        assert forest.cost[1] == 2.0
        assert forest.root[1] == 0  # roots seeded in ascending id order

    def test_empty_roots_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            minimax_forest(np.zeros((3, 1)), [])

    def test_pred_chains_terminate_at_roots_with_monotone_costs(self):
        rng = np.random.Generator(np.random.PCG64(0))
        points = rng.standard_normal((30, 3))
        roots = [0, 7, 19]
        forest = minimax_forest(points, roots)
        for start in range(30):
            node, hops = start, 0
            while forest.pred[node] != -1:
                parent = forest.pred[node]
                assert forest.cost[parent] <= forest.cost[node]
                node = parent
                hops += 1
                assert hops <= 30
            assert node in roots
            assert forest.root[start] in roots

    def test_oracle_equivalence_random_instances(self):
        rng = np.random.Generator(np.random.PCG64(12345))
        for _ in range(150):
            points = random_instance(rng)
            n = len(points)
            n_roots = int(rng.integers(1, n + 1))
            roots = sorted(rng.choice(n, size=n_roots, replace=False).tolist())
            dist = euclidean_distances(points)
            expected = brute_minimax_costs(dist, roots)
            got = minimax_forest(points, roots).cost
            np.testing.assert_array_equal(got, expected)

    def test_oracle_prune_is_sound(self):
        rng = np.random.Generator(np.random.PCG64(99))
        for _ in range(40):
            points = random_instance(rng, max_nodes=6)
            dist = euclidean_distances(points)
            roots = [0]
            np.testing.assert_array_equal(
                brute_minimax_costs(dist, roots, prune=True),
                brute_minimax_costs(dist, roots, prune=False))


class TestConfidence:
    def test_cost_ratio_formula(self):
        assert confidence(0.2, 0.6) == pytest.approx(0.75, abs=1e-15)

    def test_equal_competition(self):
        for x in (0.1, 1.0, 42.0):
            assert confidence(x, x) == 0.5

    def test_uncontested(self):
        assert confidence(0.0, 5.0) == 1.0

    def test_degenerate_both_zero(self):
        assert confidence(0.0, 0.0) == 0.5

    def test_win_above_rival_rejected(self):
        with pytest.raises(ValueError, match="exceed"):
            confidence(1.0, 0.5)

    def test_bounds(self):
        rng = np.random.Generator(np.random.PCG64(1))
        win = rng.random(100)
        rival = win + rng.random(100)
        c = confidence(win, rival)
        assert ((c >= 0.5) & (c <= 1.0)).all()


class TestPropagate:
    def test_line_hand_case(self):
        # positions 0,1,2,9,10; class 1 rooted at 0, class 2 rooted at 10
        points = np.array([[0.0], [1.0], [2.0], [9.0], [10.0]])
        result = opf_semi_propagate(points, [(0, 1), (4, 2)], [1, 2, 3])
        assert result.labels.tolist() == [1, 1, 2]
        s2 = result.ids.tolist().index(2)
        assert result.win_cost[s2] == 1.0     # 0 -> 1 -> 2
        assert result.rival_cost[s2] == 7.0   # 10 -> 9 -> 2, bottleneck 7
        assert result.confidence[s2] == pytest.approx(1 - 1 / 8)

    def test_equidistant_tie_smaller_class_wins(self):
        points = np.array([[0.0], [5.0], [10.0]])
        result = opf_semi_propagate(points, [(0, 3), (2, 7)], [1])
        assert result.labels.tolist() == [3]
        assert result.win_cost[0] == result.rival_cost[0] == 5.0
        assert result.confidence[0] == 0.5

    def test_coincident_with_root_fully_confident(self):
        points = np.array([[0.0], [0.0], [9.0]])
        result = opf_semi_propagate(points, [(0, 0), (2, 1)], [1])
        assert result.win_cost[0] == 0.0
        assert result.confidence[0] == 1.0

    def test_single_class_supervision_rejected(self):
        points = np.arange(4.0)[:, None]
        with pytest.raises(ValueError, match="two classes"):
            opf_semi_propagate(points, [(0, 1), (1, 1)], [2, 3])

    def test_ids_must_cover_points(self):
        points = np.arange(4.0)[:, None]
        with pytest.raises(ValueError, match="cover"):
            opf_semi_propagate(points, [(0, 0), (1, 1)], [2])

    def test_oracle_equivalence_random_instances(self):
        rng = np.random.Generator(np.random.PCG64(777))
        for _ in range(120):
            points = random_instance(rng, max_nodes=7)
            n = len(points)
            if n < 3:
                continue
            n_sup = int(rng.integers(2, n))
            sup_ids = sorted(rng.choice(n, size=n_sup, replace=False).tolist())
            labels = {}
            labels[sup_ids[0]] = 0
            labels[sup_ids[1]] = 1
            for i in sup_ids[2:]:
                labels[i] = int(rng.integers(0, 3))
            unsup = [i for i in range(n) if i not in labels]
            if not unsup:
                continue
            dist = euclidean_distances(points)
            expected = brute_propagate(dist, labels, unsup)
            result = opf_semi_propagate(points, sorted(labels.items()), unsup)
            for k, s in enumerate(result.ids.tolist()):
                exp_label, exp_win, exp_rival = expected[s]
                assert result.labels[k] == exp_label
                assert result.win_cost[k] == exp_win
                assert result.rival_cost[k] == exp_rival

    def test_every_unsupervised_sample_labeled_with_valid_confidence(self):
        X, y = synth.make_blobs(3, 4, 40, 5.0, seed=3)
        sup = [(i, int(y[i])) for i in range(0, 40, 8)]
        unsup = [i for i in range(40) if i % 8 != 0]
        result = opf_semi_propagate(X, sup, unsup)
        assert sorted(result.ids.tolist()) == unsup
        assert ((result.confidence >= 0.5) & (result.confidence <= 1.0)).all()
        assert (result.win_cost <= result.rival_cost).all()

    def test_scale_covariance(self):
        rng = np.random.Generator(np.random.PCG64(4))
        points = rng.standard_normal((12, 2))
        sup = [(0, 0), (1, 1), (2, 0)]
        unsup = list(range(3, 12))
        base = opf_semi_propagate(points, sup, unsup)
        scaled = opf_semi_propagate(points * 2.0, sup, unsup)
        np.testing.assert_array_equal(scaled.labels, base.labels)
        np.testing.assert_array_equal(scaled.win_cost, base.win_cost * 2.0)
        np.testing.assert_array_equal(scaled.rival_cost, base.rival_cost * 2.0)
        np.testing.assert_array_equal(scaled.confidence, base.confidence)

    def test_monotone_threshold_sets(self):
        X, y = synth.make_blobs(2, 3, 30, 3.0, seed=9)
        sup = [(0, 0), (15, 1)]
        unsup = [i for i in range(30) if i not in (0, 15)]
        result = opf_semi_propagate(X, sup, unsup)
        previous = None
        for tau in np.linspace(0, 1, 11):
            accepted = {int(i) for i, c in zip(result.ids, result.confidence) if c >= tau}
            if previous is not None:
                assert accepted <= previous
            previous = accepted


class TestSupervisedOpf:
    def test_two_pair_hand_case(self):
        points = np.array([[0.0], [1.0], [5.0], [6.0]])
        model = opf_train(points, [0, 0, 1, 1])
        assert model.prototypes == frozenset({1, 2})
        np.testing.assert_array_equal(model.trained_cost, [1.0, 0.0, 0.0, 1.0])
        np.testing.assert_array_equal(model.labels, [0, 0, 1, 1])

    def test_single_class_all_prototypes(self):
        points = np.array([[0.0], [2.0], [9.0]])
        model = opf_train(points, [4, 4, 4])
        assert model.prototypes == frozenset({0, 1, 2})
        np.testing.assert_array_equal(model.trained_cost, 0.0)

    def test_coincident_points_of_distinct_classes(self):
        points = np.array([[1.0], [1.0], [4.0]])
        model = opf_train(points, [0, 1, 1])
        assert {0, 1} <= set(model.prototypes)

    def test_classify_hand_case(self):
        points = np.array([[0.0], [1.0], [5.0], [6.0]])
        model = opf_train(points, [0, 0, 1, 1])
        label, cost = opf_classify(model, [2.0])
        assert (label, cost) == (0, 1.0)

    def test_classify_coincident_returns_trained_cost(self):
        points = np.array([[0.0], [1.0], [5.0], [6.0]])
        model = opf_train(points, [0, 0, 1, 1])
        label, cost = opf_classify(model, [0.0])
        assert (label, cost) == (0, 1.0)  # trained_cost of node 0 is 1

    def test_classify_midpoint_tie_prefers_smaller_id(self):
        points = np.array([[0.0], [1.0], [5.0], [6.0]])
        model = opf_train(points, [0, 0, 1, 1])
        label, cost = opf_classify(model, [3.0])
        assert (label, cost) == (0, 2.0)

    def test_batch_matches_scalar_classify(self):
        rng = np.random.Generator(np.random.PCG64(5))
        X, y = synth.make_blobs(3, 4, 30, 4.0, seed=5)
        model = opf_train(X, y)
        queries = rng.standard_normal((20, 4)) * 3
        batch = opf_classify_batch(model, queries)
        singles = [opf_classify(model, q)[0] for q in queries]
        assert batch.tolist() == singles

    def test_training_accuracy_perfect_on_separable_blobs(self):
        X, y = synth.make_blobs(4, 6, 60, 8.0, seed=6)
        model = opf_train(X, y)
        predictions = opf_classify_batch(model, X)
        assert (predictions == y).all()

    def test_empty_training_set(self):
        with pytest.raises(Exception):
            opf_train(np.zeros((0, 2)), [])


class TestEstimators:
    def test_semi_supervised_estimator_transduction(self):
        X, y = synth.make_blobs(2, 3, 20, 8.0, seed=8)
        y_partial = np.full(20, -1)
        y_partial[0] = y[0]
        y_partial[10] = y[10]
        est = SemiSupervisedOPF().fit(X, y_partial)
        assert (est.transduction_ >= 0).all()
        assert est.transduction_[0] == y[0] and est.transduction_[10] == y[10]
        assert np.isnan(est.confidence_[0])
        unlabeled = np.flatnonzero(y_partial < 0)
        assert np.isfinite(est.confidence_[unlabeled]).all()

    def test_classifier_estimator_roundtrip(self):
        X, y = synth.make_blobs(3, 5, 45, 8.0, seed=2)
        clf = OPFClassifier().fit(X, y)
        assert (clf.predict(X) == y).all()
        assert clf.score(X, y) == 1.0


class TestPropagationDump:
    def test_roundtrip_nine_significant_digits(self, tmp_path):
        X, y = synth.make_blobs(2, 3, 16, 5.0, seed=1)
        sup = [(0, 0), (8, 1)]
        unsup = [i for i in range(16) if i not in (0, 8)]
        result = opf_semi_propagate(X, sup, unsup)
        path = tmp_path / "prop.txt"
        write_propagation(path, result)
        again = read_propagation(path)
        np.testing.assert_array_equal(again.ids, result.ids)
        np.testing.assert_array_equal(again.labels, result.labels)
        np.testing.assert_allclose(again.win_cost, result.win_cost, rtol=1e-8)
        np.testing.assert_allclose(again.confidence, result.confidence, rtol=1e-8)
