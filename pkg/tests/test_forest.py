"""Random forest: bootstrap, voting, determinism, importance."""

import io

import numpy as np
import pytest

from _oracles import bayes_accuracy_item
from updrsfalls.cohort import build_view
from updrsfalls.errors import InvalidConfig
from updrsfalls.forest import (Forest, ForestConfig, default_mtry,
                               feature_importance, fit_forest,
                               forest_scores, predict_forest,
                               write_importance_csv)
from updrsfalls.synth import ScenarioConfig, generate_synthetic
from updrsfalls.tree import ArrayTree, TreeConfig, fit_tree, predict_tree

_FREE_TREE = TreeConfig(min_node_size=1, min_impurity_decrease=0.0,
                        max_depth=5)


def _leaf_tree(vote: int, p: int = 1) -> ArrayTree:
    """Single-leaf tree that always votes ``vote``."""
    return ArrayTree(feature=np.array([-1], dtype=np.int64),
                     threshold=np.zeros(1),
                     left=np.array([-1], dtype=np.int64),
                     right=np.array([-1], dtype=np.int64),
                     npos=np.array([vote], dtype=np.int64),
                     ntot=np.array([1], dtype=np.int64),
                     importance=np.zeros(p),
                     n_features=p)


def _vote_forest(votes) -> Forest:
    trees = [_leaf_tree(v) for v in votes]
    return Forest(trees=trees,
                  per_tree_bootstrap_indices=[np.zeros(1, dtype=np.int64)
                                              for _ in votes],
                  feature_count=1, feature_names=None,
                  config=ForestConfig(n_trees=len(trees)))


@pytest.fixture(scope="module")
def separable_view():
    # one strong causal Part-II item: Bayes accuracy on item 9 alone is
    # 0.9878, comfortably above the 0.95 design floor for this fixture
    assert bayes_accuracy_item(8.0, -12.0) >= 0.95
    cfg = ScenarioConfig(n=51, intercept=-12.0, coefficients={9: 8.0})
    ds = generate_synthetic(cfg, seed=11)
    return build_view(ds, "updrs2", "m6")


class TestVoting:
    def test_three_trees_two_votes_fall(self):
        assert predict_forest(_vote_forest([1, 1, 0]), np.zeros(1)) == \
            (1, pytest.approx(2 / 3))

    def test_tied_votes_predict_nonfaller(self):
        assert predict_forest(_vote_forest([1, 0]), np.zeros(1)) == (0, 0.5)

    def test_single_tree_forest_equals_that_tree(self):
        # the degenerate forest votes exactly as the lone tree classifies;
        # its probability is by definition the vote fraction (0 or 1 here),
        # not the leaf proportion
        rng = np.random.default_rng(40)
        X = rng.integers(0, 5, size=(20, 3)).astype(float)
        y = rng.integers(0, 2, size=20).astype(np.float64)
        forest = fit_forest((X, y), ForestConfig(
            n_trees=1, mtry=3, tree_config=_FREE_TREE, seed=0,
            bootstrap=False))
        tree = fit_tree((X, y), config=_FREE_TREE)
        for row in X:
            fklass, frac = predict_forest(forest, row)
            tklass, _ = predict_tree(tree, row)
            assert fklass == tklass
            assert frac == float(fklass)

    def test_vote_fraction_is_a_tree_count_fraction(self):
        rng = np.random.default_rng(41)
        X = rng.integers(0, 5, size=(25, 3)).astype(float)
        y = rng.integers(0, 2, size=25).astype(np.float64)
        forest = fit_forest((X, y), ForestConfig(
            n_trees=7, tree_config=_FREE_TREE, seed=2))
        for row in X:
            klass, frac = predict_forest(forest, row)
            assert round(frac * 7) == pytest.approx(frac * 7, abs=1e-12)
            assert klass == (1 if frac > 0.5 else 0)


class TestDeterminismAndBootstrap:
    def test_same_seed_reproduces_the_forest(self):
        rng = np.random.default_rng(42)
        X = rng.integers(0, 5, size=(30, 4)).astype(float)
        y = rng.integers(0, 2, size=30).astype(np.float64)
        cfg = ForestConfig(n_trees=20, tree_config=_FREE_TREE, seed=3)
        f1 = fit_forest((X, y), cfg)
        f2 = fit_forest((X, y), cfg)
        for b1, b2 in zip(f1.per_tree_bootstrap_indices,
                          f2.per_tree_bootstrap_indices):
            assert np.array_equal(b1, b2)
        assert np.array_equal(forest_scores(f1, X), forest_scores(f2, X))

    def test_different_seeds_differ(self):
        rng = np.random.default_rng(43)
        X = rng.integers(0, 5, size=(30, 4)).astype(float)
        y = rng.integers(0, 2, size=30).astype(np.float64)
        f1 = fit_forest((X, y), ForestConfig(n_trees=10,
                                             tree_config=_FREE_TREE, seed=3))
        f2 = fit_forest((X, y), ForestConfig(n_trees=10,
                                             tree_config=_FREE_TREE, seed=4))
        assert any(not np.array_equal(b1, b2) for b1, b2 in
                   zip(f1.per_tree_bootstrap_indices,
                       f2.per_tree_bootstrap_indices))

    def test_bootstrap_indices_are_in_range_with_size_n(self):
        rng = np.random.default_rng(44)
        X = rng.integers(0, 5, size=(17, 2)).astype(float)
        y = rng.integers(0, 2, size=17).astype(np.float64)
        forest = fit_forest((X, y), ForestConfig(n_trees=12,
                                                 tree_config=_FREE_TREE,
                                                 seed=5))
        for idx in forest.per_tree_bootstrap_indices:
            assert idx.shape == (17,)
            assert idx.min() >= 0 and idx.max() < 17

    def test_disabled_bootstrap_full_mtry_makes_identical_trees(self):
        rng = np.random.default_rng(45)
        X = rng.integers(0, 5, size=(20, 3)).astype(float)
        y = rng.integers(0, 2, size=20).astype(np.float64)
        forest = fit_forest((X, y), ForestConfig(
            n_trees=6, mtry=3, tree_config=_FREE_TREE, seed=9,
            bootstrap=False))
        base = forest.trees[0].scores(X)
        for tree in forest.trees[1:]:
            assert np.array_equal(tree.scores(X), base)

    def test_mtry_exceeding_feature_count_rejected(self):
        X = np.zeros((4, 2))
        y = np.array([0.0, 1.0, 0.0, 1.0])
        with pytest.raises(InvalidConfig):
            fit_forest((X, y), ForestConfig(n_trees=2, mtry=3))

    def test_default_mtry_is_floor_sqrt(self):
        assert default_mtry(1) == 1
        assert default_mtry(13) == 3
        assert default_mtry(42) == 6


class TestSeparableCohort:
    def test_training_vote_accuracy_on_strong_signal(self, separable_view):
        forest = fit_forest(separable_view, ForestConfig(n_trees=100, seed=5))
        preds = [predict_forest(forest, row)[0]
                 for row in separable_view.matrix]
        acc = np.mean(np.array(preds) == separable_view.labels)
        assert acc >= 0.9

    def test_causal_item_ranks_first_in_importance(self):
        cfg = ScenarioConfig(n=51, intercept=-12.0, coefficients={9: 8.0})
        hits = 0
        for s in range(100):
            ds = generate_synthetic(cfg, seed=3000 + s)
            view = build_view(ds, "updrs2", "m6")
            forest = fit_forest(view, ForestConfig(n_trees=50, seed=s))
            imp = feature_importance(forest)
            top = max(imp, key=imp.get)
            hits += (top == "item_9")
        assert hits >= 95


class TestImportance:
    def test_single_informative_feature_takes_all_importance(self):
        X = np.column_stack([[0, 0, 0, 1, 1, 1],
                             np.ones(6)]).astype(float)
        y = np.array([0.0, 0.0, 0.0, 1.0, 1.0, 1.0])
        forest = fit_forest((X, y), ForestConfig(
            n_trees=10, mtry=2, tree_config=_FREE_TREE, seed=1))
        imp = feature_importance(forest)
        assert imp["feature_0"] == pytest.approx(1.0, abs=1e-12)
        assert imp["feature_1"] == 0.0

    def test_importance_sums_to_one_when_any_split_exists(self):
        rng = np.random.default_rng(46)
        X = rng.integers(0, 5, size=(30, 4)).astype(float)
        y = rng.integers(0, 2, size=30).astype(np.float64)
        forest = fit_forest((X, y), ForestConfig(n_trees=15,
                                                 tree_config=_FREE_TREE,
                                                 seed=6))
        assert sum(feature_importance(forest).values()) == \
            pytest.approx(1.0, abs=1e-10)

    def test_pure_labels_give_all_zero_importance(self):
        X = np.arange(8, dtype=float).reshape(4, 2)
        y = np.ones(4)
        forest = fit_forest((X, y), ForestConfig(n_trees=3,
                                                 tree_config=_FREE_TREE,
                                                 seed=7))
        assert all(v == 0.0 for v in feature_importance(forest).values())

    def test_importance_csv_is_sorted_descending(self, separable_view):
        forest = fit_forest(separable_view, ForestConfig(n_trees=30, seed=8))
        buf = io.StringIO()
        write_importance_csv(forest, buf, header_comment="config test")
        lines = buf.getvalue().splitlines()
        assert lines[0] == "# config test"
        assert lines[1] == "feature,importance"
        vals = [float(line.split(",")[1]) for line in lines[2:]]
        assert vals == sorted(vals, reverse=True)
        assert lines[2].split(",")[0] == "item_9"
