"""Scikit-learn-style estimator facades over the core fitting routines.

All estimators implement fit / predict / predict_proba with binary classes
[0, 1], expose fitted state via trailing-underscore attributes, and are
clone-compatible, which is what the LOOCV harness relies on.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from ._validation import as_labels, as_matrix
from .forest import Forest, ForestConfig, feature_importance, fit_forest, forest_scores
from .logistic import DEFAULT_V0, fit_map, predict_prob_matrix
from .selection import bma_average, bma_predict, forward_select
from .tree import TreeConfig, grow_array_tree, _to_node


class _ScoredClassifier(BaseEstimator, ClassifierMixin):
    """Shared predict/predict_proba plumbing: subclasses provide _scores."""

    def predict_proba(self, X):
        p = self._scores(as_matrix(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self._scores(as_matrix(X)) > 0.5).astype(np.int64)


class TreeClassifier(_ScoredClassifier):
    """Gini (or entropy) recursive-partitioning tree."""

    def __init__(self, min_node_size=5, min_impurity_decrease=0.01,
                 max_depth=5, criterion="gini"):
        self.min_node_size = min_node_size
        self.min_impurity_decrease = min_impurity_decrease
        self.max_depth = max_depth
        self.criterion = criterion

    def fit(self, X, y):
        X = as_matrix(X)
        y = as_labels(y, X.shape[0])
        config = TreeConfig(self.min_node_size, self.min_impurity_decrease,
                            self.max_depth, self.criterion)
        self.array_tree_, _ = grow_array_tree(X, y, config)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    @property
    def tree_(self):
        node = _to_node(self.array_tree_)
        node.n_features = self.n_features_in_
        return node

    def _scores(self, X):
        return self.array_tree_.scores(X)

    def split_features(self):
        """Indices of features used by at least one split, in node order."""
        used = []
        for f in self.array_tree_.feature:
            if f >= 0 and f not in used:
                used.append(int(f))
        return used


class ForestClassifier(_ScoredClassifier):
    """Bootstrap forest with per-node feature subsampling; scores are the
    fraction of trees voting fall, class ties break to 0."""

    def __init__(self, n_trees=500, mtry=None, min_node_size=5,
                 min_impurity_decrease=0.01, max_depth=5, criterion="gini",
                 seed=0, bootstrap=True):
        self.n_trees = n_trees
        self.mtry = mtry
        self.min_node_size = min_node_size
        self.min_impurity_decrease = min_impurity_decrease
        self.max_depth = max_depth
        self.criterion = criterion
        self.seed = seed
        self.bootstrap = bootstrap

    def fit(self, X, y):
        X = as_matrix(X)
        y = as_labels(y, X.shape[0])
        config = ForestConfig(
            n_trees=self.n_trees, mtry=self.mtry,
            tree_config=TreeConfig(self.min_node_size,
                                   self.min_impurity_decrease,
                                   self.max_depth, self.criterion),
            seed=self.seed, bootstrap=self.bootstrap)
        self.forest_: Forest = fit_forest((X, y), config)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def _scores(self, X):
        return forest_scores(self.forest_, X)

    @property
    def feature_importances_(self):
        imp = feature_importance(self.forest_)
        return np.array(list(imp.values()))


class BayesLogitClassifier(_ScoredClassifier):
    """MAP logistic regression with N(0, v0) priors and Laplace evidence."""

    def __init__(self, v0=DEFAULT_V0):
        self.v0 = v0

    def fit(self, X, y):
        X = as_matrix(X)
        y = as_labels(y, X.shape[0])
        self.fit_ = fit_map((X if X.shape[1] else None, y), v0=self.v0)
        self.lml_ = self.fit_.lml
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def _scores(self, X):
        return predict_prob_matrix(self.fit_, X)


class ForwardSelectClassifier(_ScoredClassifier):
    """Forward lml selection, then prediction with the preferred model."""

    def __init__(self, v0=DEFAULT_V0):
        self.v0 = v0

    def fit(self, X, y):
        X = as_matrix(X)
        y = as_labels(y, X.shape[0])
        names = tuple(f"x{i}" for i in range(X.shape[1]))
        self.trace_ = forward_select((X, y, names), v0=self.v0)
        self.features_ = self.trace_.preferred_model
        self.columns_ = tuple(names.index(f) for f in self.features_)
        self.fit_ = self.trace_.fits[self.features_]
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def _scores(self, X):
        if not self.columns_:  # intercept-only: row content is ignored
            return predict_prob_matrix(self.fit_, X)
        return predict_prob_matrix(self.fit_, X[:, list(self.columns_)])


class BMAClassifier(_ScoredClassifier):
    """Forward selection followed by model averaging over every visited
    model, weighted by normalized evidence."""

    def __init__(self, v0=DEFAULT_V0, weighting="posterior_softmax"):
        self.v0 = v0
        self.weighting = weighting

    def fit(self, X, y):
        X = as_matrix(X)
        y = as_labels(y, X.shape[0])
        names = tuple(f"x{i}" for i in range(X.shape[1]))
        self.trace_ = forward_select((X, y, names), v0=self.v0)
        self.average_ = bma_average(self.trace_, (X, y, names),
                                    weighting=self.weighting, v0=self.v0)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def _scores(self, X):
        return np.array([bma_predict(self.average_, row) for row in X])
