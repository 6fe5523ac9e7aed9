"""Binary classification trees grown by recursive partitioning.

Splits are ``value < threshold`` (equal values route right) with thresholds at
midpoints of adjacent distinct sorted feature values. The split criterion is
the Gini impurity by default; classification entropy is available via
``TreeConfig.criterion``. Leaf class ties break to class 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._validation import as_labels, as_matrix, as_row
from .cohort import FeatureView
from .errors import EmptyNode, InvalidConfig

_CRIT_CODES = {"gini": 0, "entropy": 1}


@dataclass(frozen=True)
class TreeConfig:
    min_node_size: int = 5
    min_impurity_decrease: float = 0.01
    max_depth: int = 5
    criterion: str = "gini"

    def __post_init__(self):
        if self.min_node_size < 1:
            raise InvalidConfig("min_node_size must be >= 1")
        if self.min_impurity_decrease < 0:
            raise InvalidConfig("min_impurity_decrease must be >= 0")
        if self.max_depth < 1:
            raise InvalidConfig("max_depth must be >= 1")
        if self.criterion not in _CRIT_CODES:
            raise InvalidConfig(
                f"criterion must be one of {tuple(_CRIT_CODES)}")


@dataclass(frozen=True)
class SplitRule:
    feature_index: int
    threshold: float
    decrease: float = 0.0


@dataclass
class TreeNode:
    class_counts: tuple[int, int]  # (n_fall, n_nonfall)
    rule: SplitRule | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self):
        return self.rule is None

    @property
    def klass(self):
        pos, neg = self.class_counts
        return 1 if pos > neg else 0

    @property
    def purity(self):
        pos, neg = self.class_counts
        return max(pos, neg) / (pos + neg)

    @property
    def prob_fall(self):
        pos, neg = self.class_counts
        return pos / (pos + neg)


def gini_impurity(counts) -> float:
    """Gini impurity 1 - p^2 - (1-p)^2 of a (n_pos, n_neg) count pair."""
    pos, neg = counts
    n = pos + neg
    if n == 0:
        raise EmptyNode("impurity of an empty node is undefined")
    p = pos / n
    q = 1.0 - p
    return 1.0 - p * p - q * q


def entropy_impurity(counts) -> float:
    """Classification entropy in nats, with the 0*log(0) = 0 convention."""
    pos, neg = counts
    n = pos + neg
    if n == 0:
        raise EmptyNode("impurity of an empty node is undefined")
    p = pos / n
    q = 1.0 - p
    h = 0.0
    if p > 0.0:
        h -= p * np.log(p)
    if q > 0.0:
        h -= q * np.log(q)
    return float(h)


def best_split(features, labels, candidate_features=None,
               config: TreeConfig = TreeConfig()) -> SplitRule | None:
    """The (feature, midpoint threshold) maximizing the weighted impurity
    decrease, or None when the best decrease falls below
    ``min_impurity_decrease`` or every split would leave a child smaller
    than ``min_node_size``. Ties break to the lowest feature index, then the
    lowest threshold.
    """
    X = as_matrix(features)
    y = as_labels(labels, X.shape[0])
    if candidate_features is None:
        cand = np.arange(X.shape[1], dtype=np.int64)
    else:
        cand = np.array(sorted(candidate_features), dtype=np.int64)
    if X.shape[0] < 2 or cand.size == 0:
        return None
    idx = np.arange(X.shape[0], dtype=np.int64)
    f, t, dec = _kernels.split_scan(X, y, idx, cand,
                                    config.min_node_size,
                                    _CRIT_CODES[config.criterion])
    if f < 0 or dec < config.min_impurity_decrease:
        return None
    return SplitRule(int(f), float(t), float(dec))


@dataclass
class ArrayTree:
    """Flat fitted-tree state as produced by the growth kernel."""
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    npos: np.ndarray
    ntot: np.ndarray
    importance: np.ndarray
    n_features: int

    def predict_row(self, row):
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if row[self.feature[i]] < self.threshold[i] else self.right[i]
        pos, tot = self.npos[i], self.ntot[i]
        return (1 if 2 * pos > tot else 0), pos / tot

    def scores(self, X):
        return np.array([self.predict_row(r)[1] for r in np.asarray(X, dtype=np.float64)])


def grow_array_tree(X, y, config: TreeConfig, allowed=None, mtry=None,
                    state=np.uint64(0)) -> tuple[ArrayTree, np.uint64]:
    X = np.ascontiguousarray(as_matrix(X))
    y = as_labels(y, X.shape[0])
    if allowed is None:
        allowed = np.arange(X.shape[1], dtype=np.int64)
    else:
        allowed = np.array(sorted(allowed), dtype=np.int64)
    if mtry is None:
        mtry = allowed.size
    feat, thr, left, right, npos, ntot, imp, state = _kernels.grow(
        X, y, allowed, mtry, config.max_depth, config.min_node_size,
        config.min_impurity_decrease, _CRIT_CODES[config.criterion],
        np.uint64(state))
    return ArrayTree(feat, thr, left, right, npos, ntot, imp, X.shape[1]), state


def _to_node(arr: ArrayTree, i=0) -> TreeNode:
    counts = (int(arr.npos[i]), int(arr.ntot[i] - arr.npos[i]))
    if arr.feature[i] < 0:
        return TreeNode(class_counts=counts)
    return TreeNode(
        class_counts=counts,
        rule=SplitRule(int(arr.feature[i]), float(arr.threshold[i])),
        left=_to_node(arr, int(arr.left[i])),
        right=_to_node(arr, int(arr.right[i])),
    )


def fit_tree(view, config: TreeConfig = TreeConfig(),
             candidate_features=None) -> TreeNode:
    """Recursively partition the view (or an (X, y) pair) into a TreeNode
    tree. ``candidate_features`` restricts every node to that feature subset.
    """
    if isinstance(view, FeatureView):
        X, y = view.matrix, view.labels
    else:
        X, y = view
    arr, _ = grow_array_tree(X, y, config, allowed=candidate_features)
    node = _to_node(arr)
    node.n_features = arr.n_features
    return node


def predict_tree(tree: TreeNode, row) -> tuple[int, float]:
    """Route a row to its leaf: returns (class, prob_fall). Values equal to a
    threshold go right (the rule is strict less-than)."""
    n_features = getattr(tree, "n_features", None)
    if n_features is not None:
        row = as_row(row, n_features)
    else:
        row = np.asarray(row, dtype=np.float64).ravel()
    node = tree
    while not node.is_leaf:
        node = node.left if row[node.rule.feature_index] < node.rule.threshold else node.right
    return node.klass, node.prob_fall


def tree_to_text(tree: TreeNode, feature_names=None) -> str:
    """Indented one-rule-per-line rendering with leaf purity."""
    lines = []

    def name(i):
        return feature_names[i] if feature_names else f"feature_{i}"

    def walk(node, depth, prefix):
        pad = "  " * depth
        if node.is_leaf:
            pos, neg = node.class_counts
            lines.append(f"{pad}{prefix}leaf: class={node.klass} "
                         f"counts=({pos},{neg}) purity={node.purity:.3f}")
            return
        lines.append(f"{pad}{prefix}{name(node.rule.feature_index)} "
                     f"< {node.rule.threshold:g}?")
        walk(node.left, depth + 1, "yes: ")
        walk(node.right, depth + 1, "no:  ")

    walk(tree, 0, "")
    return "\n".join(lines)
