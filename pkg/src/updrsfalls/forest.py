"""Random forests: bootstrap-resampled trees, per-node feature subsets,
majority-vote consensus.

Per-tree randomness comes from independent splitmix64 streams seeded by
``SeedSequence(seed).generate_state(n_trees)``, so fits are reproducible and
independent of tree-fitting order. Vote ties break to class 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._validation import as_labels, as_matrix, as_row
from .cohort import FeatureView
from .errors import InvalidConfig
from .tree import ArrayTree, TreeConfig

DEFAULT_N_TREES = 500


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = DEFAULT_N_TREES
    mtry: int | None = None  # None -> floor(sqrt(p))
    tree_config: TreeConfig = field(default_factory=TreeConfig)
    seed: int = 0
    bootstrap: bool = True  # test hook; production fits always resample

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")


@dataclass
class Forest:
    trees: list[ArrayTree]
    per_tree_bootstrap_indices: list[np.ndarray]
    feature_count: int
    feature_names: list[str] | None
    config: ForestConfig


def default_mtry(p: int) -> int:
    return max(1, int(np.floor(np.sqrt(p))))


def fit_forest(view, config: ForestConfig = ForestConfig()) -> Forest:
    """Fit ``n_trees`` trees, each on a size-n bootstrap resample, with a
    fresh uniform draw of ``mtry`` candidate features at every node."""
    if isinstance(view, FeatureView):
        X, y, names = view.matrix, view.labels, view.feature_names
    else:
        X, y = view
        names = None
    X = np.ascontiguousarray(as_matrix(X))
    y = as_labels(y, X.shape[0])
    n, p = X.shape
    mtry = config.mtry if config.mtry is not None else default_mtry(p)
    if mtry > p:
        raise InvalidConfig(f"mtry={mtry} exceeds feature count {p}")

    seeds = np.random.SeedSequence(config.seed).generate_state(
        config.n_trees, dtype=np.uint64)
    allowed = np.arange(p, dtype=np.int64)
    tc = config.tree_config
    trees = []
    boots = []
    for t in range(config.n_trees):
        state = np.uint64(seeds[t])
        if config.bootstrap:
            state, idx = _kernels.bootstrap_indices(state, n)
        else:
            idx = np.arange(n, dtype=np.int64)
        feat, thr, left, right, npos, ntot, imp, state = _kernels.grow(
            X[idx], y[idx], allowed, mtry, tc.max_depth, tc.min_node_size,
            tc.min_impurity_decrease, 0 if tc.criterion == "gini" else 1,
            np.uint64(state))
        trees.append(ArrayTree(feat, thr, left, right, npos, ntot, imp, p))
        boots.append(idx)
    return Forest(trees=trees, per_tree_bootstrap_indices=boots,
                  feature_count=p, feature_names=list(names) if names else None,
                  config=config)


def predict_forest(forest: Forest, row) -> tuple[int, float]:
    """Majority vote over per-tree classes; prob_fall is the fraction of
    trees voting fall (used as the ROC score)."""
    row = as_row(row, forest.feature_count)
    votes = 0
    for tree in forest.trees:
        votes += tree.predict_row(row)[0]
    frac = votes / len(forest.trees)
    return (1 if frac > 0.5 else 0), frac


def forest_scores(forest: Forest, X) -> np.ndarray:
    X = as_matrix(X)
    return np.array([predict_forest(forest, r)[1] for r in X])


def feature_importance(forest: Forest) -> dict[str, float]:
    """Mean size-weighted impurity decrease per feature across trees,
    normalized to sum to 1 (all-zero when no tree ever split)."""
    total = np.zeros(forest.feature_count)
    for tree in forest.trees:
        total += tree.importance
    s = total.sum()
    if s > 0:
        total = total / s
    names = (forest.feature_names
             if forest.feature_names is not None
             else [f"feature_{i}" for i in range(forest.feature_count)])
    return {name: float(v) for name, v in zip(names, total)}


def write_importance_csv(forest: Forest, fh, header_comment=None):
    """Two-column CSV (feature, importance), sorted descending; ties break
    alphabetically for stable output."""
    imp = feature_importance(forest)
    if header_comment is not None:
        fh.write(f"# {header_comment}\n")
    fh.write("feature,importance\n")
    for name, value in sorted(imp.items(), key=lambda kv: (-kv[1], kv[0])):
        fh.write(f"{name},{value!r}\n")
