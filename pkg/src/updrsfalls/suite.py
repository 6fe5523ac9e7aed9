"""Batch engine: run every requested scheme x horizon x method cell through
leave-one-out cross-validation and collect the metrics grid plus the
selected-variables grid.

Each cell gets a deterministic seed derived from (suite seed, cell
coordinates), so the whole grid is reproducible and independent of cell
execution order. A failing cell is recorded (error kind + message) without
aborting the rest of the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .cohort import HORIZONS, SCHEMES, CohortDataset, FeatureView, build_view
from .estimators import (BMAClassifier, ForestClassifier,
                         ForwardSelectClassifier, TreeClassifier)
from .evaluation import EvaluationReport, evaluate_scores, loocv_scores
from .forest import DEFAULT_N_TREES
from .logistic import DEFAULT_V0, fit_map, predict_prob, predict_prob_matrix
from .selection import bma_average, forward_select, inclusion_probabilities
from .tree import TreeConfig, fit_tree

METHODS = ("dt", "rf", "logit", "bma")

_METRIC_COLUMNS = ("accuracy", "sensitivity", "specificity", "auc")


@dataclass(frozen=True)
class SuiteOptions:
    """Tunable knobs shared by every cell of a suite run; the defaults are
    the documented method defaults."""
    v0: float = DEFAULT_V0
    n_trees: int = DEFAULT_N_TREES
    mtry: int | None = None
    min_node_size: int = 5
    min_impurity_decrease: float = 0.01
    max_depth: int = 5
    criterion: str = "gini"
    weighting: str = "posterior_softmax"
    threshold_rule: str = "youden"
    full_data_selection: bool = False


@dataclass
class CellResult:
    scheme: str
    horizon: str
    method: str
    seed: int
    report: EvaluationReport | None = None
    selected: tuple[str, ...] = ()
    detail: dict = field(default_factory=dict)
    error: str | None = None
    error_kind: str | None = None

    @property
    def ok(self):
        return self.error is None


@dataclass
class SuiteReport:
    cells: dict[tuple[str, str, str], CellResult]
    schemes: tuple[str, ...]
    horizons: tuple[str, ...]
    methods: tuple[str, ...]
    seed: int
    options: SuiteOptions

    @property
    def n_cells(self):
        return len(self.cells)

    def cell(self, scheme, horizon, method) -> CellResult:
        return self.cells[(scheme, horizon, method)]

    def failures(self) -> list[CellResult]:
        return [c for c in self.cells.values() if not c.ok]

    def error_count(self, kind: str) -> int:
        return sum(1 for c in self.cells.values() if c.error_kind == kind)


class _FixedSubsetLogit(BaseEstimator, ClassifierMixin):
    """MAP logistic refit on a frozen feature subset (full-data-selection
    fidelity mode: per fold only the coefficients are re-estimated)."""

    def __init__(self, columns=(), v0=DEFAULT_V0):
        self.columns = columns
        self.v0 = v0

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        sub = X[:, list(self.columns)] if self.columns else None
        self.fit_ = fit_map((sub, y), v0=self.v0)
        self.classes_ = np.array([0, 1])
        return self

    def _project(self, X):
        X = np.asarray(X, dtype=np.float64)
        return X[:, list(self.columns)] if self.columns else X

    def predict_proba(self, X):
        p = predict_prob_matrix(self.fit_, self._project(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(np.int64)


class _FrozenAverageLogit(BaseEstimator, ClassifierMixin):
    """Model average with frozen member subsets and frozen weights
    (full-data-selection fidelity mode for the averaging method)."""

    def __init__(self, member_columns=(), weights=(), v0=DEFAULT_V0):
        self.member_columns = member_columns
        self.weights = weights
        self.v0 = v0

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        self.fits_ = []
        for cols in self.member_columns:
            sub = X[:, list(cols)] if cols else None
            self.fits_.append(fit_map((sub, y), v0=self.v0))
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        X = np.asarray(X, dtype=np.float64)
        p = np.zeros(X.shape[0])
        for cols, w, fit in zip(self.member_columns, self.weights, self.fits_):
            for i, row in enumerate(X):
                p[i] += w * predict_prob(fit, row[list(cols)])
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(np.int64)


def cell_seed(seed: int, scheme: str, horizon: str, method: str) -> int:
    """Deterministic per-cell seed from the suite seed and the cell's
    canonical coordinates."""
    si = SCHEMES.index(scheme)
    hi = HORIZONS.index(horizon)
    mi = METHODS.index(method)
    return int(np.random.SeedSequence(
        entropy=seed, spawn_key=(si, hi, mi)).generate_state(1)[0])


def _make_estimator(method: str, options: SuiteOptions, seed: int):
    if method == "dt":
        return TreeClassifier(
            min_node_size=options.min_node_size,
            min_impurity_decrease=options.min_impurity_decrease,
            max_depth=options.max_depth, criterion=options.criterion)
    if method == "rf":
        return ForestClassifier(
            n_trees=options.n_trees, mtry=options.mtry,
            min_node_size=options.min_node_size,
            min_impurity_decrease=options.min_impurity_decrease,
            max_depth=options.max_depth, criterion=options.criterion,
            seed=seed)
    if method == "logit":
        return ForwardSelectClassifier(v0=options.v0)
    if method == "bma":
        return BMAClassifier(v0=options.v0, weighting=options.weighting)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _selected_variables(method: str, view: FeatureView,
                        options: SuiteOptions, seed: int,
                        trace=None) -> tuple[tuple[str, ...], dict]:
    """Full-data variable report for one cell (the per-fold fits inside
    cross-validation are separate unless full_data_selection is on)."""
    names = list(view.feature_names)
    if method == "dt":
        tree = fit_tree(view, TreeConfig(
            options.min_node_size, options.min_impurity_decrease,
            options.max_depth, options.criterion))
        used, stack = [], [tree]
        while stack:
            node = stack.pop()
            if node.rule is not None:
                f = names[node.rule.feature_index]
                if f not in used:
                    used.append(f)
                stack.append(node.right)
                stack.append(node.left)
        return tuple(used), {}
    if method == "rf":
        est = _make_estimator("rf", options, seed).fit(view.matrix, view.labels)
        from .forest import feature_importance
        imp = feature_importance(est.forest_)
        imp = {n: imp[f"feature_{i}"] for i, n in enumerate(names)}
        ranked = sorted(imp, key=lambda n: (-imp[n], n))
        return tuple(n for n in ranked if imp[n] > 0.0), {"importance": imp}
    xyn = (view.matrix, view.labels, tuple(names))
    if trace is None:
        trace = forward_select(xyn, v0=options.v0)
    if method == "logit":
        return trace.preferred_model, {
            "lml": trace.fits[trace.preferred_model].lml}
    # bma: the median-probability summary (inclusion probability > 0.5)
    avg = bma_average(trace, xyn, weighting=options.weighting, v0=options.v0)
    probs = inclusion_probabilities(avg)
    chosen = sorted((n for n in names if probs[n] > 0.5),
                    key=lambda n: (-probs[n], n))
    return tuple(chosen), {"inclusion": probs,
                           "weights": [m["weight"] for m in avg.members]}


def run_cell(view: FeatureView, method: str, options: SuiteOptions,
             seed: int) -> CellResult:
    """Evaluate one cell: LOOCV scores, threshold choice, metrics, ROC and
    the full-data selected-variables report."""
    out = CellResult(scheme=view.scheme, horizon=view.horizon,
                     method=method, seed=seed)
    try:
        trace = None
        if method in ("logit", "bma") and options.full_data_selection:
            xyn = (view.matrix, view.labels, tuple(view.feature_names))
            trace = forward_select(xyn, v0=options.v0)
            cols = {f: i for i, f in enumerate(view.feature_names)}
            if method == "logit":
                est = _FixedSubsetLogit(
                    columns=tuple(cols[f] for f in trace.preferred_model),
                    v0=options.v0)
            else:
                avg = bma_average(trace, xyn, weighting=options.weighting,
                                  v0=options.v0)
                est = _FrozenAverageLogit(
                    member_columns=tuple(m["columns"] for m in avg.members),
                    weights=tuple(m["weight"] for m in avg.members),
                    v0=options.v0)
        else:
            est = _make_estimator(method, options, seed)
        scores = loocv_scores(view, est, seed=seed)
        out.report = evaluate_scores(scores, rule=options.threshold_rule)
        out.selected, out.detail = _selected_variables(
            method, view, options, seed, trace=trace)
    except Exception as exc:  # noqa: BLE001 - cell isolation is the contract
        out.error = str(exc)
        out.error_kind = type(exc).__name__
    return out


def run_scheme_suite(dataset: CohortDataset, methods, horizons,
                     schemes=None, seed: int = 0,
                     options: SuiteOptions = SuiteOptions()) -> SuiteReport:
    """Run the grid. ``methods``/``horizons``/``schemes`` are sets (or any
    iterables); cells run in canonical order (scheme, then horizon, then
    method) with per-cell seeds independent of that order."""
    methods = tuple(m for m in METHODS if m in set(methods))
    horizons = tuple(h for h in HORIZONS if h in set(horizons))
    schemes = (SCHEMES if schemes is None
               else tuple(s for s in SCHEMES if s in set(schemes)))
    if not methods or not horizons or not schemes:
        raise ValueError("methods, horizons, and schemes must be non-empty")

    cells = {}
    for scheme in schemes:
        for horizon in horizons:
            view = build_view(dataset, scheme, horizon)
            for method in methods:
                s = cell_seed(seed, scheme, horizon, method)
                cells[(scheme, horizon, method)] = run_cell(
                    view, method, options, s)
    return SuiteReport(cells=cells, schemes=schemes, horizons=horizons,
                       methods=methods, seed=seed, options=options)


def _fmt_metric(value: float) -> str:
    return "NA" if math.isnan(value) else f"{value:.6f}"


def write_metrics_grid(suite: SuiteReport, horizon: str, fh,
                       header_comment=None):
    """Accuracy/sensitivity/specificity/AUC grid for one horizon: one row
    per scheme, one column group per metric x method. Failed cells render
    as ERROR."""
    if header_comment is not None:
        fh.write(f"# {header_comment}\n")
    cols = [f"{metric}_{method}" for metric in _METRIC_COLUMNS
            for method in suite.methods]
    fh.write("scheme," + ",".join(cols) + "\n")
    for scheme in suite.schemes:
        row = [scheme]
        for metric in _METRIC_COLUMNS:
            for method in suite.methods:
                cell = suite.cells[(scheme, horizon, method)]
                if not cell.ok:
                    row.append("ERROR")
                elif metric == "auc":
                    row.append(_fmt_metric(cell.report.roc.auc))
                else:
                    row.append(_fmt_metric(getattr(cell.report, metric)))
        fh.write(",".join(row) + "\n")


def write_variables_grid(suite: SuiteReport, fh, header_comment=None):
    """Selected-variables grid: one row per cell, the variable names joined
    with ';'. Failed cells carry their error kind in the status column."""
    if header_comment is not None:
        fh.write(f"# {header_comment}\n")
    fh.write("scheme,horizon,method,status,selected\n")
    for scheme in suite.schemes:
        for horizon in suite.horizons:
            for method in suite.methods:
                cell = suite.cells[(scheme, horizon, method)]
                status = "ok" if cell.ok else f"error:{cell.error_kind}"
                fh.write(f"{scheme},{horizon},{method},{status},"
                         f"{';'.join(cell.selected)}\n")
