"""Forward variable selection by log marginal likelihood, and Bayesian model
averaging over every model the selection visits.

Selection starts from the intercept-only model and greedily adds the feature
whose inclusion yields the highest lml, as long as that lml beats the current
model's; candidate fits that fail to converge are skipped with a warning.
lml ties within 1e-9 break to the lexicographically smaller feature name.

The default BMA weighting is the softmax of lml values (posterior model
probabilities under a uniform model prior). The literal lml-ratio weighting
``w_m = lml_m / sum_k lml_k`` is kept behind ``weighting="lml_ratio"`` for
fidelity experiments; it is rejected with NegativeWeight whenever mixed lml
signs would make a weight negative.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_labels, as_matrix, as_row
from .cohort import FeatureView
from .errors import NegativeWeight
from .logistic import DEFAULT_V0, LogitFit, LogitModel, fit_map, predict_prob

logger = logging.getLogger(__name__)

_TIE_TOL = 1e-9


@dataclass
class SelectionTrace:
    steps: list[tuple[str, float]]  # (added_feature, lml_after)
    visited_models: list[tuple[tuple[str, ...], float]]
    preferred_model: tuple[str, ...]
    fits: dict[tuple[str, ...], LogitFit] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


@dataclass
class ModelAverage:
    members: list[dict]  # {"features", "fit", "weight", "columns"}
    weighting: str
    feature_names: tuple[str, ...]


def _as_xy_names(view):
    if isinstance(view, FeatureView):
        return view.matrix, view.labels, tuple(view.feature_names)
    X, y, names = view
    return as_matrix(X), y, tuple(names)


_TRACE_CACHE: dict = {}
_TRACE_CACHE_MAX = 4096


def forward_select(view, v0: float = DEFAULT_V0) -> SelectionTrace:
    """Greedy lml climb; records every evaluated (feature-set, lml) pair.

    Selection is a deterministic pure function of (matrix, labels, feature
    names, v0), so results are memoized on that key; leave-one-out loops
    that fit several selection-based methods on identical folds reuse one
    trace per fold. Non-convergence warnings are logged on the first
    computation only (they stay recorded in the trace's ``warnings``).
    """
    X, y, names = _as_xy_names(view)
    key = (X.tobytes(), np.asarray(y).tobytes(), names, float(v0))
    cached = _TRACE_CACHE.get(key)
    if cached is not None:
        return cached
    trace = _forward_select_uncached(X, y, names, v0)
    if len(_TRACE_CACHE) >= _TRACE_CACHE_MAX:
        _TRACE_CACHE.clear()
    _TRACE_CACHE[key] = trace
    return trace


def _forward_select_uncached(X, y, names, v0) -> SelectionTrace:
    cols = {f: i for i, f in enumerate(names)}

    def fit_subset(subset):
        sub = X[:, [cols[f] for f in subset]] if subset else None
        return fit_map((sub, y), model=LogitModel(feature_names=subset, v0=v0))

    current: tuple[str, ...] = ()
    fit0 = fit_subset(current)
    visited = [(current, fit0.lml)]
    fits = {current: fit0}
    steps = []
    warnings = []
    current_lml = fit0.lml

    while True:
        best_name, best_lml, best_fit = None, None, None
        for f in names:
            if f in current:
                continue
            subset = current + (f,)
            fit = fit_subset(subset)
            if not fit.converged:
                msg = f"candidate {subset} skipped: fit did not converge"
                warnings.append(msg)
                logger.warning(msg)
                continue
            visited.append((subset, fit.lml))
            fits[subset] = fit
            better = (best_lml is None or fit.lml > best_lml + _TIE_TOL
                      or (abs(fit.lml - best_lml) <= _TIE_TOL and f < best_name))
            if better:
                best_name, best_lml, best_fit = f, fit.lml, fit
        if best_name is None or best_lml <= current_lml:
            break
        current = current + (best_name,)
        current_lml = best_lml
        steps.append((best_name, best_lml))

    return SelectionTrace(steps=steps, visited_models=visited,
                          preferred_model=current, fits=fits, warnings=warnings)


def _softmax_weights(lmls):
    a = np.asarray(lmls, dtype=np.float64)
    w = np.exp(a - a.max())
    return w / w.sum()


def _ratio_weights(lmls):
    a = np.asarray(lmls, dtype=np.float64)
    w = a / a.sum()
    if np.any(w < 0):
        raise NegativeWeight(
            "lml-ratio weights are negative for sign-mixed lml values")
    return w


def bma_average(trace: SelectionTrace, view,
                weighting: str = "posterior_softmax",
                v0: float = DEFAULT_V0) -> ModelAverage:
    """Average over the distinct models visited during selection (the
    intercept-only model included)."""
    if weighting not in ("posterior_softmax", "lml_ratio"):
        raise ValueError(f"unknown weighting {weighting!r}")
    X, y, names = _as_xy_names(view)
    cols = {f: i for i, f in enumerate(names)}

    subsets = []
    lmls = []
    seen = set()
    for subset, lml in trace.visited_models:
        if subset in seen:
            continue
        seen.add(subset)
        subsets.append(subset)
        lmls.append(lml)

    weights = (_softmax_weights(lmls) if weighting == "posterior_softmax"
               else _ratio_weights(lmls))

    members = []
    for subset, w in zip(subsets, weights):
        fit = trace.fits.get(subset)
        if fit is None:
            sub = X[:, [cols[f] for f in subset]] if subset else None
            fit = fit_map((sub, y),
                          model=LogitModel(feature_names=subset, v0=v0))
        members.append({
            "features": subset,
            "fit": fit,
            "weight": float(w),
            "columns": tuple(cols[f] for f in subset),
        })
    return ModelAverage(members=members, weighting=weighting,
                        feature_names=names)


def bma_predict(avg: ModelAverage, row) -> float:
    """Weighted average of member predictions; each member projects the row
    onto its own features."""
    row = as_row(row, len(avg.feature_names))
    total = 0.0
    for m in avg.members:
        sub = row[list(m["columns"])]
        total += m["weight"] * predict_prob(m["fit"], sub)
    return total


def inclusion_probabilities(avg: ModelAverage) -> dict[str, float]:
    """Per-feature sum of the weights of the member models containing it."""
    out = {f: 0.0 for f in avg.feature_names}
    for m in avg.members:
        for f in m["features"]:
            out[f] += m["weight"]
    return out


def write_membership_table(avg: ModelAverage, fh, header_comment=None):
    """Membership table: rows = features (0/1 per member model), final row =
    normalized weights. Columns are the member models in visit order."""
    if header_comment is not None:
        fh.write(f"# {header_comment}\n")
    labels = ["m" + str(i + 1) for i in range(len(avg.members))]
    fh.write("feature," + ",".join(labels) + "\n")
    involved = [f for f in avg.feature_names
                if any(f in m["features"] for m in avg.members)]
    for f in involved:
        cells = ["1" if f in m["features"] else "0" for m in avg.members]
        fh.write(f + "," + ",".join(cells) + "\n")
    fh.write("weight," + ",".join(repr(m["weight"]) for m in avg.members) + "\n")
