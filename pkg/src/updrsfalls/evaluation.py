"""Leave-one-out cross-validation, confusion metrics, threshold selection,
ROC curves, and AUC.

Classification uses strict inequality (score > threshold). Undefined ratios
(0/0) are reported as NaN, never as 0. Threshold candidates are the midpoints
between adjacent distinct scores plus -inf/+inf sentinels, which makes the
Youden-J optimum well-defined on finite data; J ties break to the smallest
candidate. AUC is the concordance probability over (faller, non-faller)
pairs, counting ties as 1/2 — identical to trapezoid integration of the
swept ROC curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import clone

from ._validation import check_both_classes
from .cohort import FeatureView
from .errors import SingleClass


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class ConfusionMetrics:
    counts: ConfusionCounts
    accuracy: float
    sensitivity: float
    specificity: float


@dataclass
class RocCurve:
    points: list[tuple[float, float, float]]  # (fpr, tpr, threshold), thr desc
    auc: float


@dataclass
class EvaluationReport:
    per_participant: list[tuple[str, int, float, int]]  # id, true, score, predicted
    counts: ConfusionCounts
    accuracy: float
    sensitivity: float
    specificity: float
    roc: RocCurve
    chosen_threshold: float

    def write_csv(self, fh, header_comment=None):
        if header_comment is not None:
            fh.write(f"# {header_comment}\n")
        fh.write(f"threshold,{self.chosen_threshold!r}\n")
        fh.write(f"accuracy,{self.accuracy!r}\n")
        fh.write(f"sensitivity,{self.sensitivity!r}\n")
        fh.write(f"specificity,{self.specificity!r}\n")
        fh.write(f"auc,{self.roc.auc!r}\n")
        c = self.counts
        fh.write(f"tp,{c.tp}\nfp,{c.fp}\ntn,{c.tn}\nfn,{c.fn}\n")
        fh.write("participant_id,true_label,score,predicted\n")
        for pid, true, score, pred in self.per_participant:
            fh.write(f"{pid},{true},{score!r},{pred}\n")


def _scores_to_arrays(scores):
    """Accepts [(id, y, s), ...], [(y, s), ...], or (y_array, s_array)."""
    if isinstance(scores, tuple) and len(scores) == 2 and not np.isscalar(scores[0]):
        y, s = scores
        ids = [str(i) for i in range(len(y))]
    else:
        rows = list(scores)
        if rows and len(rows[0]) == 3:
            ids = [r[0] for r in rows]
            y = [r[1] for r in rows]
            s = [r[2] for r in rows]
        else:
            ids = [str(i) for i in range(len(rows))]
            y = [r[0] for r in rows]
            s = [r[1] for r in rows]
    return ids, np.asarray(y, dtype=np.int64), np.asarray(s, dtype=np.float64)


def metrics_from_counts(tp, fp, tn, fn) -> tuple[float, float, float]:
    """(accuracy, sensitivity, specificity); 0/0 ratios are NaN."""
    total = tp + fp + tn + fn
    accuracy = (tp + tn) / total if total > 0 else float("nan")
    sensitivity = tp / (tp + fn) if tp + fn > 0 else float("nan")
    specificity = tn / (tn + fp) if tn + fp > 0 else float("nan")
    return accuracy, sensitivity, specificity


def confusion_at(scores, threshold: float) -> ConfusionMetrics:
    """Counts and metrics at one threshold; predicted fall iff
    score > threshold."""
    _, y, s = _scores_to_arrays(scores)
    pred = s > threshold
    tp = int(np.sum((y == 1) & pred))
    fp = int(np.sum((y == 0) & pred))
    tn = int(np.sum((y == 0) & ~pred))
    fn = int(np.sum((y == 1) & ~pred))
    accuracy, sensitivity, specificity = metrics_from_counts(tp, fp, tn, fn)
    return ConfusionMetrics(ConfusionCounts(tp, fp, tn, fn),
                            accuracy, sensitivity, specificity)


def threshold_candidates(scores) -> list[float]:
    """Midpoints between adjacent distinct scores, with -inf/+inf sentinels,
    in ascending order."""
    _, _, s = _scores_to_arrays(scores)
    uniq = np.unique(s)
    mids = [(a + b) / 2.0 for a, b in zip(uniq[:-1], uniq[1:])]
    return [-math.inf] + mids + [math.inf]


def choose_threshold(scores, rule: str = "youden") -> float:
    """Candidate threshold maximizing Youden's J = sensitivity +
    specificity - 1 (rule="youden"), or minimizing |sensitivity -
    specificity| (rule="balance"); ties break to the smallest candidate."""
    _, y, s = _scores_to_arrays(scores)
    if y.min() == y.max():
        raise SingleClass("threshold selection needs both classes")
    best_thr = None
    best_val = -math.inf
    for thr in threshold_candidates(scores):
        m = confusion_at((y, s), thr)
        if rule == "youden":
            val = m.sensitivity + m.specificity - 1.0
        elif rule == "balance":
            val = -abs(m.sensitivity - m.specificity)
        else:
            raise ValueError(f"unknown rule {rule!r}")
        if val > best_val:
            best_val = val
            best_thr = thr
    return best_thr


def roc_and_auc(scores) -> RocCurve:
    """ROC points over all candidate thresholds (descending, so the curve
    starts at (0,0) and ends at (1,1)) and the pairwise-concordance AUC."""
    _, y, s = _scores_to_arrays(scores)
    if y.min() == y.max():
        raise SingleClass("ROC needs both classes")
    points = []
    for thr in reversed(threshold_candidates(scores)):
        m = confusion_at((y, s), thr)
        points.append((1.0 - m.specificity, m.sensitivity, thr))
    pos = s[y == 1]
    neg = s[y == 0]
    greater = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    auc = (greater + 0.5 * ties) / (len(pos) * len(neg))
    return RocCurve(points=points, auc=float(auc))


def trapezoid_auc(curve: RocCurve) -> float:
    """Trapezoid integration of the swept curve (oracle identity for the
    concordance AUC)."""
    pts = sorted((fpr, tpr) for fpr, tpr, _ in curve.points)
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def loocv_scores(view, fitter, seed: int | None = None):
    """Leave-one-out scores: for each row, clone and fit ``fitter`` (an
    estimator with fit/predict_proba) on the other rows and score the
    held-out one. Per-fold seeds derive from ``seed`` so fold order never
    matters. Fit errors are re-raised annotated with the fold index.
    """
    if isinstance(view, FeatureView):
        X, y, ids = view.matrix, view.labels, view.participant_ids
    else:
        X, y = view
        X = np.asarray(X, dtype=np.float64)
        ids = [str(i) for i in range(len(y))]
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    if n < 2:
        raise ValueError("leave-one-out needs at least 2 rows")

    out = []
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        mask[i] = False
        est = clone(fitter)
        if seed is not None and "seed" in est.get_params():
            fold_seed = int(np.random.SeedSequence(
                entropy=seed, spawn_key=(i,)).generate_state(1)[0])
            est.set_params(seed=fold_seed)
        try:
            est.fit(X[mask], y[mask])
            score = float(est.predict_proba(X[i:i + 1])[0, 1])
        except Exception as exc:
            exc.args = (f"fold {i} (participant {ids[i]}): {exc}",)
            raise
        finally:
            mask[i] = True
        out.append((ids[i], int(y[i]), score))
    return out


def write_roc_csv(roc: RocCurve, fh, header_comment=None):
    """Plot-ready ROC export: one `threshold,fpr,tpr` row per swept point,
    threshold descending."""
    if header_comment is not None:
        fh.write(f"# {header_comment}\n")
    fh.write("threshold,fpr,tpr\n")
    for fpr, tpr, thr in roc.points:
        fh.write(f"{thr!r},{fpr!r},{tpr!r}\n")


def evaluate_scores(scores, threshold: float | None = None,
                    rule: str = "youden") -> EvaluationReport:
    """Full report from per-participant scores; picks the threshold by
    ``rule`` unless one is supplied."""
    ids, y, s = _scores_to_arrays(scores)
    check_both_classes(y)
    thr = choose_threshold((y, s), rule=rule) if threshold is None else threshold
    m = confusion_at((y, s), thr)
    roc = roc_and_auc((y, s))
    per = [(pid, int(t), float(sc), int(sc > thr))
           for pid, t, sc in zip(ids, y, s)]
    return EvaluationReport(per_participant=per, counts=m.counts,
                            accuracy=m.accuracy, sensitivity=m.sensitivity,
                            specificity=m.specificity, roc=roc,
                            chosen_threshold=thr)
