"""Independent reference implementations used by the tests.

Every function here recomputes, by a deliberately different method
(exhaustive enumeration, numerical quadrature, golden-section search,
direct double loops), a quantity the library computes with its production
algorithm. Tests compare the two results. Nothing in this module imports
from the package, so agreement between the two routes is meaningful.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import integrate


# ---------------------------------------------------------------------------
# impurity and split enumeration
# ---------------------------------------------------------------------------

def impurity_ref(pos: int, n: int, criterion: str = "gini") -> float:
    """Node impurity from the positive count, in the canonical operation
    order (p = pos/n; gini = 1 - p*p - q*q; entropy in nats, 0*log 0 = 0)."""
    p = pos / n
    q = 1.0 - p
    if criterion == "gini":
        return 1.0 - p * p - q * q
    h = 0.0
    if p > 0.0:
        h -= p * math.log(p)
    if q > 0.0:
        h -= q * math.log(q)
    return h


def enumerate_splits(X, y, min_node_size: int = 1, criterion: str = "gini"):
    """Exhaustively enumerate every admissible (feature, midpoint) split.

    Thresholds are the midpoints of adjacent distinct sorted values of each
    feature; a row goes left iff value < threshold; both children must have
    at least ``min_node_size`` rows. Returns a list of
    (feature_index, threshold, decrease) covering ALL admissible splits,
    with the decrease computed as parent - (nl*gl + nr*gr)/n.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = len(y)
    pos = int(np.sum(y))
    parent = impurity_ref(pos, n, criterion)
    out = []
    for f in range(X.shape[1]):
        vals = np.sort(np.unique(X[:, f]))
        for v0, v1 in zip(vals[:-1], vals[1:]):
            thr = (float(v0) + float(v1)) / 2.0
            left = X[:, f] < thr
            nl = int(np.sum(left))
            nr = n - nl
            if nl < min_node_size or nr < min_node_size:
                continue
            posl = int(np.sum(y[left]))
            gl = impurity_ref(posl, nl, criterion)
            gr = impurity_ref(pos - posl, nr, criterion)
            dec = parent - (nl * gl + nr * gr) / n
            out.append((f, thr, dec))
    return out


def best_split_ref(X, y, min_node_size: int = 1,
                   min_impurity_decrease: float = 0.0,
                   criterion: str = "gini"):
    """Argmax over the exhaustive enumeration under the tie-break
    'lowest feature index, then lowest threshold' (realized by scanning in
    that order and replacing only on a strictly larger decrease).
    Returns (feature, threshold, decrease) or None."""
    best = None
    best_dec = -1.0
    for f, thr, dec in enumerate_splits(X, y, min_node_size, criterion):
        if dec > best_dec:
            best = (f, thr, dec)
            best_dec = dec
    if best is None or best[2] < min_impurity_decrease:
        return None
    return best


# ---------------------------------------------------------------------------
# logistic posterior: independent log joint, maximizer, quadrature evidence
# ---------------------------------------------------------------------------

def log_joint_ref(beta, X1, y, v0: float) -> float:
    """log p(y | beta) + log N(beta | 0, v0 I), both terms in full, computed
    with logaddexp stabilization (a different stabilization route than the
    library's)."""
    beta = np.asarray(beta, dtype=np.float64)
    X1 = np.asarray(X1, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    eta = X1 @ beta
    # log sigma(eta) = -log(1+e^-eta); log(1 - sigma(eta)) = -log(1+e^eta)
    loglik = float(np.sum(y * (-np.logaddexp(0.0, -eta))
                          + (1.0 - y) * (-np.logaddexp(0.0, eta))))
    d = beta.shape[0]
    logprior = (-0.5 * d * math.log(2.0 * math.pi * v0)
                - 0.5 * float(beta @ beta) / v0)
    return loglik + logprior


def fd_gradient(f, beta, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    beta = np.asarray(beta, dtype=np.float64)
    g = np.zeros_like(beta)
    for j in range(beta.shape[0]):
        e = np.zeros_like(beta)
        e[j] = h
        g[j] = (f(beta + e) - f(beta - e)) / (2.0 * h)
    return g


def golden_max(f, lo: float, hi: float, iters: int = 200) -> float:
    """Golden-section maximizer of a unimodal scalar function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def lml_quad_1d(X1, y, v0: float) -> float:
    """log ∫ L(beta)·N(beta|0,v0) dbeta for a one-column design, by adaptive
    quadrature of the shifted integrand exp(g(b) - M)."""
    X1 = np.asarray(X1, dtype=np.float64)
    assert X1.ndim == 2 and X1.shape[1] == 1
    g = lambda b: log_joint_ref(np.array([b]), X1, y, v0)
    half = 40.0 * math.sqrt(max(v0, 1.0))
    grid = np.linspace(-half, half, 4001)
    b0 = grid[int(np.argmax([g(b) for b in grid]))]
    mode = golden_max(g, b0 - half / 100.0, b0 + half / 100.0)
    M = g(mode)
    f = lambda b: math.exp(g(b) - M)
    left, _ = integrate.quad(f, -np.inf, mode, limit=400)
    right, _ = integrate.quad(f, mode, np.inf, limit=400)
    return M + math.log(left + right)


def lml_grid_2d(X1, y, v0: float, lo: float = -10.0, hi: float = 10.0,
                k: int = 801) -> float:
    """log evidence for a two-column design by tensor-grid trapezoid
    quadrature over [lo, hi]^2 (valid when the integrand's mass lies well
    inside the box, e.g. small v0)."""
    X1 = np.asarray(X1, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    assert X1.shape[1] == 2
    b0 = np.linspace(lo, hi, k)
    b1 = np.linspace(lo, hi, k)
    lp = np.zeros((k, k))
    for i in range(X1.shape[0]):
        eta = X1[i, 0] * b0[:, None] + X1[i, 1] * b1[None, :]
        lp += (y[i] * (-np.logaddexp(0.0, -eta))
               + (1.0 - y[i]) * (-np.logaddexp(0.0, eta)))
    lp += (-math.log(2.0 * math.pi * v0)
           - (b0[:, None] ** 2 + b1[None, :] ** 2) / (2.0 * v0))
    M = float(np.max(lp))
    inner = np.trapezoid(np.exp(lp - M), b1, axis=1)
    val = float(np.trapezoid(inner, b0))
    return M + math.log(val)


# ---------------------------------------------------------------------------
# rank tests
# ---------------------------------------------------------------------------

def mwu_exact_ref(a, b) -> tuple[float, float]:
    """U statistic for group a (from midrank sums) and the exact two-sided
    p-value P(|U - mn/2| >= |U_obs - mn/2|) by enumerating every assignment
    of the pooled midranks to group a (itertools.combinations)."""
    a = list(map(float, a))
    b = list(map(float, b))
    m, n = len(a), len(b)
    pooled = np.array(a + b, dtype=np.float64)
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(m + n)
    i = 0
    while i < m + n:
        j = i
        while j + 1 < m + n and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    # doubled ranks are integers even with midrank ties
    r2 = np.rint(2.0 * ranks).astype(np.int64)
    u2_obs = int(np.sum(r2[:m])) - m * (m + 1)   # = 2*U_a
    dev_obs = abs(u2_obs - m * n)                # = |2U - mn|, scaled dev
    hits = 0
    total = 0
    for combo in itertools.combinations(range(m + n), m):
        u2 = int(sum(r2[list(combo)])) - m * (m + 1)
        if abs(u2 - m * n) >= dev_obs:
            hits += 1
        total += 1
    return u2_obs / 2.0, hits / total


def chi2_stat_ref(table) -> float:
    """Uncorrected Pearson statistic for a 2x2 table via the closed form
    n·(ad - bc)^2 / (r1·r2·c1·c2)."""
    (a, b), (c, d) = table
    n = a + b + c + d
    return (n * (a * d - b * c) ** 2
            / ((a + b) * (c + d) * (a + c) * (b + d)))


def chi2_tail_ref(stat: float) -> float:
    """P(X >= stat) for X ~ chi-square(1) by numerical integration of the
    density x^(-1/2) e^(-x/2) / sqrt(2π)."""
    if stat <= 0.0:
        return 1.0
    pdf = lambda x: math.exp(-x / 2.0) / math.sqrt(2.0 * math.pi * x)
    val, _ = integrate.quad(pdf, stat, np.inf, limit=400)
    return val


# ---------------------------------------------------------------------------
# classification metrics
# ---------------------------------------------------------------------------

def pairwise_auc_ref(y, s) -> float:
    """AUC as the tie-adjusted concordance fraction over all
    (positive, negative) pairs, by direct double loop."""
    y = np.asarray(y)
    s = np.asarray(s, dtype=np.float64)
    pos = s[y == 1]
    neg = s[y == 0]
    total = 0.0
    for sp in pos:
        for sn in neg:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += 0.5
    return total / (len(pos) * len(neg))


def trapz_auc_ref(fprs, tprs) -> float:
    """Trapezoid area under points sorted by (fpr, tpr) ascending."""
    pts = sorted(zip(fprs, tprs))
    area = 0.0
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return area


def threshold_candidates_ref(scores) -> list[float]:
    """-inf, midpoints of adjacent distinct sorted scores, +inf."""
    vals = sorted(set(float(v) for v in scores))
    mids = [(u + v) / 2.0 for u, v in zip(vals[:-1], vals[1:])]
    return [-math.inf] + mids + [math.inf]


def confusion_ref(y, s, thr: float) -> tuple[int, int, int, int]:
    """(tp, fp, tn, fn) under the strict rule 'predict 1 iff score > thr'."""
    tp = fp = tn = fn = 0
    for yi, si in zip(y, s):
        pred = 1 if si > thr else 0
        if yi == 1 and pred == 1:
            tp += 1
        elif yi == 0 and pred == 1:
            fp += 1
        elif yi == 0 and pred == 0:
            tn += 1
        else:
            fn += 1
    return tp, fp, tn, fn


def best_threshold_ref(y, s, rule: str = "youden") -> tuple[float, float]:
    """Brute-force scan of every candidate threshold; returns
    (threshold, objective). Youden maximizes sens+spec-1; balance minimizes
    |sens-spec| (reported objective is still J). Ties keep the smallest
    threshold (ascending scan, strict improvement)."""
    best_thr = None
    best_obj = None
    best_j = None
    for thr in threshold_candidates_ref(s):
        tp, fp, tn, fn = confusion_ref(y, s, thr)
        sens = tp / (tp + fn) if (tp + fn) else float("nan")
        spec = tn / (tn + fp) if (tn + fp) else float("nan")
        j = sens + spec - 1.0
        obj = j if rule == "youden" else -abs(sens - spec)
        if best_obj is None or obj > best_obj:
            best_obj, best_thr, best_j = obj, thr, j
    return best_thr, best_j


# ---------------------------------------------------------------------------
# synthetic-generator ground truth
# ---------------------------------------------------------------------------

def bayes_accuracy_item(gamma: float, alpha: float, levels: int = 4,
                        rate: float = 0.3) -> float:
    """Exact accuracy of the Bayes classifier for a label drawn Bernoulli
    with logit = alpha + gamma*x, where x ~ Binomial(levels, rate):
    sum_x pmf(x) * max(pi(x), 1 - pi(x))."""
    acc = 0.0
    for x in range(levels + 1):
        pmf = (math.comb(levels, x) * rate ** x
               * (1.0 - rate) ** (levels - x))
        pi = 1.0 / (1.0 + math.exp(-(alpha + gamma * x)))
        acc += pmf * max(pi, 1.0 - pi)
    return acc
