"""Descriptive hypothesis tests: Mann-Whitney-Wilcoxon, chi-square 2x2, and
the Table-2-style cohort summary.

``mann_whitney`` returns the U statistic of the first group from midrank
sums. Small samples (all subset assignments enumerable, at most 20000) get an
exact two-sided p by dynamic programming over the scaled rank multiset;
larger samples use the normal approximation with tie-corrected variance and a
continuity correction. ``chi_square_2x2`` is the uncorrected Pearson statistic
with the p-value from an in-package series/continued-fraction implementation
of the regularized incomplete gamma (no Yates correction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cohort import CohortDataset, aggregate_specs, derive_aggregates
from .errors import ZeroMarginal

_EXACT_LIMIT = 20000


# ---- Mann-Whitney-Wilcoxon --------------------------------------------------

def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled))
    sv = pooled[order]
    i = 0
    while i < len(sv):
        j = i
        while j + 1 < len(sv) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_two_sided_p(scaled_ranks, m, dev2_obs):
    """P(|2U - mn| >= dev2_obs) by DP over subsets of size m.

    scaled_ranks are midranks*2 (integers), so 2U = sum(chosen) - m(m+1) is
    integral and the comparison is exact.
    """
    n_total = len(scaled_ranks)
    smax = int(sum(scaled_ranks))
    # dp[j][s]: ways to choose j values with scaled-rank sum s
    dp = [[0] * (smax + 1) for _ in range(m + 1)]
    dp[0][0] = 1
    for r in scaled_ranks:
        r = int(r)
        for j in range(min(m, n_total), 0, -1):
            row_prev = dp[j - 1]
            row = dp[j]
            for s in range(smax - r, -1, -1):
                if row_prev[s]:
                    row[s + r] += row_prev[s]
    mn = m * (n_total - m)
    offset = m * (m + 1)
    hits = 0
    total = 0
    for s, ways in enumerate(dp[m]):
        if not ways:
            continue
        total += ways
        if abs((s - offset) - mn) >= dev2_obs:
            hits += ways
    return hits / total


def mann_whitney(group_a, group_b, method: str = "auto") -> tuple[float, float]:
    """Two-sided Mann-Whitney-Wilcoxon test.

    Returns (U, p) where U is the first group's statistic, computed from
    midrank sums. ``method``: "exact" enumerates rank assignments, "normal"
    forces the tie-corrected normal approximation with continuity correction,
    "auto" picks exact when the assignment count is at most 20000.
    Identical values across both groups degenerate to p = 1.
    """
    a = np.asarray(group_a, dtype=np.float64)
    b = np.asarray(group_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be non-empty")
    m, n = a.size, b.size
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    u_a = float(ranks[:m].sum() - m * (m + 1) / 2.0)
    mu = m * n / 2.0

    u_vals, counts = np.unique(pooled, return_counts=True)
    if len(u_vals) == 1:
        return u_a, 1.0  # degenerate variance: every value tied

    if method == "auto":
        method = "exact" if math.comb(m + n, m) <= _EXACT_LIMIT else "normal"

    if method == "exact":
        scaled = np.rint(2.0 * ranks).astype(int)
        dev2 = abs(int(round(2 * u_a)) - m * n)
        p = _exact_two_sided_p(scaled.tolist(), m, dev2)
        return u_a, p

    if method != "normal":
        raise ValueError(f"unknown method {method!r}")
    big_n = m + n
    tie_term = float(np.sum(counts.astype(np.float64) ** 3 - counts))
    var = m * n / 12.0 * ((big_n + 1) - tie_term / (big_n * (big_n - 1)))
    if var <= 0:
        return u_a, 1.0
    z = max(abs(u_a - mu) - 0.5, 0.0) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0))
    return u_a, min(p, 1.0)


# ---- chi-square (2x2, df=1) -------------------------------------------------

def _gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) by the classic series /
    continued-fraction pair (Lentz's method for the fraction)."""
    if x < 0 or a <= 0:
        raise ValueError("require x >= 0 and a > 0")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        # series for P(a,x); Q = 1 - P
        ap = a
        summand = 1.0 / a
        total = summand
        for _ in range(500):
            ap += 1.0
            summand *= x / ap
            total += summand
            if abs(summand) < abs(total) * 1e-16:
                break
        p = total * math.exp(-x + a * math.log(x) - math.lgamma(a))
        return 1.0 - p
    # continued fraction for Q(a,x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def chi_square_2x2(table) -> tuple[float, float]:
    """Uncorrected Pearson chi-square for a 2x2 table ((a, b), (c, d)); the
    p-value uses one degree of freedom. Raises ZeroMarginal when any row or
    column sums to zero."""
    (a, b), (c, d) = table
    a, b, c, d = float(a), float(b), float(c), float(d)
    n = a + b + c + d
    r1, r2, c1, c2 = a + b, c + d, a + c, b + d
    if min(r1, r2, c1, c2) <= 0:
        raise ZeroMarginal("a row or column marginal is zero")
    stat = n * (a * d - b * c) ** 2 / (r1 * r2 * c1 * c2)
    p = _gamma_q(0.5, stat / 2.0)
    return stat, min(max(p, 0.0), 1.0)


# ---- Table-2-style cohort summary -------------------------------------------

@dataclass
class SummaryRow:
    variable: str
    kind: str  # "categorical" | "quantitative"
    fallers: dict
    nonfallers: dict
    p_value: float | None
    note: str | None = None


@dataclass
class CohortSummary:
    horizon: str
    n_fallers: int
    n_nonfallers: int
    rows: list[SummaryRow]

    def to_csv(self, fh, header_comment=None):
        if header_comment is not None:
            fh.write(f"# {header_comment}\n")
        fh.write("variable,level,fallers,nonfallers,p,note\n")
        for row in self.rows:
            p = "" if row.p_value is None else repr(row.p_value)
            note = row.note or ""
            if row.kind == "categorical":
                levels = sorted(row.fallers["counts"])
                for i, lev in enumerate(levels):
                    fa = f"{row.fallers['counts'][lev]} ({row.fallers['percents'][lev]:.1f}%)"
                    nf = f"{row.nonfallers['counts'][lev]} ({row.nonfallers['percents'][lev]:.1f}%)"
                    fh.write(f"{row.variable},{lev},{fa},{nf},"
                             f"{p if i == 0 else ''},{note if i == 0 else ''}\n")
            else:
                fa = f"{row.fallers['mean']:.2f} ({row.fallers['sd']:.2f})"
                nf = f"{row.nonfallers['mean']:.2f} ({row.nonfallers['sd']:.2f})"
                fh.write(f"{row.variable},,{fa},{nf},{p},{note}\n")


def _group_stats(values):
    v = np.asarray(values, dtype=np.float64)
    sd = float(np.std(v, ddof=1)) if v.size > 1 else float("nan")
    return {"mean": float(np.mean(v)) if v.size else float("nan"), "sd": sd}


def describe_cohort(dataset: CohortDataset, horizon: str) -> CohortSummary:
    """Per-variable faller/non-faller comparison: counts (%) with chi-square
    for the categorical variables, mean (sd) with Mann-Whitney-Wilcoxon for
    the quantitative ones. Percentages are within-group (column) shares."""
    label = (lambda r: r.fell_6m) if horizon == "m6" else (lambda r: r.fell_12m)
    fall = [r for r in dataset.records if label(r) == 1]
    nofall = [r for r in dataset.records if label(r) == 0]
    rows = []

    def categorical(name, getter, levels):
        cells = {}
        for gname, grp in (("fallers", fall), ("nonfallers", nofall)):
            counts = {lev: sum(1 for r in grp if getter(r) == lev) for lev in levels}
            total = max(len(grp), 1)
            cells[gname] = {
                "counts": counts,
                "percents": {lev: 100.0 * c / total for lev, c in counts.items()},
            }
        table = ((cells["fallers"]["counts"][levels[0]],
                  cells["nonfallers"]["counts"][levels[0]]),
                 (cells["fallers"]["counts"][levels[1]],
                  cells["nonfallers"]["counts"][levels[1]]))
        try:
            _, p = chi_square_2x2(table)
            note = None
        except ZeroMarginal as exc:
            p, note = None, f"ZeroMarginal: {exc}"
        rows.append(SummaryRow(name, "categorical", cells["fallers"],
                               cells["nonfallers"], p, note))

    def quantitative(name, values_fall, values_nofall):
        stats_f = _group_stats(values_fall)
        stats_n = _group_stats(values_nofall)
        if len(values_fall) == 0 or len(values_nofall) == 0:
            p, note = None, "empty group"
        else:
            _, p = mann_whitney(values_fall, values_nofall)
            note = None
        rows.append(SummaryRow(name, "quantitative", stats_f, stats_n, p, note))

    categorical("gender", lambda r: r.gender, ("male", "female"))
    categorical("living", lambda r: r.living, ("alone", "with_family"))
    quantitative("age", [r.age_years for r in fall], [r.age_years for r in nofall])
    quantitative("duration", [r.duration_years for r in fall],
                 [r.duration_years for r in nofall])
    quantitative("previous_falls", [r.previous_falls for r in fall],
                 [r.previous_falls for r in nofall])
    quantitative("hy", [r.hy_score for r in fall], [r.hy_score for r in nofall])

    specs = aggregate_specs(dataset.schema)
    agg_f = [derive_aggregates(r, specs) for r in fall]
    agg_n = [derive_aggregates(r, specs) for r in nofall]
    for spec in specs:
        quantitative(spec.name, [a[spec.name] for a in agg_f],
                     [a[spec.name] for a in agg_n])

    return CohortSummary(horizon=horizon, n_fallers=len(fall),
                         n_nonfallers=len(nofall), rows=rows)
