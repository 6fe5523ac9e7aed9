"""Compiled kernels for tree growth.

The split scan iterates candidate features in ascending index order and
thresholds in ascending order with a strict ``>`` comparison on the impurity
decrease, so ties resolve to the lowest feature index and then the lowest
threshold. The decrease expression is kept in one canonical operation order —
``parent - (nl*gl + nr*gr)/n`` with impurity ``1 - p*p - q*q`` — which test
oracles reproduce for exact float equality.

Randomness uses an explicit splitmix64 stream so per-tree results depend only
on the per-tree seed, never on execution order.
"""

import numpy as np
from numba import njit

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def splitmix64(state):
    """Advance one splitmix64 step; returns (new_state, output)."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> np.uint64(30))) * _MIX1) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * _MIX2) & _MASK
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True)
def bootstrap_indices(state, n):
    """Draw n indices with replacement from range(n)."""
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        state, z = splitmix64(state)
        out[i] = np.int64(z % np.uint64(n))
    return state, out


@njit(cache=True)
def _impurity(pos, n, crit):
    p = pos / n
    q = 1.0 - p
    if crit == 0:  # gini
        return 1.0 - p * p - q * q
    # entropy in nats, with 0*log(0) = 0
    h = 0.0
    if p > 0.0:
        h -= p * np.log(p)
    if q > 0.0:
        h -= q * np.log(q)
    return h


@njit(cache=True)
def split_scan(X, y, idx, feat_ids, min_child, crit):
    """Best (feature, midpoint threshold) over rows ``idx`` and the given
    candidate features, honoring the child-size floor.

    Returns (feature, threshold, decrease); feature == -1 when no admissible
    split exists.
    """
    n = idx.shape[0]
    pos = 0
    for i in range(n):
        pos += y[idx[i]]
    parent = _impurity(pos, n, crit)

    best_f = np.int64(-1)
    best_t = 0.0
    best_dec = -1.0
    vals = np.empty(n, dtype=np.float64)
    for fi in range(feat_ids.shape[0]):
        f = feat_ids[fi]
        for i in range(n):
            vals[i] = X[idx[i], f]
        order = np.argsort(vals, kind="mergesort")
        nl = 0
        posl = 0
        for k in range(n - 1):
            j = idx[order[k]]
            nl += 1
            posl += y[j]
            v0 = vals[order[k]]
            v1 = vals[order[k + 1]]
            if v0 == v1:
                continue
            nr = n - nl
            if nl < min_child or nr < min_child:
                continue
            thr = (v0 + v1) / 2.0
            gl = _impurity(posl, nl, crit)
            gr = _impurity(pos - posl, nr, crit)
            dec = parent - (nl * gl + nr * gr) / n
            if dec > best_dec:
                best_dec = dec
                best_f = f
                best_t = thr
    return best_f, best_t, best_dec


@njit(cache=True)
def grow(X, y, allowed, mtry, max_depth, min_child, min_dec, crit, state):
    """Grow one tree over all rows of X; returns flat node arrays.

    Node layout: feature[i] == -1 marks a leaf; children via left/right;
    npos/ntot carry label counts. imp accumulates the size-weighted impurity
    decrease per original feature index. When mtry equals the number of
    allowed features no random draw is consumed, so single trees are
    deterministic without a seed.
    """
    n = X.shape[0]
    p_all = X.shape[1]
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    npos = np.zeros(cap, dtype=np.int64)
    ntot = np.zeros(cap, dtype=np.int64)
    imp = np.zeros(p_all, dtype=np.float64)

    buf = np.arange(n, dtype=np.int64)
    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    stack_d = np.empty(cap, dtype=np.int64)
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    stack_d[0] = 0
    n_nodes = 1

    n_allowed = allowed.shape[0]
    pool = np.empty(n_allowed, dtype=np.int64)
    m = mtry if mtry < n_allowed else n_allowed

    while top >= 0:
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_d[top]
        top -= 1
        size = hi - lo
        pos = 0
        for i in range(lo, hi):
            pos += y[buf[i]]
        npos[node] = pos
        ntot[node] = size
        if depth >= max_depth or pos == 0 or pos == size or size < 2:
            continue

        if m < n_allowed:
            for j in range(n_allowed):
                pool[j] = allowed[j]
            for j in range(m):
                state, z = splitmix64(state)
                k = j + np.int64(z % np.uint64(n_allowed - j))
                tmp = pool[j]
                pool[j] = pool[k]
                pool[k] = tmp
            cand = np.sort(pool[:m])
        else:
            cand = allowed

        bf, bt, bdec = split_scan(X, y, buf[lo:hi], cand, min_child, crit)
        if bf < 0 or bdec < min_dec:
            continue

        imp[bf] += (size / n) * bdec

        nl = 0
        for i in range(lo, hi):
            if X[buf[i], bf] < bt:
                nl += 1
        tmpbuf = np.empty(size, dtype=np.int64)
        li = 0
        ri = nl
        for i in range(lo, hi):
            if X[buf[i], bf] < bt:
                tmpbuf[li] = buf[i]
                li += 1
            else:
                tmpbuf[ri] = buf[i]
                ri += 1
        for i in range(size):
            buf[lo + i] = tmpbuf[i]

        feature[node] = bf
        threshold[node] = bt
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        top += 1
        stack_node[top] = lid
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        stack_d[top] = depth + 1
        top += 1
        stack_node[top] = rid
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        stack_d[top] = depth + 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], npos[:n_nodes], ntot[:n_nodes], imp, state)


@njit(cache=True)
def _nm_obj(X1, y, beta, v0):
    """Log joint (likelihood + full Gaussian log prior) at beta."""
    n, d = X1.shape
    s = 0.0
    for i in range(n):
        eta = 0.0
        for j in range(d):
            eta += X1[i, j] * beta[j]
        # y*eta - logaddexp(0, eta), stable for large |eta|
        if eta > 0.0:
            s += y[i] * eta - (eta + np.log1p(np.exp(-eta)))
        else:
            s += y[i] * eta - np.log1p(np.exp(eta))
    bb = 0.0
    for j in range(d):
        bb += beta[j] * beta[j]
    return s - 0.5 * d * np.log(2.0 * np.pi * v0) - 0.5 * bb / v0


@njit(cache=True)
def _nm_grad_hess(X1, y, beta, v0, g, H):
    """Fill g with the log-joint gradient and H with the negated Hessian
    (X1' W X1 + I/v0, always positive definite)."""
    n, d = X1.shape
    for j in range(d):
        g[j] = -beta[j] / v0
        for k in range(d):
            H[j, k] = 0.0
        H[j, j] = 1.0 / v0
    for i in range(n):
        eta = 0.0
        for j in range(d):
            eta += X1[i, j] * beta[j]
        if eta >= 0.0:
            mu = 1.0 / (1.0 + np.exp(-eta))
        else:
            e = np.exp(eta)
            mu = e / (1.0 + e)
        r = y[i] - mu
        w = mu * (1.0 - mu)
        for j in range(d):
            g[j] += X1[i, j] * r
            for k in range(j, d):
                H[j, k] += w * X1[i, j] * X1[i, k]
    for j in range(d):
        for k in range(j):
            H[j, k] = H[k, j]


@njit(cache=True)
def _nm_chol_solve(H, g, step):
    """Cholesky solve step = H^-1 g; returns False when H is not positive
    definite (a non-positive pivot appears)."""
    d = H.shape[0]
    L = np.zeros((d, d))
    for j in range(d):
        s = H[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if s <= 0.0 or not np.isfinite(s):
            return False
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, d):
            t = H[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / L[j, j]
    # forward then backward substitution
    tmp = np.empty(d)
    for i in range(d):
        t = g[i]
        for k in range(i):
            t -= L[i, k] * tmp[k]
        tmp[i] = t / L[i, i]
    for i in range(d - 1, -1, -1):
        t = tmp[i]
        for k in range(i + 1, d):
            t -= L[k, i] * step[k]
        step[i] = t / L[i, i]
    return True


@njit(cache=True)
def _nm_logdet_spd(H):
    """Log determinant via Cholesky; nan when H is not positive definite."""
    d = H.shape[0]
    L = np.zeros((d, d))
    acc = 0.0
    for j in range(d):
        s = H[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if s <= 0.0 or not np.isfinite(s):
            return np.nan
        L[j, j] = np.sqrt(s)
        acc += np.log(s)
        for i in range(j + 1, d):
            t = H[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / L[j, j]
    return acc


@njit(cache=True)
def newton_map(X1, y, v0, tol, max_iter, max_halvings):
    """Damped-Newton ascent of the log joint, plus the Laplace evidence.

    Accepts the first step halving that strictly increases the objective;
    when no halving level measurably increases it (the quadratic endgame,
    where changes fall below float resolution), takes the undamped step.
    Returns (beta, converged, n_iterations, status, lml, H) with status 0
    on success, 1 when the Hessian solve failed even after a 1e-8 jitter,
    2 when the Hessian at the mode is not positive definite. lml is the
    Laplace log marginal likelihood log p(mode) + d/2 log(2 pi)
    - 1/2 logdet H.
    """
    n, d = X1.shape
    beta = np.zeros(d)
    g = np.empty(d)
    H = np.empty((d, d))
    step = np.empty(d)
    obj = _nm_obj(X1, y, beta, v0)
    converged = False
    it = 0
    failed = False
    for it in range(1, max_iter + 1):
        _nm_grad_hess(X1, y, beta, v0, g, H)
        gmax = 0.0
        for j in range(d):
            a = abs(g[j])
            if a > gmax:
                gmax = a
        if gmax < tol:
            converged = True
            it -= 1
            break
        if not _nm_chol_solve(H, g, step):
            for j in range(d):
                H[j, j] += 1e-8
            if not _nm_chol_solve(H, g, step):
                failed = True
                break
        t = 1.0
        accepted = False
        for _ in range(max_halvings):
            cand = _nm_obj(X1, y, beta + t * step, v0)
            if cand > obj:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            t = 1.0
        for j in range(d):
            beta[j] += t * step[j]
        obj = _nm_obj(X1, y, beta, v0)
    if failed:
        return beta, False, it, 1, np.nan, H
    _nm_grad_hess(X1, y, beta, v0, g, H)
    if not converged:
        gmax = 0.0
        for j in range(d):
            a = abs(g[j])
            if a > gmax:
                gmax = a
        converged = gmax < tol
    logdet = _nm_logdet_spd(H)
    if np.isnan(logdet):
        return beta, converged, it, 2, np.nan, H
    lml = (_nm_obj(X1, y, beta, v0)
           + 0.5 * d * np.log(2.0 * np.pi) - 0.5 * logdet)
    return beta, converged, it, 0, lml, H
