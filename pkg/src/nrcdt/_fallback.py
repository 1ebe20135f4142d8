"""Pure numpy implementation of the projection/quantile kernel.

Semantics match ``nrcdt._core`` exactly; see :func:`radon_quantiles`.
"""

import numpy as np


def radon_quantiles(points, weights, cosines, sines, levels, antipodes, merge_tol, tie_tol):
    """Quantile curves of the projections of a planar measure.

    Parameters
    ----------
    points : ndarray, shape (n, 2)
    weights : ndarray, shape (n,)
        Positive weights summing to one.
    cosines, sines : ndarray, shape (L,)
        Direction components.
    levels : ndarray, shape (M,)
        Increasing quantile levels in (0, 1).
    antipodes : bool
        Also emit the curves of the opposite directions.
    merge_tol, tie_tol : float
        Atom merging and cumulative-tie tolerances.

    Returns
    -------
    ndarray, shape (L, M) or (2L, M)
        Rows ``0..L-1`` follow the given directions; when ``antipodes`` is
        set, rows ``L..2L-1`` hold the opposite directions in the same order.
    """
    x = np.ascontiguousarray(points[:, 0], dtype=np.float64)
    y = np.ascontiguousarray(points[:, 1], dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    keep = w > 0
    x, y, w = x[keep], y[keep], w[keep]
    levels = np.asarray(levels, dtype=np.float64) + tie_tol
    n_dir = len(cosines)
    out = np.empty((2 * n_dir if antipodes else n_dir, len(levels)))
    for d in range(n_dir):
        proj = x * cosines[d] + y * sines[d]
        order = np.argsort(proj, kind="stable")
        xs, ws = proj[order], w[order]
        start = np.empty(len(xs), dtype=bool)
        start[0] = True
        start[1:] = (xs[1:] - xs[:-1]) > merge_tol
        idx = np.flatnonzero(start)
        xs, ws = xs[idx], np.add.reduceat(ws, idx)
        last = len(xs) - 1
        k = np.searchsorted(np.cumsum(ws), levels, side="right")
        out[d] = xs[np.minimum(k, last)]
        if antipodes:
            k = np.searchsorted(np.cumsum(ws[::-1]), levels, side="right")
            out[n_dir + d] = -xs[::-1][np.minimum(k, last)]
    return out


def svm_subgradient(gram, labels, reg, max_iters, tol):
    """Hinge-loss subgradient descent in the span of the training rows.

    With ``w = X^T alpha`` and ``gram = X X^T``, runs the primal iteration

        w <- w - eta_t (2 reg w - sum_{active} y_i x_i / n),
        b <- b + eta_t sum_{active} y_i / n,     eta_t = 1 / (reg (t + 1)),

    on ``alpha``, where an example is active when ``y_i (<w, x_i> + b) < 1``.
    Stops once the objective changes by less than ``tol`` or after
    ``max_iters`` steps.

    Returns
    -------
    alpha : ndarray, shape (n,)
        Coefficients of the best iterate.
    b : float
        Bias of the best iterate.
    history : ndarray
        Best objective seen after each evaluation (non-increasing).
    """
    K = np.asarray(gram, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    n = len(y)
    alpha, b = np.zeros(n), 0.0
    best, best_alpha, best_b = np.inf, alpha, b
    hist = []
    prev = None
    for t in range(max_iters + 1):
        f = K @ alpha
        m = y * (f + b)
        active = m < 1.0
        obj = (1.0 - m[active]).sum() / n + reg * (alpha @ f)
        if t == 0 or obj < best:
            best, best_alpha, best_b = obj, alpha.copy(), b
        hist.append(best)
        if t > 0 and abs(obj - prev) < tol:
            break
        if t == max_iters:
            break
        prev = obj
        eta = 1.0 / (reg * (t + 1))
        alpha = (1.0 - 2.0 * eta * reg) * alpha + np.where(active, eta / n * y, 0.0)
        b += eta / n * y[active].sum()
    return best_alpha, best_b, np.array(hist)
