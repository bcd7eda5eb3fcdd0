"""Pure-Python versions of the hot loops in ``_kernels_c.pyx``.

Same signatures, same arithmetic order; used when the extension is not built
or when ``PURSUITLAB_PURE_PYTHON=1``.
"""

import numpy as np


def ar1_filter(innov, rho, x0):
    """x[0] = x0; x[k] = rho * x[k-1] + innov[k]."""
    innov = np.ascontiguousarray(innov, dtype=np.float64)
    n = innov.shape[0]
    out = np.empty(n, dtype=np.float64)
    if n == 0:
        return out
    prev = float(x0)
    out[0] = prev
    r = float(rho)
    vals = innov.tolist()
    for k in range(1, n):
        prev = r * prev + vals[k]
        out[k] = prev
    return out


def dcd_epoch(X, y, alpha, w, qdiag, order, C):
    """One dual coordinate descent sweep for the L1-loss linear SVM.

    Updates ``alpha`` and ``w`` in place and returns the largest absolute
    projected gradient seen during the sweep.
    """
    rows = X.tolist()
    ys = y.tolist()
    wl = w.tolist()
    p = len(wl)
    max_viol = 0.0
    for i in order.tolist():
        xi = rows[i]
        yi = ys[i]
        dot = 0.0
        for j in range(p):
            dot += wl[j] * xi[j]
        g = yi * dot - 1.0
        a = alpha[i]
        if a == 0.0:
            pg = g if g < 0.0 else 0.0
        elif a == C:
            pg = g if g > 0.0 else 0.0
        else:
            pg = g
        apg = pg if pg >= 0.0 else -pg
        if apg > max_viol:
            max_viol = apg
        if pg != 0.0:
            a_new = a - g / qdiag[i]
            if a_new < 0.0:
                a_new = 0.0
            elif a_new > C:
                a_new = C
            alpha[i] = a_new
            step = (a_new - a) * yi
            for j in range(p):
                wl[j] += step * xi[j]
    w[:] = wl
    return max_viol
