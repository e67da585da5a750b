import numpy as np

FD_STEP = 1e-5
REL_TOL = 1e-4
ABS_TOL_SMALL = 1e-7   # allowed absolute error where |analytic| < SMALL
SMALL = 1e-6


def central_diff(f, x, h=FD_STEP):
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return grad


def grad_mismatch(analytic, numeric):
    """Elementwise check: rel err <= 1e-4, or abs err <= 1e-7 where |analytic| < 1e-6.

    Returns the indices that fail.
    """
    a, n = np.asarray(analytic, float).ravel(), np.asarray(numeric, float).ravel()
    err = np.abs(a - n)
    rel = err / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-300)
    ok = (rel <= REL_TOL) | ((np.abs(a) < SMALL) & (err <= ABS_TOL_SMALL))
    return np.flatnonzero(~ok)
