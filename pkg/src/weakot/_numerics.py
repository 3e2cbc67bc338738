"""Small vectorized numerical kernels used across modules.

Nothing here is specific to transport; these are the bracketing root finder,
panel Gauss-Legendre quadrature and the thread-count knob.
"""

import os

import numpy as np

_MAX_DOUBLINGS = 60
_MAX_BISECTIONS = 200


def thread_count():
    """Worker count from ``WEAKOT_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("WEAKOT_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def expand_bracket(func, lo, hi):
    """Grow ``[lo, hi]`` geometrically until a non-decreasing ``func`` changes sign.

    Returns ``(lo, hi, ok)`` where ``ok`` flags the entries for which
    ``func(lo) <= 0 <= func(hi)`` was reached within 60 doublings.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    center = 0.5 * (lo + hi)
    half = np.maximum(0.5 * (hi - lo), 1e-300)
    for _ in range(_MAX_DOUBLINGS):
        flo = func(lo)
        fhi = func(hi)
        need = (flo > 0) | (fhi < 0)
        if not np.any(need):
            break
        half = np.where(need, 2.0 * half, half)
        lo = np.where(flo > 0, center - half, lo)
        hi = np.where(fhi < 0, center + half, hi)
    ok = (func(lo) <= 0) & (func(hi) >= 0)
    return lo, hi, ok


def bisect_increasing(func, lo, hi, xtol=1e-15):
    """Root of a non-decreasing ``func`` inside a valid bracket, elementwise.

    Iterates until every bracket is below ``xtol + 4 eps |x|`` or 200 halvings.
    The endpoint with the smaller ``|func|`` is returned.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    eps = np.finfo(float).eps
    for _ in range(_MAX_BISECTIONS):
        width = hi - lo
        scale = np.maximum(np.abs(lo), np.abs(hi))
        if np.all(width <= xtol + 4 * eps * scale):
            break
        mid = lo + 0.5 * width
        fmid = func(mid)
        lo = np.where(fmid <= 0, mid, lo)
        hi = np.where(fmid <= 0, hi, mid)
    flo = np.abs(func(lo))
    fhi = np.abs(func(hi))
    return np.where(flo <= fhi, lo, hi)


def _gl_rule(order):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def integrate_panels(func, a, b, tol=1e-10, order=32, max_level=12):
    """Batched composite Gauss-Legendre quadrature with panel doubling.

    Parameters
    ----------
    func : callable
        Receives abscissae of shape ``(m, q)``, row ``i`` lying in
        ``[a_i, b_i]``, and returns values of the same shape.
    a, b : array_like, shape (m,)
        Integration limits per row (``b < a`` is allowed).
    tol : float
        Rows stop refining once two successive levels agree to
        ``tol * max(1, |I|)``.

    Returns
    -------
    ndarray, shape (m,)
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    nodes, weights = _gl_rule(order)

    def level(rows, panels):
        aa = a[rows][:, None]
        width = (b[rows] - a[rows])[:, None] / panels
        starts = aa + width * np.arange(panels)[None, :]
        s = (starts[:, :, None] + width[:, :, None] * nodes[None, None, :])
        vals = func(s.reshape(len(rows), -1)).reshape(s.shape)
        return (vals * weights).sum(axis=(1, 2)) * width[:, 0]

    rows = np.arange(a.size)
    out = np.zeros(a.size)
    prev = level(rows, 1)
    for lev in range(1, max_level + 1):
        cur = level(rows, 2 ** lev)
        done = np.abs(cur - prev) <= tol * np.maximum(1.0, np.abs(cur))
        out[rows[done]] = cur[done]
        rows = rows[~done]
        prev = cur[~done]
        if rows.size == 0:
            break
    else:
        out[rows] = prev
    return out
