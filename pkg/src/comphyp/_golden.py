"""Golden-section search on a closed interval."""

import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(f, lo, hi, tol=1e-8, max_iter=500):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; return ``(argmax, max)``.

    The endpoints are compared against the interior optimum so that a
    maximum sitting on the boundary is not lost.
    """
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    best = (x, f(x))
    for edge in (float(lo), float(hi)):
        val = f(edge)
        if val > best[1]:
            best = (edge, val)
    return best
