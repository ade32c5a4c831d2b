"""Vectorised adaptive Gauss-Legendre quadrature on a logarithmic scale.

The condition evaluators need the same integrand integrated from many lower
limits up to one common upper limit. ``tail_integrals`` cuts the range at every
requested lower limit and every declared kink, integrates each panel
adaptively in ``u = log t`` and accumulates from the top.
"""
from __future__ import annotations

import math

import numpy as np

_ORDER = 10
_GX, _GW = np.polynomial.legendre.leggauss(_ORDER)
_MAX_LEVELS = 40
_MAX_PANELS = 1 << 18


def _gl(f, a, b):
    half = (b - a) / 2.0
    u = a[:, None] + half[:, None] * (_GX + 1.0)
    t = np.exp(u)
    vals = f(t.reshape(-1)).reshape(t.shape) * t
    return half * (vals @ _GW)


def log_panels(f, a, b, rtol=1e-8, adaptive=True, max_width=None):
    """Integrals of ``f`` over the panels ``[a_i, b_i]`` (``0 < a_i <= b_i``).

    Parameters
    ----------
    f : callable
        Vectorised integrand in ``t``.
    rtol : float
        Per-panel relative tolerance; a panel is accepted when the one-panel
        and two-half-panel estimates agree to ``rtol`` (or to a tiny absolute
        floor derived from the coarse total).
    adaptive : bool
        If false, each panel is first cut into pieces of log-width at most
        ``max_width`` and integrated once (used for rough tabulated data).
    """
    ua = np.log(np.asarray(a, dtype=float))
    ub = np.log(np.asarray(b, dtype=float))
    out = np.zeros(ua.size)
    idx = np.arange(ua.size)
    keep = ub > ua
    ua, ub, idx = ua[keep], ub[keep], idx[keep]
    if not adaptive:
        width = max_width or 0.05
        pieces = np.maximum(np.ceil((ub - ua) / width).astype(int), 1)
        rep = np.repeat(np.arange(ua.size), pieces)
        offs = np.arange(rep.size) - np.repeat(np.cumsum(pieces) - pieces, pieces)
        step = ((ub - ua) / pieces)[rep]
        lo = ua[rep] + offs * step
        vals = _gl(f, lo, lo + step)
        np.add.at(out, idx[rep], vals)
        return out
    floor = None
    for _ in range(_MAX_LEVELS):
        if ua.size == 0:
            break
        if ua.size > _MAX_PANELS:
            np.add.at(out, idx, _gl(f, ua, ub))
            break
        mid = (ua + ub) / 2.0
        whole = _gl(f, ua, ub)
        halves = _gl(f, ua, mid) + _gl(f, mid, ub)
        if floor is None:
            # absolute floor: a negligible share of the coarse total, so panels
            # whose integrand is pure rounding noise do not refine forever
            floor = 1e-3 * rtol * float(np.sum(np.abs(halves))) / ua.size
        ok = np.abs(whole - halves) <= np.maximum(rtol * np.abs(halves), floor)
        np.add.at(out, idx[ok], halves[ok])
        bad = ~ok
        ua, ub, idx = (
            np.concatenate([ua[bad], mid[bad]]),
            np.concatenate([mid[bad], ub[bad]]),
            np.concatenate([idx[bad], idx[bad]]),
        )
    else:
        np.add.at(out, idx, _gl(f, ua, ub))
    return out


def tail_integrals(f, lowers, upper, breaks=(), rtol=1e-8, adaptive=True):
    """``integral_{L}^{upper} f(t) dt`` for every ``L`` in ``lowers``.

    Lower limits above ``upper`` give zero. All limits must be positive.
    """
    lowers = np.asarray(lowers, dtype=float)
    if lowers.size == 0:
        return np.zeros(0)
    if np.any(lowers <= 0) or not upper > 0:
        raise ValueError("integration limits must be positive")
    lo_min = float(np.min(lowers))
    inner = [b for b in breaks if lo_min < b < upper and math.isfinite(b)]
    pts = np.unique(np.concatenate([np.minimum(lowers, upper), inner, [upper]]))
    panels = log_panels(f, pts[:-1], pts[1:], rtol=rtol, adaptive=adaptive)
    # suffix sums: integral from pts[i] to upper
    suffix = np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]])
    pos = np.searchsorted(pts, np.minimum(lowers, upper))
    return suffix[pos]
