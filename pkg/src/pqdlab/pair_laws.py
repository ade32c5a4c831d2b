"""Bivariate laws of a pair ``(X_k, X_j)``.

A pair law knows three things:

* its quadrant-dependence surface ``delta(x, y) = H(x, y) - F(x) G(y)``
  (``None`` when no closed form is offered),
* the clamped covariance ``Cov(clamp(X, lo1, hi1), clamp(Y, lo2, hi2))``,
  which by Hoeffding's identity equals the integral of ``delta`` over
  ``[lo1, hi1] x [lo2, hi2]``; the truncated covariance ``G(t)``, the
  rectangle integrals and the positive/negative-part functionals are all
  special cases,
* how to draw iid copies of the pair.

Laws are immutable and hashable through :attr:`key`, which the condition
evaluators use to share work between pairs with the same bivariate law.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import special

from .core_types import Marginal
from .rng import substream

__all__ = ["BernoulliFlipPair", "FGMPair", "GaussianPair", "IndependentPair", "PairLaw", "mehler_clamped_cov"]



def _overlap(lo, hi, a, b):
    return np.maximum(np.minimum(hi, b) - np.maximum(lo, a), 0.0)


class PairLaw:
    """Interface shared by all bivariate laws."""

    marginal: Marginal

    @property
    def key(self):
        raise NotImplementedError

    def delta(self, x, y):
        """Closed-form quadrant dependence, or ``None`` when unavailable."""
        return None

    def clamped_cov(self, lo1, hi1, lo2, hi2):
        """Covariance of the clamped pair; ``None`` when no analytic route exists."""
        return None

    @property
    def limit(self) -> float:
        """Upper bound on ``G(t)`` for every ``t``.

        The full covariance when it has a closed form, otherwise the
        Cauchy-Schwarz bound ``Var X`` (``inf`` for heavy tails).
        """
        val = self.clamped_cov(-np.inf, np.inf, -np.inf, np.inf)
        if val is None:
            return float(self.marginal.variance)
        return float(val)

    def breakpoints(self):
        """Levels at which ``t -> G(t)`` may have a kink."""
        lo, hi = self.marginal.support
        pts = [abs(v) for v in (lo, hi) if math.isfinite(v) and v != 0]
        return sorted(set(pts))

    def sample(self, size, stream):
        raise NotImplementedError

    def g(self, t):
        """Truncated covariance ``G(t) = Cov(g_t(X), g_t(Y))``."""
        t = np.asarray(t, dtype=float)
        return self.clamped_cov(-t, t, -t, t)


class IndependentPair(PairLaw):
    def __init__(self, marginal):
        self.marginal = marginal

    @property
    def key(self):
        return ("independent",)

    def delta(self, x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)[()]

    def clamped_cov(self, lo1, hi1, lo2, hi2):
        return np.zeros(np.broadcast(*(np.asarray(v) for v in (lo1, hi1, lo2, hi2))).shape)[()]

    @property
    def limit(self):
        return 0.0

    def sample(self, size, stream):
        x = self.marginal.sample(substream(stream, "marginal"), size)
        y = self.marginal.sample(substream(stream, "idiosyncratic"), size)
        return x, y


class BernoulliFlipPair(PairLaw):
    """Fair-coin pair built as ``X = B xor C_k``, ``Y = B xor C_j``.

    ``c_k = 1 - 2 P(C_k = 1)`` is the flip contrast; the pair then has
    ``P(X=Y=0) = 1/4 + c_k c_j / 4`` and ``delta = c_k c_j / 4`` on ``[0, 1)^2``.
    """

    def __init__(self, contrast_k, contrast_j):
        self.marginal = Marginal.bernoulli_half()
        self.contrast_k = float(contrast_k)
        self.contrast_j = float(contrast_j)
        self.level = self.contrast_k * self.contrast_j / 4.0

    @property
    def key(self):
        return ("bernoulli", self.level)

    def delta(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        inside = (x >= 0) & (x < 1) & (y >= 0) & (y < 1)
        return np.where(inside, self.level, 0.0)[()]

    def clamped_cov(self, lo1, hi1, lo2, hi2):
        return (self.level * _overlap(lo1, hi1, 0.0, 1.0) * _overlap(lo2, hi2, 0.0, 1.0))[()]

    @property
    def limit(self):
        return self.level

    def sample(self, size, stream):
        b = substream(stream, "common").random(size) < 0.5
        flips = substream(stream, "flip")
        ck = flips.random(size) < (1.0 - self.contrast_k) / 2.0
        cj = flips.random(size) < (1.0 - self.contrast_j) / 2.0
        return (b ^ ck).astype(float), (b ^ cj).astype(float)


class FGMPair(PairLaw):
    """Farlie-Gumbel-Morgenstern copula ``uv[1 + theta (1-u)(1-v)]`` with a common marginal."""

    def __init__(self, theta, marginal):
        self.theta = float(theta)
        self.marginal = marginal

    @property
    def key(self):
        return ("fgm", self.theta, self.marginal)

    def delta(self, x, y):
        fx = self.marginal.cdf(x)
        fy = self.marginal.cdf(y)
        return np.asarray(self.theta * fx * (1.0 - fx) * fy * (1.0 - fy))[()]

    def clamped_cov(self, lo1, hi1, lo2, hi2):
        s1 = self.marginal.spread_integral(lo1, hi1)
        s2 = self.marginal.spread_integral(lo2, hi2)
        return (self.theta * s1 * s2)[()]

    def sample(self, size, stream):
        u = substream(stream, "common").random(size)
        v = substream(stream, "idiosyncratic").random(size)
        w = fgm_conditional_inverse(v, self.theta * (1.0 - 2.0 * u))
        return self.marginal.ppf(u), self.marginal.ppf(w)


def fgm_conditional_inverse(v, a):
    """Solve ``w + a w (1 - w) = v`` for ``w`` in ``[0, 1]`` (``|a| <= 1``).

    This inverts the conditional distribution of the second FGM coordinate
    given the first; the rationalised root avoids cancellation at ``a -> 0``.
    """
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    b = 1.0 + a
    den = b + np.sqrt(np.maximum(b * b - 4.0 * a * v, 0.0))
    # den vanishes only at a = -1, v = 0, where the root is w = 0
    return np.divide(2.0 * v, den, out=np.zeros(np.broadcast(v, den).shape), where=den > 0)[()]


class _HermiteEdge:
    """Iterates ``phi(x) He_m(x) / sqrt(m!)`` for ``m = 0, 1, ...`` (zero at infinite ``x``).

    The density factor is carried inside the three-term recurrence, which
    keeps every iterate bounded (Cramer's inequality) instead of letting the
    polynomial overflow.
    """

    def __init__(self, x):
        finite = np.isfinite(x)
        self.x = np.where(finite, x, 0.0)
        self.prev = np.zeros_like(self.x)
        self.cur = np.where(finite, np.exp(-0.5 * self.x * self.x), 0.0) / math.sqrt(2.0 * math.pi)
        self.m = 0

    def step(self):
        val = self.cur
        nxt = (self.x * self.cur - math.sqrt(self.m) * self.prev) / math.sqrt(self.m + 1)
        self.prev, self.cur = self.cur, nxt
        self.m += 1
        return val


def mehler_clamped_cov(rho, lo1, hi1, lo2, hi2, eps=1e-17):
    """``Cov(clamp(X, lo1, hi1), clamp(Y, lo2, hi2))`` for a standard bivariate normal.

    Uses the Mehler (Hermite) expansion ``sum_n rho^n a_n b_n / n!`` with
    ``a_n = E[He_n(Z) clamp(Z, lo, hi)]``. Stein's identity gives
    ``a_1 = Phi(hi) - Phi(lo)`` and, for ``n >= 2``,
    ``a_n = phi(lo) He_{n-2}(lo) - phi(hi) He_{n-2}(hi)``. Every term is
    computed directly, so there is no cancellation even for tiny ``rho``, and
    on symmetric boxes every term is nonnegative. The series is cut once
    ``rho^n`` drops below ``eps``.
    """
    rho = float(rho)
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"correlation must lie in [0, 1), got {rho}")
    lo1, hi1, lo2, hi2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lo1, hi1, lo2, hi2)))
    first = (special.ndtr(hi1) - special.ndtr(lo1)) * (special.ndtr(hi2) - special.ndtr(lo2))
    if rho == 0.0:
        return np.zeros(lo1.shape)[()]
    nterms = int(min(max(math.ceil(math.log(eps) / math.log(rho)), 3), 20000))
    edges = [_HermiteEdge(v) for v in (lo1, hi1, lo2, hi2)]
    tail = np.zeros(lo1.shape)
    for n in range(2, nterms + 1):
        e = [h.step() for h in edges]
        tail += rho**n / (n * (n - 1.0)) * (e[0] - e[1]) * (e[2] - e[3])
    return (rho * first + tail)[()]


class GaussianPair(PairLaw):
    """Gaussian copula with correlation ``rho`` in ``[0, 1)``.

    With standard normal marginals the clamped covariance comes from the
    Mehler expansion (:func:`mehler_clamped_cov`). Other marginals have no
    analytic route (``clamped_cov`` returns ``None``) and are handled
    empirically by the caller.
    """

    def __init__(self, rho, marginal):
        self.rho = float(rho)
        self.marginal = marginal

    @property
    def key(self):
        return ("gaussian", self.rho, self.marginal)

    @property
    def analytic(self):
        return self.marginal.kind == "standard_normal" or self.rho == 0.0

    def clamped_cov(self, lo1, hi1, lo2, hi2):
        if self.rho == 0.0:
            return IndependentPair(self.marginal).clamped_cov(lo1, hi1, lo2, hi2)
        if self.marginal.kind != "standard_normal":
            return None
        return mehler_clamped_cov(self.rho, lo1, hi1, lo2, hi2)

    @property
    def limit(self):
        if self.analytic:
            return self.rho
        return super().limit

    def sample(self, size, stream):
        z1 = substream(stream, "common").standard_normal(size)
        e = substream(stream, "idiosyncratic").standard_normal(size)
        z2 = self.rho * z1 + math.sqrt(1.0 - self.rho**2) * e
        return self.marginal.from_normal(z1), self.marginal.from_normal(z2)
