"""Shared vocabulary: marginals, weight schemes, truncation, ``Log`` and path containers.

Every object here is an immutable value; sharing across threads needs no locking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import special

from .exceptions import DomainError

__all__ = [
    "Marginal",
    "MomentOrder",
    "SamplePath",
    "StreamId",
    "WeightScheme",
    "cesaro_profile",
    "log_cap",
    "truncate_g",
    "weights",
]

_E = math.e


def log_cap(x):
    """Natural log of ``max(|x|, e)``; never below 1.

    Works elementwise on arrays and returns a float for scalars.
    """
    if np.ndim(x) == 0:
        return math.log(max(abs(float(x)), _E))
    return np.log(np.maximum(np.abs(np.asarray(x, dtype=float)), _E))


def truncate_g(x, ell):
    """Clamp ``x`` to ``[-ell, ell]``.

    Raises
    ------
    DomainError
        If ``ell`` is not strictly positive.
    """
    if not ell > 0:
        raise DomainError(f"truncation level must be positive, got {ell!r}")
    if np.ndim(x) == 0:
        return max(min(float(x), ell), -ell)
    return np.clip(np.asarray(x, dtype=float), -ell, ell)


class StreamId(NamedTuple):
    """Identity of one random stream: the experiment seed and the path number."""

    master_seed: int
    path_index: int


_MARGINAL_KINDS = ("bernoulli_half", "uniform01", "standard_normal", "centered_pareto", "point_mass")


@dataclass(frozen=True)
class Marginal:
    """One-dimensional law shared by every member of a sequence.

    Parameters
    ----------
    kind : str
        One of ``bernoulli_half``, ``uniform01``, ``standard_normal``,
        ``centered_pareto`` or ``point_mass``.
    param : float, optional
        Tail exponent for ``centered_pareto`` (must exceed 1) or the atom
        location for ``point_mass``. Ignored otherwise.

    Notes
    -----
    ``centered_pareto(a)`` is ``Y - a/(a-1)`` with ``P(Y > y) = y**-a`` on
    ``y >= 1``, so its mean is exactly zero and ``E|X|**q`` is finite only
    for ``q < a``.
    """

    kind: str
    param: float | None = None

    def __post_init__(self):
        if self.kind not in _MARGINAL_KINDS:
            raise DomainError(f"unknown marginal kind {self.kind!r}; expected one of {_MARGINAL_KINDS}")
        if self.kind == "centered_pareto":
            if self.param is None or not float(self.param) > 1.0:
                raise DomainError(f"centered_pareto needs a tail exponent > 1, got {self.param!r}")
            object.__setattr__(self, "param", float(self.param))
        elif self.kind == "point_mass":
            if self.param is None or not math.isfinite(float(self.param)):
                raise DomainError("point_mass needs a finite location")
            object.__setattr__(self, "param", float(self.param))
        else:
            object.__setattr__(self, "param", None)

    # convenience constructors
    @classmethod
    def bernoulli_half(cls):
        return cls("bernoulli_half")

    @classmethod
    def uniform01(cls):
        return cls("uniform01")

    @classmethod
    def standard_normal(cls):
        return cls("standard_normal")

    @classmethod
    def centered_pareto(cls, p_tail):
        return cls("centered_pareto", p_tail)

    @classmethod
    def point_mass(cls, c):
        return cls("point_mass", c)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.param is not None:
            d["param"] = self.param
        return d

    @property
    def _shift(self):
        a = self.param
        return a / (a - 1.0)

    @property
    def mean(self) -> float:
        return {
            "bernoulli_half": 0.5,
            "uniform01": 0.5,
            "standard_normal": 0.0,
            "centered_pareto": 0.0,
            "point_mass": self.param,
        }[self.kind]

    @property
    def second_moment(self) -> float:
        """``E X**2``; ``inf`` when it does not exist."""
        if self.kind == "bernoulli_half":
            return 0.5
        if self.kind == "uniform01":
            return 1.0 / 3.0
        if self.kind == "standard_normal":
            return 1.0
        if self.kind == "point_mass":
            return self.param**2
        a = self.param
        if a <= 2.0:
            return math.inf
        return a / (a - 2.0) - self._shift**2

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2

    @property
    def is_continuous(self) -> bool:
        return self.kind in ("uniform01", "standard_normal", "centered_pareto")

    @property
    def is_nonnegative(self) -> bool:
        if self.kind == "point_mass":
            return self.param >= 0
        return self.kind in ("bernoulli_half", "uniform01")

    @property
    def support(self):
        """Closed interval containing all the mass."""
        if self.kind == "bernoulli_half":
            return (0.0, 1.0)
        if self.kind == "uniform01":
            return (0.0, 1.0)
        if self.kind == "standard_normal":
            return (-math.inf, math.inf)
        if self.kind == "point_mass":
            return (self.param, self.param)
        return (1.0 - self._shift, math.inf)

    def cdf(self, x):
        """Right-continuous distribution function ``P(X <= x)``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "bernoulli_half":
            out = np.where(x < 0, 0.0, np.where(x < 1, 0.5, 1.0))
        elif self.kind == "uniform01":
            out = np.clip(x, 0.0, 1.0)
        elif self.kind == "standard_normal":
            out = special.ndtr(x)
        elif self.kind == "point_mass":
            out = np.where(x < self.param, 0.0, 1.0)
        else:
            y = x + self._shift
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(y < 1.0, 0.0, -np.expm1(-self.param * np.log(np.maximum(y, 1.0))))
        return out[()] if out.ndim == 0 else out

    def ppf(self, u):
        """Left-continuous quantile function on ``(0, 1]``."""
        u = np.asarray(u, dtype=float)
        if self.kind == "bernoulli_half":
            out = (u > 0.5).astype(float)
        elif self.kind == "uniform01":
            out = u.copy()
        elif self.kind == "standard_normal":
            out = special.ndtri(u)
        elif self.kind == "point_mass":
            out = np.full_like(u, self.param)
        else:
            out = np.power(1.0 - u, -1.0 / self.param) - self._shift
        return out

    def from_normal(self, z):
        """Map standard normal scores to this marginal through ``Phi``."""
        z = np.asarray(z, dtype=float)
        if self.kind == "standard_normal":
            return z.copy()
        if self.kind == "centered_pareto":
            return np.power(special.ndtr(-z), -1.0 / self.param) - self._shift
        return self.ppf(special.ndtr(z))

    def sample(self, rng: np.random.Generator, size):
        if self.kind == "standard_normal":
            return rng.standard_normal(size)
        if self.kind == "point_mass":
            return np.full(size, self.param)
        if self.kind == "centered_pareto":
            # 1 - U on (0, 1]; the power keeps the far tail exact
            s = 1.0 - rng.random(size)
            return np.power(s, -1.0 / self.param) - self._shift
        return self.ppf(rng.random(size))

    def spread_integral(self, lo, hi):
        """``integral_lo^hi F(x) (1 - F(x)) dx`` for ``lo <= hi`` (vectorised).

        This is the one-dimensional factor of every FGM covariance.
        """
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        lo, hi = np.broadcast_arrays(lo, hi)
        return self._antider_spread(hi) - self._antider_spread(lo)

    def _antider_spread(self, x):
        # primitive of F(1 - F), zero at the left end of the support
        x = np.asarray(x, dtype=float)
        if self.kind == "point_mass":
            return np.zeros_like(x)
        if self.kind == "bernoulli_half":
            return 0.25 * np.clip(x, 0.0, 1.0)
        if self.kind == "uniform01":
            m = np.clip(x, 0.0, 1.0)
            return m**2 / 2.0 - m**3 / 3.0
        if self.kind == "centered_pareto":
            a = self.param
            y = np.maximum(x + self._shift, 1.0)
            # integral_1^y (s^-a - s^-2a) ds
            with np.errstate(over="ignore"):
                prim = (np.power(y, 1.0 - a) - 1.0) / (1.0 - a) - (np.power(y, 1.0 - 2.0 * a) - 1.0) / (
                    1.0 - 2.0 * a
                )
            return prim
        return _normal_spread_primitive(x)

    @property
    def spread_total(self) -> float:
        """``integral F (1 - F)`` over the whole line (finite for every catalogue marginal)."""
        return float(self.spread_integral(-np.inf, np.inf))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


def _normal_spread_primitive(x):
    """``integral_{-inf}^x Phi(s) Phi(-s) ds`` for the standard normal."""
    x = np.asarray(x, dtype=float)
    total = 1.0 / math.sqrt(math.pi)
    half = total / 2.0
    ax = np.minimum(np.abs(x), 40.0)
    # integral_0^ax Phi(s)Phi(-s) ds by Gauss-Legendre, split to keep the integrand smooth per panel
    out = np.zeros_like(ax)
    edges = np.array([0.0, 1.0, 2.0, 4.0, 8.0, 40.0])
    for a, b in zip(edges[:-1], edges[1:]):
        lo = np.clip(ax, a, b)
        span = lo - a
        mid = a + span / 2.0
        nodes = mid[..., None] + (span / 2.0)[..., None] * _GL_X
        f = special.ndtr(nodes) * special.ndtr(-nodes)
        out = out + (span / 2.0) * (f @ _GL_W)
    out = np.where(np.isinf(x), half, out)
    return np.where(x >= 0, half + out, half - out)


@dataclass(frozen=True)
class MomentOrder:
    """Moment exponent ``p`` with ``1 <= p < 2``."""

    p: float

    def __post_init__(self):
        if not (1.0 <= float(self.p) < 2.0):
            raise DomainError(f"moment order must satisfy 1 <= p < 2, got {self.p!r}")
        object.__setattr__(self, "p", float(self.p))


_WEIGHT_KINDS = ("constant", "bounded_sinusoid", "signed_alternating", "custom_table", "power")


@dataclass(frozen=True)
class WeightScheme:
    """Deterministic rule for the weights ``a_1, a_2, ...``.

    Kinds
    -----
    constant(c)
        ``a_k = c``.
    bounded_sinusoid(base, amplitude)
        ``a_k = base + amplitude * sin(k)``.
    signed_alternating(c)
        ``a_k = c * (-1)**(k+1)``.
    custom_table(values)
        ``a_k = values[k-1]``, and zero past the end of the table.
    power(c, exponent)
        ``a_k = c * k**exponent``; the Cesaro mean of squares stays bounded
        only for ``exponent <= 0``, so positive exponents give invalid schemes
        for negative controls.
    """

    kind: str
    c: float = 1.0
    base: float = 0.0
    amplitude: float = 0.0
    exponent: float = 0.0
    values: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in _WEIGHT_KINDS:
            raise DomainError(f"unknown weight scheme {self.kind!r}; expected one of {_WEIGHT_KINDS}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.kind == "custom_table" and not self.values:
            raise DomainError("custom_table needs at least one value")

    @classmethod
    def constant(cls, c=1.0):
        return cls("constant", c=float(c))

    @classmethod
    def bounded_sinusoid(cls, base, amplitude):
        return cls("bounded_sinusoid", base=float(base), amplitude=float(amplitude))

    @classmethod
    def signed_alternating(cls, c=1.0):
        return cls("signed_alternating", c=float(c))

    @classmethod
    def custom_table(cls, values):
        return cls("custom_table", values=tuple(values))

    @classmethod
    def power(cls, c, exponent):
        return cls("power", c=float(c), exponent=float(exponent))

    @property
    def scheme_id(self) -> str:
        if self.kind in ("constant", "signed_alternating"):
            return f"{self.kind}({self.c:g})"
        if self.kind == "bounded_sinusoid":
            return f"bounded_sinusoid({self.base:g},{self.amplitude:g})"
        if self.kind == "power":
            return f"power({self.c:g},{self.exponent:g})"
        return f"custom_table[{len(self.values)}]"

    @property
    def cesaro_bound(self) -> float:
        """Declared upper bound on ``sup_n n^-1 sum_{k<=n} a_k**2``."""
        if self.kind in ("constant", "signed_alternating"):
            return self.c**2
        if self.kind == "bounded_sinusoid":
            return (abs(self.base) + abs(self.amplitude)) ** 2
        if self.kind == "power":
            return self.c**2 if self.exponent <= 0 else math.inf
        sq = np.cumsum(np.square(self.values))
        return float(np.max(sq / np.arange(1, len(sq) + 1)))

    @property
    def is_valid(self) -> bool:
        return math.isfinite(self.cesaro_bound)

    @property
    def is_nonnegative(self) -> bool:
        if self.kind == "signed_alternating":
            return self.c == 0
        if self.kind in ("constant", "power"):
            return self.c >= 0
        if self.kind == "bounded_sinusoid":
            return self.base >= abs(self.amplitude)
        return all(v >= 0 for v in self.values)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind in ("constant", "signed_alternating"):
            d["c"] = self.c
        elif self.kind == "bounded_sinusoid":
            d.update(base=self.base, amplitude=self.amplitude)
        elif self.kind == "power":
            d.update(c=self.c, exponent=self.exponent)
        else:
            d["values"] = list(self.values)
        return d


def weights(scheme: WeightScheme, n: int, start: int = 1) -> np.ndarray:
    """Weights ``a_start, ..., a_{start+n-1}``, computed from the index alone."""
    if n < 0:
        raise DomainError("n must be non-negative")
    k = np.arange(start, start + n, dtype=np.int64)
    if scheme.kind == "constant":
        return np.full(n, scheme.c)
    if scheme.kind == "signed_alternating":
        return np.where(k % 2 == 1, scheme.c, -scheme.c).astype(float)
    if scheme.kind == "bounded_sinusoid":
        return scheme.base + scheme.amplitude * np.sin(k.astype(float))
    if scheme.kind == "power":
        return scheme.c * np.power(k.astype(float), scheme.exponent)
    table = np.asarray(scheme.values)
    out = np.zeros(n)
    inside = k <= len(table)
    out[inside] = table[k[inside] - 1]
    return out


def cesaro_profile(scheme: WeightScheme, n: int, chunk: int = 1 << 18) -> float:
    """``max_{m <= n} m^-1 sum_{k<=m} a_k**2`` by a direct chunked scan."""
    best = 0.0
    running = 0.0
    for start in range(1, n + 1, chunk):
        m = min(chunk, n - start + 1)
        sq = np.square(weights(scheme, m, start))
        csum = running + np.cumsum(sq)
        idx = np.arange(start, start + m, dtype=float)
        best = max(best, float(np.max(csum / idx)))
        running = float(csum[-1])
    return best


@dataclass(frozen=True, eq=False)
class SamplePath:
    """One realised trajectory ``X_1..X_N`` and the stream that produced it."""

    values: np.ndarray
    model_id: str
    stream: StreamId

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise DomainError("a sample path needs at least one value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "stream", StreamId(*self.stream))

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, SamplePath):
            return NotImplemented
        return (
            self.model_id == other.model_id
            and self.stream == other.stream
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None
