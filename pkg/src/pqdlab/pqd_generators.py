"""Samplers for pairwise PQD sequences.

Each family realises a whole sequence from a small latent construction and
also exposes the bivariate law of any pair ``(X_k, X_j)``:

independent
    iid draws from the marginal.
gaussian_copula
    latent standard normal vector with nonnegative correlations, mapped
    through the marginal quantile function. Correlation profiles:
    ``exchangeable(rho)`` (one common factor), ``geometric(phi)``
    (stationary AR(1), ``rho_kj = phi**|j-k|``) and ``second_index(phi)``
    (``rho_kj = phi**(max(k, j) - 1)``, built from a reverse cumulative sum
    of independent increments; the pair law then depends on the larger index
    only, which is the structural assumption of the one-index conditions).
fgm_copula
    ``X_1 = W`` uniform and, given ``W``, the later coordinates are drawn
    independently from the FGM conditional law with parameter
    ``theta_n = theta * decay**(n-2)``. Integrating ``W`` out leaves FGM
    copulas for every pair: ``theta_{1j} = theta_j`` and
    ``theta_{kj} = theta_k theta_j / 3`` for ``2 <= k < j``.
paper_bernoulli
    ``X_n = B xor C_n`` with a fair coin ``B`` and independent flips
    ``P(C_n = 1) = (1 - 2**(1-n)) / 2``. Every pair then has the joint table
    ``1/4 +- 2**-(k+j)`` (checked by exact enumeration in the tests) although
    all ``X_n`` are identically distributed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal

from .core_types import Marginal, SamplePath, StreamId
from .exceptions import DomainError
from .pair_laws import (
    BernoulliFlipPair,
    FGMPair,
    GaussianPair,
    IndependentPair,
    PairLaw,
    fgm_conditional_inverse,
)
from .rng import substream

__all__ = [
    "FAMILIES",
    "RhoProfile",
    "SequenceModel",
    "analytic_delta",
    "flip_contrast",
    "paper_bernoulli_joint",
    "sample_pairs",
    "sample_path",
    "sample_paths",
]

FAMILIES = ("independent", "gaussian_copula", "fgm_copula", "paper_bernoulli")
_PROFILES = ("exchangeable", "geometric", "second_index")


@dataclass(frozen=True)
class RhoProfile:
    """Correlation rule ``(k, j) -> rho_kj`` of a Gaussian copula sequence."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in _PROFILES:
            raise DomainError(f"unknown correlation profile {self.kind!r}; expected one of {_PROFILES}")
        v = float(self.value)
        if not (0.0 <= v < 1.0):
            raise DomainError(f"correlation parameter must lie in [0, 1) for PQD, got {self.value!r}")
        object.__setattr__(self, "value", v)

    def rho(self, k, j):
        k = np.asarray(k)
        j = np.asarray(j)
        if self.kind == "exchangeable":
            out = np.full(np.broadcast(k, j).shape, self.value)
        elif self.kind == "geometric":
            out = np.power(self.value, np.abs(j - k).astype(float))
        else:
            out = np.power(self.value, (np.maximum(k, j) - 1).astype(float))
        return out[()]

    @property
    def stationary(self) -> bool:
        return self.kind in ("exchangeable", "geometric")

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class SequenceModel:
    """Joint law of a pairwise PQD sequence.

    Parameters
    ----------
    family : str
        ``independent``, ``gaussian_copula``, ``fgm_copula`` or ``paper_bernoulli``.
    marginal : Marginal
        Common one-dimensional law. Forced to ``bernoulli_half`` for
        ``paper_bernoulli``.
    rho : RhoProfile, optional
        Required for ``gaussian_copula``.
    theta, theta_decay : float
        FGM strength of the first pair and its geometric decay, both in
        ``[0, 1]``.
    name : str
        Free label; preset name when loaded from a preset.
    """

    family: str
    marginal: Marginal = Marginal("uniform01")
    rho: RhoProfile | None = None
    theta: float = 0.0
    theta_decay: float = 1.0
    name: str = ""

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "paper_bernoulli":
            if self.marginal.kind != "bernoulli_half":
                object.__setattr__(self, "marginal", Marginal.bernoulli_half())
        if self.family == "gaussian_copula" and self.rho is None:
            raise DomainError("gaussian_copula needs a correlation profile")
        if self.family == "fgm_copula":
            if not (0.0 <= self.theta <= 1.0):
                raise DomainError(f"FGM theta must lie in [0, 1], got {self.theta!r}")
            if not (0.0 <= self.theta_decay <= 1.0):
                raise DomainError(f"FGM theta_decay must lie in [0, 1], got {self.theta_decay!r}")
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "theta_decay", float(self.theta_decay))

    # constructors -------------------------------------------------------
    @classmethod
    def independent(cls, marginal, name=""):
        return cls("independent", marginal, name=name)

    @classmethod
    def gaussian(cls, profile, value, marginal=None, name=""):
        return cls("gaussian_copula", marginal or Marginal.standard_normal(), RhoProfile(profile, value), name=name)

    @classmethod
    def fgm(cls, theta, marginal=None, decay=1.0, name=""):
        return cls("fgm_copula", marginal or Marginal.uniform01(), theta=theta, theta_decay=decay, name=name)

    @classmethod
    def paper_bernoulli(cls, name=""):
        return cls("paper_bernoulli", Marginal.bernoulli_half(), name=name)

    # identity -----------------------------------------------------------
    @property
    def model_id(self) -> str:
        if self.name:
            return self.name
        m = self.marginal.kind if self.marginal.param is None else f"{self.marginal.kind}({self.marginal.param:g})"
        if self.family == "gaussian_copula":
            return f"gaussian_copula[{self.rho.kind}({self.rho.value:g})]/{m}"
        if self.family == "fgm_copula":
            return f"fgm_copula[{self.theta:g},{self.theta_decay:g}]/{m}"
        return f"{self.family}/{m}"

    def to_dict(self):
        d = {"family": self.family, "marginal": self.marginal.to_dict()}
        if self.rho is not None:
            d["rho"] = self.rho.to_dict()
        if self.family == "fgm_copula":
            d.update(theta=self.theta, theta_decay=self.theta_decay)
        return d

    @classmethod
    def from_dict(cls, d, name=""):
        d = dict(d)
        family = d.pop("family")
        marginal = Marginal(**d.pop("marginal", {"kind": "uniform01"}))
        rho = d.pop("rho", None)
        rho = RhoProfile(**rho) if rho is not None else None
        theta = d.pop("theta", 0.0)
        decay = d.pop("theta_decay", 1.0)
        if d:
            raise DomainError(f"unknown model fields: {sorted(d)}")
        return cls(family, marginal, rho, theta, decay, name=name)

    # structure ----------------------------------------------------------
    @property
    def delta_second_index_only(self) -> bool:
        """Whether ``Delta_{X_k, X_j} = Delta_{X_1, X_j}`` for all ``k < j``."""
        if self.family == "independent" or self.marginal.kind == "point_mass":
            return True
        if self.family == "gaussian_copula":
            return self.rho.kind == "second_index" or self.rho.kind == "exchangeable" or self.rho.value == 0.0
        if self.family == "fgm_copula":
            return self.theta == 0.0
        return False

    @property
    def law_depends_on_gap(self) -> bool:
        return self.family == "independent" or (self.family == "gaussian_copula" and self.rho.stationary)

    def fgm_theta_n(self, n):
        n = np.asarray(n, dtype=float)
        return (self.theta * np.power(self.theta_decay, n - 2.0))[()]

    def pair_theta(self, k, j):
        if k == 1:
            return float(self.fgm_theta_n(j))
        return float(self.fgm_theta_n(k) * self.fgm_theta_n(j) / 3.0)

    def pair_law(self, k: int, j: int) -> PairLaw:
        """Bivariate law of ``(X_k, X_j)`` for ``1 <= k < j``."""
        _check_pair(k, j)
        if self.family == "independent" or self.marginal.kind == "point_mass":
            return IndependentPair(self.marginal)
        if self.family == "paper_bernoulli":
            return BernoulliFlipPair(flip_contrast(k), flip_contrast(j))
        if self.family == "fgm_copula":
            th = self.pair_theta(k, j)
            return FGMPair(th, self.marginal) if th > 0 else IndependentPair(self.marginal)
        r = float(self.rho.rho(k, j))
        return GaussianPair(r, self.marginal) if r > 0 else IndependentPair(self.marginal)


def _check_pair(k, j):
    if not (1 <= k < j):
        raise DomainError(f"pair indices must satisfy 1 <= k < j, got k={k}, j={j}")


def flip_contrast(n):
    """``1 - 2 P(C_n = 1) = 2**(1-n)`` for the Bernoulli counterexample."""
    return math.ldexp(1.0, 1 - int(n))


def paper_bernoulli_joint(k: int, j: int, exact: bool = False):
    """Joint probability table of ``(X_k, X_j)`` in the Bernoulli counterexample.

    Row index is the value of ``X_k``, column index the value of ``X_j``.
    With ``exact=True`` the entries are :class:`fractions.Fraction`.
    """
    _check_pair(k, j)
    e = Fraction(1, 2 ** (k + j))
    q = Fraction(1, 4)
    table = [[q + e, q - e], [q - e, q + e]]
    if exact:
        return table
    return np.array([[float(v) for v in row] for row in table])


def analytic_delta(model: SequenceModel, k: int, j: int, x, y):
    """Closed-form ``Delta_{X_k, X_j}(x, y)``, or ``None`` when unavailable.

    Available for the independent, FGM and Bernoulli families. The Bernoulli
    surface equals ``2**-(k+j)`` on ``[0, 1)**2`` and vanishes elsewhere.
    """
    return model.pair_law(k, j).delta(x, y)


def sample_pairs(model: SequenceModel, k: int, j: int, size: int, stream):
    """``size`` iid copies of the pair ``(X_k, X_j)`` drawn from its bivariate law."""
    return model.pair_law(k, j).sample(int(size), StreamId(*stream))


def _gaussian_latent(profile: RhoProfile, n, stream):
    e = substream(stream, "idiosyncratic").standard_normal(n)
    v = profile.value
    if profile.kind == "exchangeable":
        w = substream(stream, "common").standard_normal()
        return math.sqrt(v) * w + math.sqrt(1.0 - v) * e
    if profile.kind == "geometric":
        drive = e.copy()
        drive[1:] *= math.sqrt(1.0 - v * v)
        return signal.lfilter([1.0], [1.0, -v], drive)
    # second_index: Z_j = S_j + sqrt(1 - c_j) e_j, S_j = sum_{m >= j} b_m W_m, Var S_j = c_j
    c = np.power(v, np.arange(n, dtype=float))  # c_j = v**(j-1)
    inc = np.empty(n)
    inc[:-1] = c[:-1] - c[1:]
    inc[-1] = c[-1]
    w = substream(stream, "common").standard_normal(n)
    s = np.cumsum((np.sqrt(inc) * w)[::-1])[::-1]
    return s + np.sqrt(1.0 - c) * e


def _draw(model: SequenceModel, n: int, stream) -> np.ndarray:
    m = model.marginal
    if m.kind == "point_mass":
        return np.full(n, m.param)
    if model.family == "independent":
        return m.sample(substream(stream, "marginal"), n)
    if model.family == "paper_bernoulli":
        b = substream(stream, "common").random() < 0.5
        idx = np.arange(1, n + 1)
        q = (1.0 - np.ldexp(1.0, 1 - idx)) / 2.0
        c = substream(stream, "flip").random(n) < q
        return (c ^ b).astype(float)
    if model.family == "fgm_copula":
        w = substream(stream, "common").random()
        v = substream(stream, "idiosyncratic").random(n)
        u = fgm_sequence_uniforms(w, v, model.fgm_theta_n(np.arange(1, n + 1)))
        return m.ppf(u)
    return m.from_normal(_gaussian_latent(model.rho, n, stream))


def fgm_sequence_uniforms(w, v, theta_n):
    """Copula coordinates of an FGM sequence given the common uniform ``w``."""
    u = fgm_conditional_inverse(v, theta_n * (1.0 - 2.0 * w))
    u[0] = w
    return u


def sample_path(model: SequenceModel, n: int, stream) -> SamplePath:
    """Draw ``X_1..X_n``; a pure function of ``(model, n, stream)``."""
    if int(n) < 1:
        raise DomainError(f"path length must be at least 1, got {n!r}")
    stream = StreamId(*stream)
    return SamplePath(_draw(model, int(n), stream), model.model_id, stream)


def sample_paths(model: SequenceModel, n: int, master_seed: int, paths: int, first_index: int = 0) -> np.ndarray:
    """Stack of ``paths`` independent paths (rows) with consecutive path indices."""
    return np.stack([_draw(model, int(n), StreamId(master_seed, first_index + i)) for i in range(paths)])
