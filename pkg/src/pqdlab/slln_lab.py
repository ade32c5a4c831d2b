"""Monte Carlo diagnostics for strong laws of weighted sums.

Almost-sure convergence cannot be observed directly, so it is measured by the
blockwise sup-error ``max_{N <= m <= 2N} |T_m|`` over dyadic blocks: if
``T_n -> 0`` almost surely these block maxima must shrink as ``N`` doubles.
"""
from __future__ import annotations

import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from ._io import csv_text, loglog_svg
from .core_types import MomentOrder, SamplePath, StreamId, WeightScheme, log_cap, weights as weight_values
from .exceptions import DomainError
from .pqd_generators import SequenceModel, sample_path

__all__ = [
    "ConvergenceReport",
    "NormalizerKind",
    "WeightedSumTransformer",
    "compensated_prefix_dot",
    "convergence_diagnostic",
    "counterexample_probe",
    "weighted_sum_path",
]

CSV_COLUMNS = ("checkpoint_n", "median_sup", "p95_sup", "decay_ratio")
MIN_PATHS = 30
MIN_CHECKPOINT = 1 << 10


@dataclass(frozen=True)
class NormalizerKind:
    """``kolmogorov_n`` divides by ``n``; ``mz_p`` by ``n^{1/p} Log n`` with ``1 < p < 2``."""

    kind: str = "kolmogorov_n"
    p: float | None = None

    def __post_init__(self):
        if self.kind == "kolmogorov_n":
            if self.p is not None:
                raise DomainError("kolmogorov_n takes no moment order")
        elif self.kind == "mz_p":
            p = self.p.p if isinstance(self.p, MomentOrder) else self.p
            if p is None or not 1.0 < float(p) < 2.0:
                raise DomainError(f"mz_p normalizer requires 1 < p < 2, got p={p}")
            object.__setattr__(self, "p", float(p))
        else:
            raise DomainError(f"unknown normalizer {self.kind!r}")

    @classmethod
    def kolmogorov(cls):
        return cls("kolmogorov_n")

    @classmethod
    def mz(cls, p):
        return cls("mz_p", p)

    @classmethod
    def parse(cls, text):
        """Accepts ``kolmogorov_n``, ``mz_p(1.5)`` or an existing instance."""
        if isinstance(text, cls):
            return text
        text = str(text).strip()
        if text == "kolmogorov_n":
            return cls.kolmogorov()
        m = re.fullmatch(r"mz_p\(\s*([^)]+?)\s*\)", text)
        if m:
            try:
                p = float(m.group(1))
            except ValueError:
                raise DomainError(f"bad moment order in {text!r}") from None
            return cls.mz(p)
        raise DomainError(f"unknown normalizer {text!r}; expected kolmogorov_n or mz_p(<p>)")

    def __str__(self):
        return self.kind if self.kind == "kolmogorov_n" else f"mz_p({self.p!r})"

    def norm(self, n):
        n = np.asarray(n, dtype=float)
        if self.kind == "kolmogorov_n":
            return n[()]
        return (n ** (1.0 / self.p) * log_cap(n))[()]


@numba.njit(cache=True, nogil=True)
def _two_prod_err(u, v, p):
    # exact error of p = fl(u * v), Dekker/Veltkamp splitting (no FMA)
    split = 134217729.0  # 2**27 + 1
    t = split * u
    uh = t - (t - u)
    ul = u - uh
    t = split * v
    vh = t - (t - v)
    vl = v - vh
    return ((uh * vh - p) + uh * vl + ul * vh) + ul * vl


@numba.njit(cache=True, nogil=True)
def _prefix_kernel(a, x, mu, scale):
    n = x.shape[0]
    out = np.empty(n)
    s = 0.0
    c = 0.0
    for i in range(n):
        d = x[i] - mu
        # TwoSum for the centring
        dd = d - x[i]
        dlo = (x[i] - (d - dd)) + (-mu - dd)
        ai = a[i]
        p = ai * d
        perr = _two_prod_err(ai, d, p) + ai * dlo
        # TwoSum(s, p)
        snew = s + p
        bb = snew - s
        serr = (s - (snew - bb)) + (p - bb)
        s = snew
        c += serr + perr
        if scale.shape[0] == 0:
            out[i] = s + c
        else:
            # quotient of the double-double (s, c) by scale[i], corrected once
            q = (s + c) / scale[i]
            pq = q * scale[i]
            out[i] = q + (((s - pq) - _two_prod_err(q, scale[i], pq)) + c) / scale[i]
    return out


def compensated_prefix_dot(a, x, mu, scale=None):
    """Prefix sums ``sum_{k<=n} a_k (x_k - mu)`` in doubled precision.

    Each product is split exactly (Dekker/Veltkamp TwoProduct) and accumulated
    with TwoSum, so every prefix is as accurate as if computed in twice the
    working precision and then rounded once. With ``scale`` the n-th prefix
    is divided by ``scale[n-1]`` before that final rounding.
    """
    scale = np.empty(0) if scale is None else np.ascontiguousarray(scale, dtype=float)
    return _prefix_kernel(np.ascontiguousarray(a, dtype=float), np.ascontiguousarray(x, dtype=float), float(mu), scale)


def _as_values(path):
    if isinstance(path, SamplePath):
        return path.values
    v = np.asarray(path, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise DomainError("a path must be a non-empty 1-D array")
    return v


def weighted_sum_path(path, weights=None, normalizer=None, mean=None):
    """``T_n = sum_{k<=n} a_k (X_k - E X) / norm(n)`` for ``n = 1..N``.

    Parameters
    ----------
    path : SamplePath or array_like
        The realised values ``X_1..X_N``.
    weights : WeightScheme or array_like, optional
        Defaults to unit weights.
    normalizer : NormalizerKind or str, optional
        Defaults to ``kolmogorov_n``.
    mean : float, optional
        Exact marginal mean used for centring. Required when ``path`` is a
        plain array; for a :class:`SamplePath` pass it explicitly too, since
        paths do not carry their marginal.
    """
    x = _as_values(path)
    if mean is None:
        raise DomainError("weighted sums are centred by the exact marginal mean; pass mean=")
    norm = NormalizerKind.parse(normalizer or "kolmogorov_n")
    if weights is None:
        a = np.ones(x.size)
    elif isinstance(weights, WeightScheme):
        a = weight_values(weights, x.size)
    else:
        a = np.asarray(weights, dtype=float).reshape(-1)
        if a.size < x.size:
            raise DomainError(f"need {x.size} weights, got {a.size}")
        a = a[: x.size]
    scale = np.asarray(norm.norm(np.arange(1, x.size + 1)), dtype=float).reshape(-1)
    return compensated_prefix_dot(a, x, mean, scale)


def _block_sups(t, checkpoints):
    abs_t = np.abs(t)
    # T_m is stored at index m - 1; block [N, 2N] inclusive
    return np.array([abs_t[n - 1 : 2 * n].max() for n in checkpoints])


@dataclass
class ConvergenceReport:
    """Blockwise sup-errors of many simulated paths at dyadic checkpoints."""

    checkpoints: np.ndarray
    sup_errors: np.ndarray  # (paths, checkpoints)
    model_id: str = ""
    weights_id: str = ""
    normalizer: str = "kolmogorov_n"
    master_seed: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.checkpoints = np.asarray(self.checkpoints, dtype=np.int64)
        self.sup_errors = np.asarray(self.sup_errors, dtype=float)
        if np.any(np.diff(self.checkpoints) <= 0):
            raise ValueError("checkpoints must be strictly increasing")

    @property
    def paths(self) -> int:
        return self.sup_errors.shape[0]

    @property
    def median_sup(self):
        return np.median(self.sup_errors, axis=0)

    @property
    def p95_sup(self):
        return np.percentile(self.sup_errors, 95, axis=0)

    @property
    def block_ratios(self):
        """``median(N_{i+1}) / median(N_i)`` for consecutive checkpoints (NaN at 0/0)."""
        med = self.median_sup
        with np.errstate(divide="ignore", invalid="ignore"):
            return med[1:] / med[:-1]

    @property
    def decay_ratio(self) -> float:
        """Per-doubling decay factor: geometric mean of the block ratios.

        Equals ``(median_last / median_first)^(1 / doublings)``; zero medians
        (degenerate models) give ``0``.
        """
        med = self.median_sup
        if med.size < 2:
            return math.nan
        if med[0] == 0.0:
            return 0.0
        doublings = math.log2(self.checkpoints[-1] / self.checkpoints[0])
        return float((med[-1] / med[0]) ** (1.0 / doublings))

    def strictly_decreasing(self) -> bool:
        med = self.median_sup
        return bool(np.all(np.diff(med) < 0))

    def reduction_factor(self) -> float:
        """``median(last checkpoint) / median(first checkpoint)``."""
        med = self.median_sup
        return float(med[-1] / med[0]) if med[0] > 0 else 0.0

    def rows(self):
        med = self.median_sup
        p95 = self.p95_sup
        ratios = np.concatenate([[np.nan], self.block_ratios])
        for n, m, q, r in zip(self.checkpoints, med, p95, ratios):
            yield {"checkpoint_n": int(n), "median_sup": float(m), "p95_sup": float(q), "decay_ratio": float(r)}

    def to_csv(self) -> str:
        return csv_text(CSV_COLUMNS, self.rows())

    def to_dict(self):
        return {
            "model_id": self.model_id,
            "weights": self.weights_id,
            "normalizer": self.normalizer,
            "master_seed": self.master_seed,
            "paths": self.paths,
            "checkpoint_n": self.checkpoints.tolist(),
            "median_sup": self.median_sup.tolist(),
            "p95_sup": self.p95_sup.tolist(),
            "block_ratios": [None if math.isnan(r) else r for r in self.block_ratios.tolist()],
            "decay_ratio": self.decay_ratio,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_svg(self) -> str:
        return loglog_svg(
            self.checkpoints,
            {"median sup-error": self.median_sup, "95th percentile": self.p95_sup},
            title=f"{self.model_id} / {self.normalizer}",
            xlabel="block start N",
            ylabel="max |T_m| on [N, 2N]",
        )


def _checkpoints(n_max):
    n_max = int(n_max)
    if n_max < MIN_CHECKPOINT or n_max & (n_max - 1):
        raise DomainError(f"n_max must be a power of two >= {MIN_CHECKPOINT}, got {n_max}")
    return 1 << np.arange(10, n_max.bit_length(), dtype=np.int64)


def _run_paths(model, weights, normalizer, checkpoints, indices, master_seed, workers):
    length = 2 * int(checkpoints[-1])
    a = np.ascontiguousarray(weight_values(weights, length))
    norm = NormalizerKind.parse(normalizer)
    mu = float(model.marginal.mean)
    scale = norm.norm(np.arange(1, length + 1))

    def one(i):
        x = sample_path(model, length, StreamId(master_seed, i)).values
        t = compensated_prefix_dot(a, x, mu, scale)
        return _block_sups(t, checkpoints)

    indices = list(indices)
    if workers <= 1:
        rows = [one(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map preserves input order, so the reduction is keyed by path index
            rows = list(pool.map(one, indices))
    return np.array(rows).reshape(len(indices), len(checkpoints))


def convergence_diagnostic(
    model: SequenceModel,
    weights: WeightScheme | None = None,
    normalizer="kolmogorov_n",
    n_max: int = 1 << 14,
    paths: int = 100,
    master_seed: int = 0,
    workers: int = 1,
) -> ConvergenceReport:
    """Simulate ``paths`` independent paths of length ``2 n_max`` and collect block sup-errors.

    Path ``i`` uses stream ``(master_seed, i)``, so results do not depend on
    ``workers``.
    """
    if paths < MIN_PATHS:
        raise DomainError(f"need at least {MIN_PATHS} paths, got {paths}")
    weights = WeightScheme.constant(1.0) if weights is None else weights
    normalizer = NormalizerKind.parse(normalizer)
    checkpoints = _checkpoints(n_max)
    sups = _run_paths(model, weights, normalizer, checkpoints, range(paths), master_seed, int(workers))
    meta = {"weights_valid": bool(weights.is_valid)}
    return ConvergenceReport(checkpoints, sups, model.model_id, weights.scheme_id, str(normalizer), master_seed, meta)


def counterexample_probe(
    model: SequenceModel,
    weights: WeightScheme | None = None,
    normalizer="kolmogorov_n",
    n_max: int = 1 << 14,
    paths: int = 100,
    master_seed: int = 0,
    workers: int = 1,
    condition_K: int = 64,
) -> ConvergenceReport:
    """Negative control: the same simulation, annotated with why the hypotheses fail.

    The report metadata records whether the weights are Cesaro-bounded and
    the verdict of the pairwise covariance series for this model.
    """
    from .dependence_metrics import eval_condition_2_2

    report = convergence_diagnostic(model, weights, normalizer, n_max, paths, master_seed, workers)
    weights = WeightScheme.constant(1.0) if weights is None else weights
    cond = eval_condition_2_2(model, weights, K=condition_K)
    report.metadata.update({"control": "negative", "c2_2_verdict": cond.verdict, "c2_2_K": condition_K})
    return report


class WeightedSumTransformer(TransformerMixin, BaseEstimator):
    """Maps each row (a path ``X_1..X_N``) to its normalised weighted sums ``T_1..T_N``.

    Parameters
    ----------
    weights : WeightScheme, optional
        Unit weights when omitted.
    normalizer : str or NormalizerKind
        ``"kolmogorov_n"`` or ``"mz_p(<p>)"``.
    mean : float
        Exact marginal mean used for centring (no sample means).
    """

    def __init__(self, weights=None, normalizer="kolmogorov_n", mean=0.0):
        self.weights = weights
        self.normalizer = normalizer
        self.mean = mean

    def fit(self, X, y=None):
        validate_data(self, X, dtype=float)
        self.normalizer_ = NormalizerKind.parse(self.normalizer)
        return self

    def transform(self, X):
        check_is_fitted(self, "normalizer_")
        X = validate_data(self, X, dtype=float, reset=False)
        return np.stack([weighted_sum_path(row, self.weights, self.normalizer_, self.mean) for row in X])
