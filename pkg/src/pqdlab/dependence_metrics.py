"""Quadrant dependence, the truncated covariance ``G`` and the series conditions.

Every series condition is a weighted double (or single) sum over pairs
``k < j`` of a one-dimensional integral of ``G_{kj}`` against a fixed kernel.
All of them reduce to the pair-law primitive ``clamped_cov``; pairs that share
a bivariate law are integrated together so the work grows with the number of
distinct laws rather than the number of pairs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _quadrature
from ._io import csv_text
from .core_types import MomentOrder, StreamId, WeightScheme, log_cap, weights as weight_values
from .exceptions import DomainError, InsufficientDataError, PreconditionError
from .pair_laws import PairLaw
from .pqd_generators import SequenceModel
from .rng import label_seed, substream

__all__ = [
    "CONDITION_IDS",
    "ConditionReport",
    "EmpiricalPairLaw",
    "GFunctional",
    "VERDICTS",
    "bootstrap_se",
    "empirical_delta",
    "eval_condition_2_16",
    "eval_condition_2_17_weak",
    "eval_condition_2_2",
    "eval_condition_2_8",
    "eval_condition_2_9",
    "eval_condition_3_4",
    "eval_pair_series",
    "g_functional",
    "kernel_2_9",
    "verdict_rule",
]

CONDITION_IDS = ("c2_2", "c2_8", "c2_9", "c2_16", "c2_17_weak", "c3_4", "t4_i", "t4_ii")
VERDICTS = ("converges", "diverges", "inconclusive")
MIN_PAIRS = 1000
DEFAULT_T = 1e9
DEFAULT_TOL = 1e-6
DEFAULT_BUDGET = 20000
CSV_COLUMNS = ("condition_id", "K", "partial_sum", "tail_estimate", "verdict")


# ---------------------------------------------------------------------------
# G functional and empirical quadrant dependence


def _check_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(~(t > 0)):
        raise DomainError("truncation level t must be > 0")
    return t


def _pairs(x, y):
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"paired samples differ in length: {x.size} vs {y.size}")
    if x.size < MIN_PAIRS:
        raise InsufficientDataError(f"need at least {MIN_PAIRS} pairs, got {x.size}")
    return x, y


def _clamped_sample_cov(x, y, lo1, hi1, lo2, hi2):
    """Sample covariance (``n - 1`` denominator) of the clamped pair for each set of limits."""
    lo1, hi1, lo2, hi2 = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (lo1, hi1, lo2, hi2)))
    out = np.empty(lo1.shape)
    flat = out.reshape(-1)
    n = x.size
    for i, (a, b, c, d) in enumerate(zip(lo1.reshape(-1), hi1.reshape(-1), lo2.reshape(-1), hi2.reshape(-1))):
        cx = np.clip(x, a, b)
        cy = np.clip(y, c, d)
        flat[i] = np.dot(cx - cx.mean(), cy - cy.mean()) / (n - 1)
    return out[()]


class GFunctional:
    """The map ``t -> G(t) = Cov(g_t(X), g_t(Y))`` for one pair.

    Use one of the constructors :meth:`analytic`, :meth:`empirical` or
    :meth:`tabulated`; instances are callable on scalars or arrays of ``t > 0``.
    """

    def __init__(self, fn, source, limit=math.nan):
        self._fn = fn
        self.source = source
        self.limit = float(limit)

    @classmethod
    def analytic(cls, model: SequenceModel, k: int, j: int):
        """Closed-form route: the integral of ``delta`` over ``[-t, t]^2``."""
        law = model.pair_law(k, j)
        if law.clamped_cov(1.0, 1.0, 1.0, 1.0) is None:
            raise PreconditionError(
                f"model {model.model_id} has no closed-form G for pair ({k}, {j}); use GFunctional.empirical"
            )
        return cls(law.g, "analytic", law.limit)

    @classmethod
    def empirical(cls, x, y):
        """Sample covariance of the truncated pairs; needs at least 1000 pairs."""
        x, y = _pairs(x, y)

        def fn(t):
            return _clamped_sample_cov(x, y, -t, t, -t, t)

        return cls(fn, "empirical", _clamped_sample_cov(x, y, -np.inf, np.inf, -np.inf, np.inf))

    @classmethod
    def tabulated(cls, t, g):
        """Piecewise-linear interpolation of a table, made nondecreasing by a running maximum.

        Values are held constant outside the tabulated range (``G(0+) = 0`` is
        not assumed).
        """
        t = _check_t(t).reshape(-1)
        g = np.asarray(g, dtype=float).reshape(-1)
        if t.size != g.size or t.size == 0:
            raise ValueError("tabulation needs matching, non-empty t and G arrays")
        if np.any(np.diff(t) <= 0):
            raise ValueError("tabulation grid must be strictly increasing")
        g = np.maximum.accumulate(g)

        def fn(s):
            return np.interp(s, t, g)[()]

        return cls(fn, "tabulated", g[-1])

    def __call__(self, t):
        return self._fn(_check_t(t))


def g_functional(pair: GFunctional, t):
    """Evaluate ``G(t)``; raises :class:`DomainError` for ``t <= 0``."""
    return pair(t)


def empirical_delta(x, y, px, py):
    """``H_n(px, py) - F_n(px) G_n(py)`` with right-continuous empirical cdfs."""
    x, y = _pairs(x, y)
    px = np.asarray(px, dtype=float)
    py = np.asarray(py, dtype=float)
    out = np.empty(np.broadcast(px, py).shape)
    flat = out.reshape(-1)
    for i, (a, b) in enumerate(zip(*(v.reshape(-1) for v in np.broadcast_arrays(px, py)))):
        ix = x <= a
        iy = y <= b
        flat[i] = np.mean(ix & iy) - np.mean(ix) * np.mean(iy)
    return out[()]


def bootstrap_se(x, y, t, replicates=64, stream=(0, 0)):
    """Nonparametric bootstrap standard error of the empirical ``G(t)``."""
    x, y = _pairs(x, y)
    t = float(_check_t(t))
    cx = np.clip(x, -t, t)
    cy = np.clip(y, -t, t)
    rng = substream(stream, "bootstrap")
    n = x.size
    stats = np.empty(replicates)
    for b in range(replicates):
        idx = rng.integers(0, n, n)
        bx, by = cx[idx], cy[idx]
        stats[b] = np.dot(bx - bx.mean(), by - by.mean()) / (n - 1)
    return float(np.std(stats, ddof=1))


class EmpiricalPairLaw(PairLaw):
    """Stand-in for a pair law without closed form: a fixed sample of the law."""

    def __init__(self, law: PairLaw, budget: int, master_seed: int = 0):
        if budget < MIN_PAIRS:
            raise InsufficientDataError(f"empirical budget must be at least {MIN_PAIRS}, got {budget}")
        self.base = law
        self.marginal = law.marginal
        self.budget = int(budget)
        stream = StreamId(master_seed, label_seed(*law.key))
        self.x, self.y = law.sample(self.budget, stream)

    @property
    def key(self):
        return ("empirical", self.budget) + tuple(self.base.key)

    def clamped_cov(self, lo1, hi1, lo2, hi2):
        return _clamped_sample_cov(self.x, self.y, lo1, hi1, lo2, hi2)

    def breakpoints(self):
        return self.base.breakpoints()


# ---------------------------------------------------------------------------
# report and verdict


@dataclass
class ConditionReport:
    """Partial sums of one series condition at a ladder of truncation levels."""

    condition_id: str
    K_values: np.ndarray
    partial_sums: np.ndarray
    tail_estimates: np.ndarray
    verdict: str
    parameters: dict = field(default_factory=dict)
    flags: tuple = ()

    def __post_init__(self):
        if self.condition_id not in CONDITION_IDS:
            raise ValueError(f"unknown condition id {self.condition_id!r}")
        if self.verdict not in VERDICTS:
            raise ValueError(f"unknown verdict {self.verdict!r}")
        self.K_values = np.asarray(self.K_values, dtype=int)
        self.partial_sums = np.asarray(self.partial_sums, dtype=float)
        self.tail_estimates = np.asarray(self.tail_estimates, dtype=float)

    @property
    def K(self) -> int:
        return int(self.K_values[-1])

    @property
    def tail_estimate(self) -> float:
        return float(self.tail_estimates[-1])

    @property
    def value(self) -> float:
        return float(self.partial_sums[-1])

    def partial_sum(self, K: int) -> float:
        hit = np.flatnonzero(self.K_values == K)
        if hit.size == 0:
            raise KeyError(f"no partial sum recorded at K={K}")
        return float(self.partial_sums[hit[0]])

    def rows(self):
        for K, ps, tail in zip(self.K_values, self.partial_sums, self.tail_estimates):
            yield {
                "condition_id": self.condition_id,
                "K": int(K),
                "partial_sum": float(ps),
                "tail_estimate": float(tail),
                "verdict": self.verdict,
            }

    def to_dict(self):
        return {
            "condition_id": self.condition_id,
            "K": self.K_values.tolist(),
            "partial_sum": self.partial_sums.tolist(),
            "tail_estimate": self.tail_estimates.tolist(),
            "verdict": self.verdict,
            "parameters": self.parameters,
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=True)

    def to_csv(self) -> str:
        return csv_text(CSV_COLUMNS, self.rows())


# largest ratio of successive dyadic increments accepted as geometric decay
DECAY_RATIO = 0.75


def verdict_rule(K_values, partial_sums, tail, tolerance=DEFAULT_TOL) -> str:
    """Heuristic convergence verdict from a ladder of partial sums.

    ``converges`` when the increment from ``K/2`` to ``K`` plus the tail bound
    is below ``tolerance``, or when the increments over the last three
    halvings of ``K`` are positive and shrink at least geometrically (each at
    most ``DECAY_RATIO`` times the one before), with the tail bound below
    ``tolerance``. ``diverges`` when those increments all exceed
    ``tolerance`` and none falls below half of their mean (a positive floor).
    Anything else is ``inconclusive``.
    """
    ps = dict(zip((int(k) for k in K_values), (float(s) for s in partial_sums)))
    K = max(ps)
    if not math.isfinite(ps[K]):
        return "diverges"
    chain = [K >> i for i in range(4) if (K >> i) in ps and (K >> i) >= 1]
    if len(chain) >= 2:
        inc = ps[chain[0]] - ps[chain[1]]
        if math.isfinite(tail) and inc + tail < tolerance:
            return "converges"
    if len(chain) == 4:
        incs = [ps[chain[i]] - ps[chain[i + 1]] for i in range(3)]
        # newest first: a summable dyadic block sequence shrinks by a fixed factor
        if math.isfinite(tail) and tail < tolerance and min(incs) > 0.0:
            if incs[0] <= DECAY_RATIO * incs[1] and incs[1] <= DECAY_RATIO * incs[2]:
                return "converges"
        if min(incs) > tolerance and min(incs) >= 0.5 * (sum(incs) / 3):
            return "diverges"
    return "inconclusive"


def _ladder(K):
    ks = {K >> i for i in range(4)}
    m = 2
    while m <= K:
        ks.add(m)
        m *= 2
    return np.array(sorted(k for k in ks if k >= 2), dtype=int)


# ---------------------------------------------------------------------------
# kernels


def kernel_2_9(t):
    """``1/(t^3 Log^2 t) + 1/((t v e) t^2 Log^3 t)`` with ``Log t = log(max(t, e))``."""
    t = np.asarray(t, dtype=float)
    L = log_cap(t)
    return (1.0 / (t**3 * L**2) + 1.0 / (np.maximum(t, math.e) * t**2 * L**3))[()]


def _tail_2_9(T):
    # bound of the kernel integral over [T, inf)
    if T >= math.e:
        L = math.log(T)
        return (1.0 / L**2 + 1.0 / L**3) / (2.0 * T * T)
    return 1.0 / (2.0 * T * T) + 1.0 / (math.e * T) + 1.0 / math.e**2


@dataclass(frozen=True)
class _Kind:
    kernel: object
    tail: object
    breaks: tuple
    functional: str  # "g" or "parts"


_KINDS = {
    "cube": _Kind(lambda t: t**-3.0, lambda T: 0.5 / (T * T), (), "g"),
    "log": _Kind(kernel_2_9, _tail_2_9, (math.e,), "g"),
    "square": _Kind(lambda t: t**-2.0, lambda T: 1.0 / T, (), "g"),
    "parts": _Kind(lambda t: t**-2.0, lambda T: 1.0 / T, (), "parts"),
}


def _functional(law, kind: _Kind):
    if kind.functional == "g":
        return law.g, list(law.breakpoints()), law.limit
    s = lambda t: np.sqrt(t)  # noqa: E731

    def parts(t):
        r = s(t)
        return law.clamped_cov(0.0, r, 0.0, r) + law.clamped_cov(-r, 0.0, -r, 0.0)

    limit = float(law.clamped_cov(0.0, np.inf, 0.0, np.inf) + law.clamped_cov(-np.inf, 0.0, -np.inf, 0.0))
    return parts, [b * b for b in law.breakpoints()], limit


class _LawCache:
    def __init__(self, model: SequenceModel, budget: int, master_seed: int):
        self.model = model
        self.budget = budget
        self.master_seed = master_seed
        self._laws = {}
        self.empirical = False

    def __call__(self, k, j):
        law = self.model.pair_law(k, j)
        key = law.key
        if key not in self._laws:
            if law.clamped_cov(1.0, 1.0, 1.0, 1.0) is None:
                self.empirical = True
                law = EmpiricalPairLaw(law, self.budget, self.master_seed)
            self._laws[key] = law
        return key, self._laws[key]


def _weights_array(w, K):
    if isinstance(w, WeightScheme):
        return np.abs(weight_values(w, K))
    a = np.abs(np.asarray(w, dtype=float).reshape(-1))
    if a.size < K:
        raise ValueError(f"weight array has {a.size} entries, need {K}")
    return a[:K]


def _finish(condition_id, K, columns, tails, tolerance, parameters, flags):
    ladder = _ladder(K)
    # columns[j] holds the compensated sum of all terms with second index j
    ps = np.array([math.fsum(columns[: k + 1]) for k in ladder])
    tl = np.array([math.fsum(tails[: k + 1]) for k in ladder])
    verdict = verdict_rule(ladder, ps, tl[-1], tolerance)
    return ConditionReport(condition_id, ladder, ps, tl, verdict, parameters, tuple(flags))


def eval_pair_series(
    model: SequenceModel,
    a,
    b,
    K: int,
    kind: str,
    lower,
    condition_id: str,
    T: float = DEFAULT_T,
    tolerance: float = DEFAULT_TOL,
    parameters=None,
    flags=(),
    empirical_budget: int = DEFAULT_BUDGET,
    master_seed: int = 0,
    first_only: bool = False,
):
    """``sum_{k<j<=K} |a_k b_j| integral_{lower(j)}^{T} w(t) F_{kj}(t) dt`` plus a tail bound.

    Parameters
    ----------
    a, b : WeightScheme or array_like
        Weights attached to the first and second index of each pair.
    kind : {"cube", "log", "square", "parts"}
        Kernel ``t^-3``, the log-corrected kernel of :func:`kernel_2_9`,
        ``t^-2``, or ``t^-2`` against ``G+(sqrt t) + G-(sqrt t)``.
    lower : callable
        Lower integration limit as a function of the second index.
    first_only : bool
        Restrict to pairs ``(1, j)``.

    The tail ``integral_T^inf`` of each pair is bounded by ``G(inf)`` times the
    kernel integral, which is valid because ``G`` is nondecreasing.
    """
    if K < 2:
        raise DomainError("pair truncation K must be >= 2")
    spec = _KINDS[kind]
    aw = _weights_array(a, K)
    bw = _weights_array(b, K)
    laws = _LawCache(model, empirical_budget, master_seed)
    groups = {}
    for j in range(2, K + 1):
        for k in range(1, 2 if first_only else j):
            key, law = laws(k, j)
            groups.setdefault(key, (law, []))[1].append((k, j))
    lows = {j: float(lower(j)) for j in range(2, K + 1)}
    columns = [[] for _ in range(K + 1)]
    tails = [[] for _ in range(K + 1)]
    for law, pairs in groups.values():
        fn, breaks, limit = _functional(law, spec)
        js = np.array([j for _, j in pairs])
        ks = np.array([k for k, _ in pairs])
        uniq = np.unique(js)
        L = np.array([lows[j] for j in uniq])
        if isinstance(law, EmpiricalPairLaw):
            vals = _quadrature.tail_integrals(lambda t: spec.kernel(t) * fn(t), L, T, breaks + list(spec.breaks), adaptive=False)
        else:
            vals = _quadrature.tail_integrals(lambda t: spec.kernel(t) * fn(t), L, T, breaks + list(spec.breaks))
        integral = dict(zip(uniq.tolist(), vals))
        for k, j in zip(ks.tolist(), js.tolist()):
            w = aw[k - 1] * bw[j - 1]
            if w == 0.0:
                continue
            columns[j].append(w * integral[j])
            tails[j].append(w * limit * spec.tail(max(T, lows[j])) if limit != 0.0 else 0.0)
    col = [math.fsum(c) for c in columns]
    tl = [math.fsum(c) for c in tails]
    flags = list(flags)
    if laws.empirical:
        flags.append("empirical_G")
    params = {"T": T, "tolerance": tolerance, "kernel": kind}
    params.update(parameters or {})
    if laws.empirical:
        params["empirical_budget"] = empirical_budget
        params["master_seed"] = master_seed
    return _finish(condition_id, K, col, tl, tolerance, params, flags)


def _weight_flags(weights):
    if isinstance(weights, WeightScheme) and not weights.is_valid:
        return ["weights_not_cesaro_bounded"]
    return []


def _scheme_id(weights):
    return weights.scheme_id if isinstance(weights, WeightScheme) else "array"


def eval_condition_2_2(model, weights=None, K=100, T=DEFAULT_T, tolerance=DEFAULT_TOL, **kw):
    """``sum_{k<j} |a_k a_j| integral_j^inf t^-3 G_{kj}(t) dt``."""
    weights = WeightScheme.constant(1.0) if weights is None else weights
    return eval_pair_series(
        model, weights, weights, K, "cube", float, "c2_2", T, tolerance,
        {"weights": _scheme_id(weights)}, _weight_flags(weights), **kw,
    )


def eval_condition_2_8(model, weights=None, K=100, tolerance=DEFAULT_TOL, **kw):
    """``sum_{k<j} |a_k a_j| j^-2 integral over [-k, k] x [-j, j] of delta``."""
    if K < 2:
        raise DomainError("pair truncation K must be >= 2")
    weights = WeightScheme.constant(1.0) if weights is None else weights
    aw = _weights_array(weights, K)
    laws = _LawCache(model, kw.get("empirical_budget", DEFAULT_BUDGET), kw.get("master_seed", 0))
    columns = [0.0] * (K + 1)
    for j in range(2, K + 1):
        terms = []
        for k in range(1, j):
            w = aw[k - 1] * aw[j - 1]
            if w == 0.0:
                continue
            _, law = laws(k, j)
            terms.append(w * float(law.clamped_cov(-k, k, -j, j)) / (j * j))
        columns[j] = math.fsum(terms)
    flags = _weight_flags(weights) + (["empirical_G"] if laws.empirical else [])
    params = {"tolerance": tolerance, "weights": _scheme_id(weights)}
    return _finish("c2_8", K, columns, [0.0] * (K + 1), tolerance, params, flags)


def eval_condition_2_9(model, weights=None, p=1.5, C=1.0, K=100, T=DEFAULT_T, tolerance=DEFAULT_TOL, **kw):
    """Log-corrected series with lower limit ``C j^{1/p} / Log^{2/p} j``.

    Requires ``1 < p < 2`` and ``C > 0``.
    """
    p = p.p if isinstance(p, MomentOrder) else float(p)
    if not 1.0 < p < 2.0:
        raise DomainError(f"moment order must satisfy 1 < p < 2, got p={p}")
    if not C > 0:
        raise DomainError(f"constant C must be > 0, got {C}")
    weights = WeightScheme.constant(1.0) if weights is None else weights

    def lower(j):
        return C * j ** (1.0 / p) / float(log_cap(j)) ** (2.0 / p)

    return eval_pair_series(
        model, weights, weights, K, "log", lower, "c2_9", T, tolerance,
        {"p": p, "C": C, "weights": _scheme_id(weights)}, _weight_flags(weights), **kw,
    )


def _require_second_index(model):
    if not model.delta_second_index_only:
        raise PreconditionError(
            f"model {model.model_id} does not satisfy delta_{{k,j}} = delta_{{1,j}} for all k < j; "
            "the single-sum conditions only apply when the dependence of a pair is set by its second index"
        )


def eval_condition_2_16(model, K=100, T=DEFAULT_T, tolerance=DEFAULT_TOL, **kw):
    """``sum_{j>=2} integral_j^inf G_{1j}(v) / v^2 dv`` (unit weights)."""
    _require_second_index(model)
    one = WeightScheme.constant(1.0)
    return eval_pair_series(model, one, one, K, "square", float, "c2_16", T, tolerance, {}, first_only=True, **kw)


def eval_condition_2_17_weak(model, K=100, tolerance=DEFAULT_TOL, **kw):
    """``sum_{j>=2} G_{1j}(j) / j``."""
    _require_second_index(model)
    if K < 2:
        raise DomainError("pair truncation K must be >= 2")
    laws = _LawCache(model, kw.get("empirical_budget", DEFAULT_BUDGET), kw.get("master_seed", 0))
    columns = [0.0] * (K + 1)
    for j in range(2, K + 1):
        _, law = laws(1, j)
        columns[j] = float(law.g(float(j))) / j
    flags = ["empirical_G"] if laws.empirical else []
    return _finish("c2_17_weak", K, columns, [0.0] * (K + 1), tolerance, {"tolerance": tolerance}, flags)


def eval_condition_3_4(error_model, K=100, T=DEFAULT_T, tolerance=DEFAULT_TOL, **kw):
    """``sum_{k<j} integral_j^inf t^-2 [G+_{kj}(sqrt t) + G-_{kj}(sqrt t)] dt``.

    ``G+`` and ``G-`` are the truncated covariances of the positive parts
    ``max(e, 0)`` and of the negative parts ``max(-e, 0)``; both are clamped
    covariances of the original pair over one quadrant.
    """
    one = WeightScheme.constant(1.0)
    return eval_pair_series(error_model, one, one, K, "parts", float, "c3_4", T, tolerance, {}, **kw)
