"""Regression estimators under dependent errors and their design diagnostics.

Covers the errors-in-variables line ``eta = alpha + beta x + eps``,
``xi = x + delta`` (regressor observed with noise), ordinary least squares in
the multiple model ``y = X beta + eps``, and the one-regressor ridge and
shrinkage estimators with data-driven penalty ``kappa = sigma2_hat / beta_hat^2``.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from ._io import csv_text, loglog_svg
from .core_types import StreamId, log_cap
from .dependence_metrics import eval_pair_series
from .exceptions import DegenerateDesignError, DomainError, SingularMatrixError
from .linalg import cholesky, cho_solve, dot2, jacobi_eigenvalues
from .pqd_generators import SequenceModel, sample_path
from .rng import label_seed, substream

__all__ = [
    "DesignMatrix",
    "DesignRule",
    "EIVModel",
    "EIVRegressor",
    "EstimatorTrace",
    "LeastSquaresRegressor",
    "RegressionSpec",
    "RidgeResult",
    "RidgeShrinkageRegressor",
    "check_eiv_design",
    "check_theorem4_conditions",
    "consistency_experiment",
    "decay_verdict",
    "eiv_estimates",
    "eiv_fit",
    "ls_estimate",
    "ridge_estimate",
    "shrinkage_estimate",
    "spectral_radius_inv",
]

ESTIMATORS = ("eiv_beta", "eiv_alpha", "ls", "ridge", "shrinkage")
KAPPA_FLOOR = 1e-150  # below this |beta_hat|, beta_hat**2 underflows and kappa is taken as +inf


# ---------------------------------------------------------------------------
# designs


_RULES = {
    "ones": 0,
    "constant": 1,
    "linear": 1,
    "alternating": 1,
    "power": 1,
    "cosine": 2,
    "random_normal_power": 1,
}


@dataclass(frozen=True)
class DesignRule:
    """A regressor column ``x_k = f(k)``.

    Kinds and parameters:

    ``ones`` ``()``; ``constant`` ``(c,)``; ``linear`` ``(slope,)`` gives
    ``slope * k``; ``alternating`` ``(c,)`` gives ``c (-1)^k``; ``power``
    ``(exponent,)`` gives ``k**exponent``; ``cosine`` ``(freq, phase)``;
    ``random_normal_power`` ``(exponent,)`` gives ``k**exponent * Z_k`` with
    ``Z_k`` iid standard normal from the design stream (the only stochastic
    kind).
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in _RULES:
            raise DomainError(f"unknown design kind {self.kind!r}; expected one of {sorted(_RULES)}")
        params = tuple(float(v) for v in self.params)
        if len(params) != _RULES[self.kind]:
            raise DomainError(f"design {self.kind!r} takes {_RULES[self.kind]} parameter(s), got {len(params)}")
        object.__setattr__(self, "params", params)

    @property
    def random(self) -> bool:
        return self.kind == "random_normal_power"

    @property
    def rule_id(self) -> str:
        if not self.params:
            return self.kind
        return f"{self.kind}({','.join(repr(p) for p in self.params)})"

    def to_dict(self):
        return {"kind": self.kind, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d):
        if isinstance(d, str):
            return cls(d)
        return cls(d["kind"], tuple(d.get("params", ())))

    def values(self, n: int, stream=None, column: int = 0) -> np.ndarray:
        """``x_1..x_n``; stochastic kinds need ``stream`` and draw from their own substream."""
        k = np.arange(1, int(n) + 1, dtype=float)
        if self.kind == "ones":
            return np.ones(k.size)
        if self.kind == "constant":
            return np.full(k.size, self.params[0])
        if self.kind == "linear":
            return self.params[0] * k
        if self.kind == "alternating":
            return np.where(k % 2 == 0, self.params[0], -self.params[0])
        if self.kind == "power":
            return k ** self.params[0]
        if self.kind == "cosine":
            return np.cos(self.params[0] * k + self.params[1])
        if stream is None:
            raise DomainError("a random design needs a stream")
        seed, index = StreamId(*stream)
        rng = substream(StreamId(label_seed(seed, "design", column), index), "design")
        return k ** self.params[0] * rng.standard_normal(k.size)


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """An ``n x p`` regressor matrix with ``n >= p >= 1``."""

    entries: np.ndarray

    def __post_init__(self):
        x = np.array(self.entries, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise DomainError(f"design must be a 2-D array, got shape {x.shape}")
        if x.shape[1] < 1 or x.shape[0] < x.shape[1]:
            raise DomainError(f"design must be n x p with n >= p >= 1, got n_samples={x.shape[0]}, p={x.shape[1]}")
        if not np.all(np.isfinite(x)):
            raise DomainError("design entries must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "entries", x)

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def p(self):
        return self.entries.shape[1]

    def gram(self):
        x = self.entries
        p = self.p
        g = np.empty((p, p))
        for i in range(p):
            for j in range(i, p):
                g[i, j] = g[j, i] = dot2(x[:, i], x[:, j])
        return g

    @classmethod
    def from_rules(cls, rules, n, stream=None):
        return cls(np.column_stack([r.values(n, stream, c) for c, r in enumerate(rules)]))


def _matrix(X):
    return X if isinstance(X, DesignMatrix) else DesignMatrix(X)


# ---------------------------------------------------------------------------
# errors-in-variables


@dataclass(frozen=True)
class EIVModel:
    """``eta_k = alpha + beta x_k + eps_k`` observed with ``xi_k = x_k + delta_k``."""

    alpha: float
    beta: float
    x_design: DesignRule
    eps_model: SequenceModel
    delta_model: SequenceModel

    def simulate(self, n: int, stream):
        """``(xi, eta)`` of length ``n``; eps and delta use independent derived streams."""
        seed, index = StreamId(*stream)
        x = self.x_design.values(n, (seed, index))
        eps = sample_path(self.eps_model, n, (label_seed(seed, "eps"), index)).values
        delta = sample_path(self.delta_model, n, (label_seed(seed, "delta"), index)).values
        eps = eps - self.eps_model.marginal.mean
        delta = delta - self.delta_model.marginal.mean
        return x + delta, self.alpha + self.beta * x + eps


def eiv_fit(xi, eta):
    """Least-squares slope and intercept of ``eta`` on the observed regressor ``xi``.

    ``beta_hat = sum (xi - mean xi)(eta - mean eta) / sum (xi - mean xi)^2`` and
    ``alpha_hat = mean eta - beta_hat mean xi``.
    """
    xi = np.asarray(xi, dtype=float).reshape(-1)
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if xi.shape != eta.shape or xi.size < 2:
        raise DomainError("need two equal-length samples with n >= 2")
    n = xi.size
    xbar = math.fsum(xi) / n
    ybar = math.fsum(eta) / n
    dx = xi - xbar
    sxx = dot2(dx, dx)
    if sxx == 0.0:
        raise DegenerateDesignError("observed regressor has zero spread: sum (xi - mean xi)^2 = 0")
    beta = dot2(dx, eta - ybar) / sxx
    return beta, ybar - beta * xbar


def eiv_estimates(model: EIVModel, n: int, stream):
    """``(beta_hat, alpha_hat)`` from one simulated sample of size ``n``."""
    xi, eta = model.simulate(n, stream)
    return eiv_fit(xi, eta)


def decay_verdict(medians, factor=0.5) -> str:
    """``exact`` when every median is 0; ``decays`` when strictly decreasing and
    the last is at most ``factor`` times the first; otherwise ``no_decay``."""
    m = np.asarray(medians, dtype=float)
    if np.all(m == 0.0):
        return "exact"
    if m.size >= 2 and np.all(np.isfinite(m)) and np.all(np.diff(m) < 0) and m[-1] <= factor * m[0]:
        return "decays"
    return "no_decay"


def _o1_verdict(seq) -> bool:
    s = np.asarray(seq, dtype=float)
    if not np.all(np.isfinite(s)):
        return False
    if s[0] == 0.0:
        return bool(np.all(s == 0.0))
    return bool(np.all(np.diff(s) <= 0) and s[-1] <= 0.1 * s[0])


def check_eiv_design(x_design, n_grid):
    """Ratios ``n / s_n`` and ``n |xbar| (|xbar| v 1) / s_n`` on a grid, with o(1) verdicts.

    ``s_n = sum (x_k - xbar_n)^2``. The o(1) verdict asks for a nonincreasing
    sequence that falls at least tenfold across the grid. ``xbar_bounded``
    reports whether ``|xbar_n|`` stays within twice its first value (or 1);
    when it does, the intercept condition follows from the slope condition.
    """
    rule = x_design if isinstance(x_design, DesignRule) else DesignRule.from_dict(x_design)
    grid = np.asarray(sorted(int(n) for n in n_grid))
    x = rule.values(int(grid[-1]), (0, 0))
    s, xbar, r1, r2 = [], [], [], []
    for n in grid:
        xs = x[:n]
        mean = math.fsum(xs) / n
        d = xs - mean
        sn = dot2(d, d)
        s.append(sn)
        xbar.append(mean)
        r1.append(n / sn if sn > 0 else math.inf)
        r2.append(n * abs(mean) * max(abs(mean), 1.0) / sn if sn > 0 else math.inf)
    xbar_bounded = bool(max(abs(v) for v in xbar) <= 2.0 * max(abs(xbar[0]), 1.0))
    beta_ok = _o1_verdict(r1)
    alpha_ok = beta_ok and (_o1_verdict(r2) or xbar_bounded)
    return {
        "n": grid,
        "s_n": np.array(s),
        "xbar_n": np.array(xbar),
        "ratio_beta": np.array(r1),
        "ratio_alpha": np.array(r2),
        "beta_condition": beta_ok,
        "alpha_condition": alpha_ok,
        "xbar_bounded": xbar_bounded,
    }


# ---------------------------------------------------------------------------
# multiple regression


def ls_estimate(X, y):
    """Least squares ``beta_hat`` from the normal equations via Cholesky.

    Raises :class:`SingularMatrixError` (naming the failed pivot) when
    ``X'X`` is not positive definite.
    """
    X = _matrix(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != X.n:
        raise DomainError(f"y has {y.size} entries, design has {X.n} rows")
    g = X.gram()
    rhs = np.array([dot2(X.entries[:, j], y) for j in range(X.p)])
    return cho_solve(cholesky(g), rhs)


def spectral_radius_inv(X) -> float:
    """``rho((X'X)^-1) = 1 / lambda_min(X'X)`` by cyclic Jacobi (``p <= 16``)."""
    X = _matrix(X)
    g = X.gram()
    lam = jacobi_eigenvalues(g, tol=1e-12)[0]
    if not lam > 0:
        raise SingularMatrixError(1, float(lam))
    return 1.0 / lam


def _inverse_diagonal(g):
    L = cholesky(g)
    p = g.shape[0]
    return np.array([cho_solve(L, np.eye(p)[j])[j] for j in range(p)])


def _bounded_verdict(seq) -> bool:
    s = np.asarray(seq, dtype=float)
    return bool(np.all(np.isfinite(s)) and s[-1] <= 2.0 * s[0])


def check_theorem4_conditions(
    design, r=1.0, variant="i", n_grid=(1000, 10000, 100000), error_model=None, K=100, C=1.0, T=1e9, tolerance=1e-6
):
    """Design-rate sequences and the weighted covariance series for bounded-design least squares.

    Variant ``i`` (``r = 1``) tracks ``n [(X'X)^-1]_jj`` and the ``t^-3``
    series; variant ``ii`` (``1 < r < 2``) tracks ``n^{1/r} Log n [(X'X)^-1]_jj``
    and the log-corrected series with lower limit ``C l^{1/r} / Log^{2/r} l``.
    The double sum over column pairs ``(i, j)`` of weights ``|x_ki x_lj|``
    factorises into row sums, so a single series with ``w_k = sum_i |x_ki|``
    is evaluated.

    Returns
    -------
    report : ConditionReport or None
        ``None`` when no error model is given.
    diagnostics : dict
        Scaled diagonal sequences per column, boundedness verdicts and the
        grid maximum of ``sum_k x_kj^2 / n`` (a diagnostic, not a certificate).
    """
    rules = [design] if isinstance(design, DesignRule) else list(design)
    if variant not in ("i", "ii"):
        raise DomainError(f"variant must be 'i' or 'ii', got {variant!r}")
    r = float(r)
    if variant == "i" and r != 1.0:
        raise DomainError("variant i is the r = 1 case")
    if variant == "ii" and not 1.0 < r < 2.0:
        raise DomainError(f"variant ii requires 1 < r < 2, got r={r}")
    grid = np.asarray(sorted(int(n) for n in n_grid))
    n_max = max(int(grid[-1]), K)
    X = np.column_stack([rule.values(n_max, (0, 0), c) for c, rule in enumerate(rules)])
    scaled = []
    second_moment = []
    for n in grid:
        M = DesignMatrix(X[:n])
        diag = _inverse_diagonal(M.gram())
        rate = float(n) if variant == "i" else n ** (1.0 / r) * float(log_cap(n))
        scaled.append(rate * diag)
        second_moment.append(np.sum(X[:n] ** 2, axis=0) / n)
    scaled = np.array(scaled)
    diagnostics = {
        "n": grid,
        "scaled_inverse_diagonal": scaled,
        "bounded": [_bounded_verdict(scaled[:, j]) for j in range(len(rules))],
        "max_mean_square": np.max(np.array(second_moment), axis=0),
    }
    diagnostics["design_condition"] = all(diagnostics["bounded"])
    report = None
    if error_model is not None:
        w = np.sum(np.abs(X[:K]), axis=1)
        if variant == "i":
            report = eval_pair_series(error_model, w, w, K, "cube", float, "t4_i", T, tolerance, {"r": r})
        else:

            def lower(j):
                return C * j ** (1.0 / r) / float(log_cap(j)) ** (2.0 / r)

            report = eval_pair_series(error_model, w, w, K, "log", lower, "t4_ii", T, tolerance, {"r": r, "C": C})
    return report, diagnostics


# ---------------------------------------------------------------------------
# ridge and shrinkage


@dataclass(frozen=True)
class RidgeResult:
    gamma_hat: float
    kappa: float
    sigma2_hat: float
    beta_hat: float
    sxx: float
    sxy: float
    degenerate: bool = False

    @property
    def theta_hat(self) -> float:
        """Shrinkage estimate ``beta_hat / (1 + kappa / sxx)``."""
        if self.degenerate:
            return 0.0
        return self.beta_hat / (1.0 + self.kappa / self.sxx)


def _accurate_quotient(num, hi, lo):
    """``num / (hi + lo)`` with one Newton correction for the low part."""
    q = num / hi
    # residual num - q*hi computed exactly via Veltkamp splitting
    split = 134217729.0
    t = split * q
    qh = t - (t - q)
    ql = q - qh
    t = split * hi
    hh = t - (t - hi)
    hl = hi - hh
    p = q * hi
    perr = ((qh * hh - p) + qh * hl + ql * hh) + ql * hl
    resid = (num - p) - perr
    return q + (resid - q * lo) / hi


def ridge_estimate(x, y) -> RidgeResult:
    """Ridge estimate with data-driven penalty ``kappa = sigma2_hat / beta_hat^2``.

    ``beta_hat = x'y / x'x``, ``sigma2_hat = |y - x beta_hat|^2 / (n - 1)``,
    ``gamma_hat = x'y / (x'x + kappa)``. When ``beta_hat`` is zero (or so
    small that its square underflows) ``kappa`` is ``inf``, ``gamma_hat`` is 0
    and the result is flagged degenerate.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise DomainError("x and y differ in length")
    if x.size < 2:
        raise DomainError("ridge estimate needs n >= 2")
    sxx = dot2(x, x)
    if sxx == 0.0:
        raise DegenerateDesignError("sum of squared regressors is zero")
    sxy = dot2(x, y)
    beta = sxy / sxx
    resid = y - x * beta
    sigma2 = dot2(resid, resid) / (x.size - 1)
    if abs(beta) < KAPPA_FLOOR:
        return RidgeResult(0.0, math.inf, sigma2, beta, sxx, sxy, True)
    kappa = sigma2 / (beta * beta)
    hi = sxx + kappa
    bb = hi - sxx
    lo = (sxx - (hi - bb)) + (kappa - bb)
    return RidgeResult(_accurate_quotient(sxy, hi, lo), kappa, sigma2, beta, sxx, sxy, False)


def shrinkage_estimate(x, y) -> float:
    """``theta_hat = beta_hat / (1 + kappa / x'x)``; 0 in the degenerate case."""
    return ridge_estimate(x, y).theta_hat


# ---------------------------------------------------------------------------
# consistency experiments


@dataclass(frozen=True)
class RegressionSpec:
    """A named regression scenario: estimator, truth, design columns and error laws."""

    name: str
    estimator: str
    design: tuple
    eps_model: SequenceModel
    beta: tuple = (1.0,)
    alpha: float = 0.0
    delta_model: SequenceModel | None = None
    description: str = ""

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise DomainError(f"unknown estimator {self.estimator!r}; expected one of {ESTIMATORS}")
        design = tuple(d if isinstance(d, DesignRule) else DesignRule.from_dict(d) for d in self.design)
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "beta", tuple(float(b) for b in np.atleast_1d(self.beta)))
        if self.estimator.startswith("eiv"):
            if len(design) != 1 or len(self.beta) != 1:
                raise DomainError("errors-in-variables scenarios take one design column and a scalar beta")
            if self.delta_model is None:
                raise DomainError("errors-in-variables scenarios need a delta_model")
        elif self.estimator in ("ridge", "shrinkage") and (len(design) != 1 or len(self.beta) != 1):
            raise DomainError("ridge and shrinkage scenarios take one design column and a scalar beta")
        elif len(design) != len(self.beta):
            raise DomainError(f"{len(design)} design columns but {len(self.beta)} coefficients")

    @property
    def truth(self):
        if self.estimator == "eiv_alpha":
            return self.alpha
        if self.estimator == "ls":
            return np.array(self.beta)
        return self.beta[0]

    def eiv_model(self) -> EIVModel:
        return EIVModel(self.alpha, self.beta[0], self.design[0], self.eps_model, self.delta_model)

    def to_dict(self):
        d = {
            "type": "regression",
            "estimator": self.estimator,
            "design": [r.to_dict() for r in self.design],
            "beta": list(self.beta),
            "alpha": self.alpha,
            "eps_model": self.eps_model.to_dict(),
        }
        if self.delta_model is not None:
            d["delta_model"] = self.delta_model.to_dict()
        if self.description:
            d["description"] = self.description
        return d

    @classmethod
    def from_dict(cls, d, name=""):
        delta = d.get("delta_model")
        return cls(
            name=name or d.get("name", ""),
            estimator=d["estimator"],
            design=tuple(DesignRule.from_dict(r) for r in d["design"]),
            eps_model=SequenceModel.from_dict(d["eps_model"]),
            beta=tuple(d.get("beta", (1.0,))),
            alpha=float(d.get("alpha", 0.0)),
            delta_model=SequenceModel.from_dict(delta) if delta is not None else None,
            description=d.get("description", ""),
        )


def _replicate(spec: RegressionSpec, grid, master_seed, index):
    """Estimates and diagnostics on nested prefixes of one simulated sample."""
    n_max = int(grid[-1])
    stream = StreamId(master_seed, index)
    errs, diag = [], {}
    if spec.estimator.startswith("eiv"):
        xi, eta = spec.eiv_model().simulate(n_max, stream)
        for n in grid:
            b, a = eiv_fit(xi[:n], eta[:n])
            est = b if spec.estimator == "eiv_beta" else a
            errs.append(abs(est - spec.truth))
        return np.array(errs), diag
    X = np.column_stack([r.values(n_max, stream, c) for c, r in enumerate(spec.design)])
    eps = sample_path(spec.eps_model, n_max, (label_seed(master_seed, "eps"), index)).values
    y = X @ np.array(spec.beta) + (eps - spec.eps_model.marginal.mean)
    if spec.estimator == "ls":
        radius = []
        for n in grid:
            b = ls_estimate(X[:n], y[:n])
            errs.append(float(np.max(np.abs(b - spec.truth))))
            radius.append(spectral_radius_inv(X[:n]))
        diag["spectral_radius_inv"] = radius
        return np.array(errs), diag
    kappa, sigma2, degen = [], [], []
    for n in grid:
        res = ridge_estimate(X[:n, 0], y[:n])
        est = res.gamma_hat if spec.estimator == "ridge" else res.theta_hat
        errs.append(abs(est - spec.truth))
        kappa.append(res.kappa)
        sigma2.append(res.sigma2_hat)
        degen.append(float(res.degenerate))
    diag.update(kappa=kappa, sigma2_hat=sigma2, degenerate=degen)
    return np.array(errs), diag


@dataclass
class EstimatorTrace:
    """Absolute estimation errors over replicates on an increasing sample-size grid."""

    estimator: str
    n_grid: np.ndarray
    abs_errors: np.ndarray  # (replicates, grid)
    diagnostics: dict = field(default_factory=dict)  # name -> per-n values
    spec_name: str = ""
    master_seed: int = 0

    def __post_init__(self):
        self.n_grid = np.asarray(self.n_grid, dtype=np.int64)
        self.abs_errors = np.asarray(self.abs_errors, dtype=float)
        if np.any(np.diff(self.n_grid) <= 0):
            raise ValueError("n-grid must be strictly increasing")

    @property
    def replicates(self):
        return self.abs_errors.shape[0]

    @property
    def median_abs_err(self):
        return np.median(self.abs_errors, axis=0)

    @property
    def p95_abs_err(self):
        return np.percentile(self.abs_errors, 95, axis=0)

    @property
    def verdict(self) -> str:
        return decay_verdict(self.median_abs_err)

    def rows(self):
        med, p95 = self.median_abs_err, self.p95_abs_err
        for i, n in enumerate(self.n_grid):
            row = {"n": int(n), "median_abs_err": float(med[i]), "p95_abs_err": float(p95[i])}
            for name in sorted(self.diagnostics):
                row[name] = float(self.diagnostics[name][i])
            yield row

    @property
    def columns(self):
        return ["n", "median_abs_err", "p95_abs_err"] + sorted(self.diagnostics)

    def to_csv(self) -> str:
        return csv_text(self.columns, self.rows())

    def to_dict(self):
        return {
            "estimator": self.estimator,
            "preset": self.spec_name,
            "master_seed": self.master_seed,
            "replicates": self.replicates,
            "n": self.n_grid.tolist(),
            "median_abs_err": self.median_abs_err.tolist(),
            "p95_abs_err": self.p95_abs_err.tolist(),
            "diagnostics": {k: [float(v) for v in vals] for k, vals in sorted(self.diagnostics.items())},
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_svg(self) -> str:
        return loglog_svg(
            self.n_grid,
            {"median |error|": self.median_abs_err, "95th percentile": self.p95_abs_err},
            title=f"{self.spec_name or self.estimator}",
            xlabel="n",
            ylabel="|estimate - truth|",
        )


def consistency_experiment(
    spec: RegressionSpec, n_grid=(1000, 10000, 100000), replicates=200, master_seed=0, workers=1
) -> EstimatorTrace:
    """Replicate ``spec`` and record ``|estimate - truth|`` on nested prefixes.

    Replicate ``i`` uses stream ``(master_seed, i)``; errors for a replicate
    at different ``n`` come from the same simulated sample, mirroring
    almost-sure convergence along a path. Per-n diagnostics are medians over
    replicates (the degenerate flag is a count).
    """
    if replicates < 1:
        raise DomainError("replicates must be >= 1")
    grid = np.asarray(sorted(int(n) for n in n_grid))
    if grid[0] < 2:
        raise DomainError("sample sizes must be >= 2")

    def one(i):
        return _replicate(spec, grid, master_seed, i)

    if workers <= 1:
        results = [one(i) for i in range(replicates)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(replicates)))
    errors = np.array([r[0] for r in results])
    diagnostics = {}
    for name in results[0][1]:
        vals = np.array([r[1][name] for r in results])
        diagnostics[name] = vals.sum(axis=0) if name == "degenerate" else np.median(vals, axis=0)
    if spec.estimator.startswith("eiv"):
        d = check_eiv_design(spec.design[0], grid)
        diagnostics["ratio_beta"] = d["ratio_beta"]
        diagnostics["ratio_alpha"] = d["ratio_alpha"]
    return EstimatorTrace(spec.estimator, grid, errors, diagnostics, spec.name, master_seed)


# ---------------------------------------------------------------------------
# scikit-learn estimators


class EIVRegressor(RegressorMixin, BaseEstimator):
    """Straight-line fit of ``eta`` on a noisy regressor ``xi`` (one feature).

    Attributes
    ----------
    coef_ : ndarray of shape (1,)
        Slope estimate.
    intercept_ : float
        Intercept estimate.
    """

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        if X.shape[1] != 1:
            raise ValueError(f"EIVRegressor takes one feature, got {X.shape[1]}")
        beta, alpha = eiv_fit(X[:, 0], y)
        self.coef_ = np.array([beta])
        self.intercept_ = alpha
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return self.intercept_ + X @ self.coef_


class LeastSquaresRegressor(RegressorMixin, BaseEstimator):
    """Ordinary least squares through a Cholesky solve of the normal equations.

    Parameters
    ----------
    fit_intercept : bool, default False
        Prepend a column of ones.
    """

    def __init__(self, fit_intercept=False):
        self.fit_intercept = fit_intercept

    def _design(self, X):
        return np.column_stack([np.ones(X.shape[0]), X]) if self.fit_intercept else X

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        b = ls_estimate(self._design(X), y)
        if self.fit_intercept:
            self.intercept_, self.coef_ = float(b[0]), b[1:]
        else:
            self.intercept_, self.coef_ = 0.0, b
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return self.intercept_ + X @ self.coef_


class RidgeShrinkageRegressor(RegressorMixin, BaseEstimator):
    """One-regressor ridge (``kind="ridge"``) or shrinkage (``kind="shrinkage"``) fit through the origin."""

    def __init__(self, kind="ridge"):
        self.kind = kind

    def fit(self, X, y):
        if self.kind not in ("ridge", "shrinkage"):
            raise ValueError(f"kind must be 'ridge' or 'shrinkage', got {self.kind!r}")
        X, y = validate_data(self, X, y, y_numeric=True)
        if X.shape[1] != 1:
            raise ValueError(f"RidgeShrinkageRegressor takes one feature, got {X.shape[1]}")
        res = ridge_estimate(X[:, 0], y)
        est = res.gamma_hat if self.kind == "ridge" else res.theta_hat
        self.coef_ = np.array([est])
        self.kappa_ = res.kappa
        self.sigma2_ = res.sigma2_hat
        self.beta_ls_ = res.beta_hat
        self.degenerate_ = res.degenerate
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return X @ self.coef_
