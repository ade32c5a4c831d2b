import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from sklearn.pipeline import make_pipeline
from sklearn.utils.estimator_checks import check_estimator

from pqdlab.core_types import Marginal, WeightScheme
from pqdlab.exceptions import DomainError
from pqdlab.pqd_generators import SequenceModel, sample_path
from pqdlab.slln_lab import (
    CSV_COLUMNS,
    ConvergenceReport,
    NormalizerKind,
    WeightedSumTransformer,
    compensated_prefix_dot,
    convergence_diagnostic,
    counterexample_probe,
    weighted_sum_path,
)


def test_normalizer_parse_and_values():
    assert NormalizerKind.parse("kolmogorov_n") == NormalizerKind.kolmogorov()
    mz = NormalizerKind.parse("mz_p(1.5)")
    assert mz.p == 1.5 and str(mz) == "mz_p(1.5)"
    assert_allclose(mz.norm(100.0), 100 ** (2 / 3) * math.log(100))
    assert mz.norm(2.0) == 2 ** (2 / 3)  # Log floors at 1 below e


@pytest.mark.parametrize("text", ["mz_p(2.5)", "mz_p(1)", "mz_p(abc)", "l2"])
def test_normalizer_rejects_bad_input(text):
    with pytest.raises(DomainError):
        NormalizerKind.parse(text)


def test_mz_range_message():
    with pytest.raises(DomainError, match="1 < p < 2"):
        NormalizerKind.mz(2.5)


@given(
    st.lists(st.floats(-1e6, 1e6).filter(lambda v: v == 0 or abs(v) > 1e-50), min_size=1, max_size=30),
    st.floats(-10, 10),
)
def test_prefix_sums_nearly_correctly_rounded(xs, mu):
    x = np.array(xs)
    a = np.cos(np.arange(1, x.size + 1, dtype=float))
    out = compensated_prefix_dot(a, x, mu)
    u = Fraction(1, 2**53)
    run, mag = Fraction(0), Fraction(0)
    for i in range(x.size):
        term = Fraction(a[i]) * (Fraction(x[i]) - Fraction(mu))
        run += term
        mag += abs(term)
        assert abs(Fraction(out[i]) - run) <= u * abs(run) + 8 * (i + 1) ** 2 * u * u * mag


def test_weighted_sum_path_matches_direct_formula():
    m = SequenceModel.independent(Marginal.uniform01())
    p = sample_path(m, 500, (1, 0))
    w = WeightScheme.bounded_sinusoid(1.0, 0.5)
    t = weighted_sum_path(p, w, "mz_p(1.5)", mean=0.5)
    a = 1 + 0.5 * np.sin(np.arange(1, 501))
    n = np.arange(1, 501)
    expected = np.cumsum(a * (p.values - 0.5)) / (n ** (2 / 3) * np.log(np.maximum(n, math.e)))
    assert_allclose(t, expected, rtol=1e-9, atol=1e-14)


def test_weighted_sum_path_requires_mean():
    with pytest.raises(DomainError):
        weighted_sum_path(np.ones(4))
    with pytest.raises(DomainError):
        weighted_sum_path(np.ones(4), np.ones(2), mean=0.0)


def test_point_mass_sums_are_exactly_zero():
    p = sample_path(SequenceModel.independent(Marginal.point_mass(0.1)), 100, (0, 0))
    assert np.all(weighted_sum_path(p, mean=0.1) == 0.0)


@pytest.fixture(scope="module")
def bernoulli_report():
    return convergence_diagnostic(SequenceModel.paper_bernoulli(), n_max=4096, paths=40, master_seed=5)


def test_report_shape_and_block_sups(bernoulli_report):
    r = bernoulli_report
    assert_array_equal(r.checkpoints, [1024, 2048, 4096])
    assert r.sup_errors.shape == (40, 3)
    # recompute path 0 directly
    p = sample_path(SequenceModel.paper_bernoulli(), 8192, (5, 0))
    t = np.abs(weighted_sum_path(p, mean=0.5))
    assert_allclose(r.sup_errors[0], [t[n - 1 : 2 * n].max() for n in (1024, 2048, 4096)], rtol=0, atol=0)


def test_decay_ratio_definition(bernoulli_report):
    med = bernoulli_report.median_sup
    assert_allclose(bernoulli_report.decay_ratio, (med[-1] / med[0]) ** 0.5)
    assert_allclose(bernoulli_report.reduction_factor(), med[-1] / med[0])


def test_report_csv_and_json(bernoulli_report):
    lines = bernoulli_report.to_csv().split("\r\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].endswith(",")  # no ratio for the first checkpoint
    d = json.loads(bernoulli_report.to_json())
    assert d["checkpoint_n"] == [1024, 2048, 4096] and d["paths"] == 40
    assert bernoulli_report.to_svg().startswith("<svg")


def test_worker_count_does_not_change_results():
    m = SequenceModel.gaussian("geometric", 0.5)
    a = convergence_diagnostic(m, n_max=1024, paths=32, master_seed=9, workers=1)
    b = convergence_diagnostic(m, n_max=1024, paths=32, master_seed=9, workers=4)
    assert a.to_csv() == b.to_csv()
    assert_array_equal(a.sup_errors, b.sup_errors)


def test_diagnostic_preconditions():
    m = SequenceModel.paper_bernoulli()
    with pytest.raises(DomainError):
        convergence_diagnostic(m, paths=10)
    with pytest.raises(DomainError):
        convergence_diagnostic(m, n_max=3000, paths=30)
    with pytest.raises(ValueError):
        ConvergenceReport([4, 2], np.zeros((1, 2)))


def test_counterexample_probe_metadata():
    r = counterexample_probe(SequenceModel.gaussian("exchangeable", 0.9), n_max=1024, paths=30, condition_K=16)
    assert r.metadata["control"] == "negative"
    assert r.metadata["c2_2_verdict"] in ("diverges", "inconclusive")


def test_degenerate_model_decay_ratio_is_zero():
    r = convergence_diagnostic(SequenceModel.independent(Marginal.point_mass(1.0)), n_max=2048, paths=30)
    assert r.decay_ratio == 0.0


def test_transformer_matches_function():
    X = np.vstack([sample_path(SequenceModel.paper_bernoulli(), 64, (2, i)).values for i in range(3)])
    tr = WeightedSumTransformer(WeightScheme.signed_alternating(1.0), "kolmogorov_n", mean=0.5)
    out = make_pipeline(tr).fit_transform(X)
    assert_allclose(out[1], weighted_sum_path(X[1], WeightScheme.signed_alternating(1.0), mean=0.5))


def test_transformer_passes_sklearn_checks():
    check_estimator(WeightedSumTransformer())


@given(
    st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=60),
    st.integers(-20, 20),
)
def test_power_of_two_weight_scaling_is_exact(xs, e):
    a = 1 + 0.5 * np.sin(np.arange(1, len(xs) + 1))
    t1 = weighted_sum_path(np.array(xs), a, mean=0.25)
    t2 = weighted_sum_path(np.array(xs), math.ldexp(1.0, e) * a, mean=0.25)
    assert_array_equal(t2, math.ldexp(1.0, e) * t1)


@given(st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_scaled_weights_give_sums_within_one_ulp(c, seed):
    x = np.random.default_rng(seed).standard_normal(200)
    ca = c * (1 + 0.5 * np.sin(np.arange(1, 201)))
    t = weighted_sum_path(x, ca, mean=0.0)
    exact = np.cumsum([Fraction(w) * Fraction(v) for w, v in zip(ca, x)])
    for n in (1, 7, 50, 200):
        e = exact[n - 1] / n
        if e != 0:
            assert abs(Fraction(t[n - 1]) - e) <= Fraction(math.ulp(float(e)))


def test_path_order_does_not_change_medians():
    from pqdlab.slln_lab import _run_paths

    m = SequenceModel.gaussian("geometric", 0.5)
    cps = np.array([1024, 2048])
    fwd = _run_paths(m, WeightScheme.constant(1.0), "kolmogorov_n", cps, range(24), 3, 1)
    rev = _run_paths(m, WeightScheme.constant(1.0), "kolmogorov_n", cps, range(23, -1, -1), 3, 4)
    assert_array_equal(rev, fwd[::-1])
    assert_array_equal(np.median(rev, axis=0), np.median(fwd, axis=0))


@pytest.mark.parametrize("model", [SequenceModel.paper_bernoulli(), SequenceModel.fgm(1.0, decay=0.5)])
def test_kolmogorov_sums_obey_coarse_bound(model):
    w = WeightScheme.bounded_sinusoid(1.0, 0.7)
    p = sample_path(model, 4000, (2, 1))
    t = weighted_sum_path(p, w, mean=0.5)
    assert np.all(np.abs(t) <= 1.7 * (np.max(np.abs(p.values)) + 0.5))


@pytest.mark.slow
def test_presets_passing_c2_2_show_decaying_sup_error():
    from pqdlab.dependence_metrics import eval_condition_2_2
    from pqdlab.experiment_cli import available, load_model

    checked = 0
    for name in available("model"):
        model, weights = load_model(name)
        if model.marginal.kind == "point_mass" or eval_condition_2_2(model, weights, K=100).verdict != "converges":
            continue
        med = convergence_diagnostic(model, weights, n_max=1 << 14, paths=100, master_seed=11).median_sup
        steps = np.diff(med) < 0
        # longest run of consecutive decreases, in checkpoints
        run = best = 0
        for s in steps:
            run = run + 1 if s else 0
            best = max(best, run)
        assert best + 1 >= 3, (name, med)
        checked += 1
    assert checked >= 6
