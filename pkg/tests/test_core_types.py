import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy import integrate, stats

from pqdlab.core_types import (
    Marginal,
    MomentOrder,
    SamplePath,
    StreamId,
    WeightScheme,
    cesaro_profile,
    log_cap,
    truncate_g,
    weights,
)
from pqdlab.exceptions import DomainError
from pqdlab.rng import label_seed, substream

MARGINALS = [
    Marginal.bernoulli_half(),
    Marginal.uniform01(),
    Marginal.standard_normal(),
    Marginal.centered_pareto(1.8),
    Marginal.centered_pareto(3.0),
]


def test_log_cap_floor_and_scalar():
    assert log_cap(0.0) == 1.0
    assert log_cap(-100.0) == math.log(100.0)
    assert_array_equal(log_cap(np.array([1.0, math.e, math.e**3])), [1.0, 1.0, 3.0])


@given(st.floats(-1e6, 1e6), st.floats(1e-6, 1e6))
def test_truncate_g_is_a_clamp(x, ell):
    y = truncate_g(x, ell)
    assert -ell <= y <= ell
    if abs(x) <= ell:
        assert y == x


def test_truncate_g_rejects_nonpositive_level():
    with pytest.raises(DomainError):
        truncate_g(1.0, 0.0)


@pytest.mark.parametrize("m", MARGINALS, ids=lambda m: m.kind + str(m.param or ""))
def test_marginal_moments_match_samples(m):
    x = m.sample(substream((3, 0), "marginal"), 400_000)
    assert abs(x.mean() - m.mean) < 6 * math.sqrt(min(m.variance, 50.0) / x.size) + 1e-12
    if m.kind != "centered_pareto":
        assert abs(x.var() - m.variance) < 0.01


def test_centered_pareto_has_mean_zero_and_infinite_variance_below_two():
    m = Marginal.centered_pareto(1.8)
    assert m.mean == 0.0
    assert m.second_moment == math.inf
    with pytest.raises(DomainError):
        Marginal.centered_pareto(1.0)


@pytest.mark.parametrize("m", MARGINALS[1:], ids=lambda m: m.kind + str(m.param or ""))
def test_ppf_inverts_cdf(m):
    u = np.linspace(0.01, 0.99, 99)
    assert_allclose(m.cdf(m.ppf(u)), u, rtol=1e-10)


@pytest.mark.parametrize("m", MARGINALS, ids=lambda m: m.kind + str(m.param or ""))
@pytest.mark.parametrize("lo,hi", [(-2.0, 0.5), (0.0, 1.0), (-1.0, 7.0)])
def test_spread_integral_matches_quadrature(m, lo, hi):
    expected, _ = integrate.quad(lambda x: m.cdf(x) * (1 - m.cdf(x)), lo, hi, points=[0.0, 1.0], limit=200)
    assert_allclose(float(m.spread_integral(lo, hi)), expected, rtol=1e-9, atol=1e-13)


def test_normal_spread_total():
    assert_allclose(Marginal.standard_normal().spread_total, 1 / math.sqrt(math.pi), rtol=1e-13)


def test_from_normal_maps_to_the_marginal():
    z = substream((1, 1), "marginal").standard_normal(100_000)
    x = Marginal.centered_pareto(3.0).from_normal(z)
    p = stats.kstest(x + 1.5, stats.pareto(3.0).cdf).pvalue
    assert p > 1e-3


def test_moment_order_range():
    assert MomentOrder(1.5).p == 1.5
    with pytest.raises(DomainError):
        MomentOrder(2.0)


@pytest.mark.parametrize(
    "scheme,first",
    [
        (WeightScheme.constant(2.0), [2, 2, 2, 2]),
        (WeightScheme.signed_alternating(1.0), [1, -1, 1, -1]),
        (WeightScheme.custom_table([3, 4]), [3, 4, 0, 0]),
        (WeightScheme.power(1.0, 1.0), [1, 2, 3, 4]),
    ],
)
def test_weights_closed_forms(scheme, first):
    assert_array_equal(weights(scheme, 4), first)


def test_weights_depend_only_on_index():
    s = WeightScheme.bounded_sinusoid(1.0, 0.5)
    assert_array_equal(weights(s, 10)[5:], weights(s, 5, start=6))
    assert_allclose(weights(s, 3), 1 + 0.5 * np.sin([1.0, 2.0, 3.0]))


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_cesaro_bound_dominates_profile(base, amplitude):
    s = WeightScheme.bounded_sinusoid(base, amplitude)
    assert cesaro_profile(s, 2000, chunk=333) <= s.cesaro_bound * (1 + 1e-12)


def test_power_weights_are_invalid_for_positive_exponents():
    assert WeightScheme.power(1.0, -0.5).is_valid
    assert not WeightScheme.power(1.0, 0.5).is_valid


def test_weight_scheme_round_trip():
    for s in [WeightScheme.constant(1.5), WeightScheme.power(2.0, -1.0), WeightScheme.custom_table([1, 2])]:
        assert WeightScheme(**s.to_dict()) == s


def test_sample_path_is_immutable():
    p = SamplePath([1.0, 2.0], "m", (0, 1))
    assert p.stream == StreamId(0, 1)
    with pytest.raises(ValueError):
        p.values[0] = 3.0
    with pytest.raises(DomainError):
        SamplePath([], "m", (0, 0))


def test_substreams_are_reproducible_and_distinct():
    a = substream((5, 2), "common").random(4)
    assert_array_equal(a, substream(StreamId(5, 2), "common").random(4))
    assert not np.array_equal(a, substream((5, 3), "common").random(4))
    assert not np.array_equal(a, substream((5, 2), "flip").random(4))


def test_label_seed_is_stable():
    assert label_seed(1, "eps") == label_seed(1, "eps")
    assert label_seed(1, "eps") != label_seed(1, "delta")
    assert 0 <= label_seed("x") < 2**64
