import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from pqdlab.core_types import Marginal, StreamId
from pqdlab.exceptions import DomainError
from pqdlab.pqd_generators import (
    RhoProfile,
    SequenceModel,
    analytic_delta,
    paper_bernoulli_joint,
    sample_pairs,
    sample_path,
    sample_paths,
)


def enumerate_bernoulli_pair(k, j):
    """Joint table of (B xor C_k, B xor C_j) by summing over every latent outcome."""
    q = {n: (1 - Fraction(2) ** (1 - n)) / 2 for n in (k, j)}
    table = [[Fraction(0)] * 2 for _ in range(2)]
    for b, ck, cj in itertools.product((0, 1), repeat=3):
        p = Fraction(1, 2) * (q[k] if ck else 1 - q[k]) * (q[j] if cj else 1 - q[j])
        table[b ^ ck][b ^ cj] += p
    return table


@pytest.mark.parametrize("k,j", [(1, 2), (1, 3), (2, 3), (3, 7), (5, 6)])
def test_bernoulli_joint_table_matches_enumeration(k, j):
    assert paper_bernoulli_joint(k, j, exact=True) == enumerate_bernoulli_pair(k, j)


@pytest.mark.parametrize("k,j", [(1, 2), (2, 3), (4, 9)])
def test_bernoulli_marginals_are_fair_coins(k, j):
    t = enumerate_bernoulli_pair(k, j)
    assert t[0][0] + t[0][1] == Fraction(1, 2)
    assert t[0][0] + t[1][0] == Fraction(1, 2)


def test_bernoulli_delta_surface():
    m = SequenceModel.paper_bernoulli()
    assert analytic_delta(m, 2, 3, 0.5, 0.5) == 2.0**-5
    assert analytic_delta(m, 1, 3, 0.5, 0.5) == 2.0**-4
    assert analytic_delta(m, 1, 3, -0.1, 0.5) == 0.0
    assert analytic_delta(m, 1, 3, 0.5, 1.0) == 0.0


def test_bernoulli_sequence_sampler_matches_table():
    m = SequenceModel.paper_bernoulli()
    x = sample_paths(m, 4, master_seed=11, paths=200_000)
    for k, j in [(1, 2), (2, 4)]:
        both_zero = np.mean((x[:, k - 1] == 0) & (x[:, j - 1] == 0))
        assert abs(both_zero - (0.25 + 2.0 ** -(k + j))) < 5 * math.sqrt(0.25 / x.shape[0])
    assert np.all(np.abs(x.mean(axis=0) - 0.5) < 0.005)


@pytest.mark.parametrize("profile,value", [("exchangeable", 0.6), ("geometric", 0.5), ("second_index", 0.7)])
def test_gaussian_sequence_correlations_follow_profile(profile, value):
    m = SequenceModel.gaussian(profile, value)
    x = sample_paths(m, 5, master_seed=3, paths=40_000)
    c = np.corrcoef(x, rowvar=False)
    for k, j in [(1, 2), (2, 4), (3, 5)]:
        assert abs(c[k - 1, j - 1] - m.rho.rho(k, j)) < 0.02
    assert np.all(np.abs(x.var(axis=0) - 1) < 0.03)


def test_second_index_pair_law_depends_on_larger_index_only():
    m = SequenceModel.gaussian("second_index", 0.5)
    assert m.delta_second_index_only
    assert m.pair_law(1, 4).key == m.pair_law(3, 4).key
    assert not SequenceModel.gaussian("geometric", 0.5).delta_second_index_only


def test_fgm_sequence_pair_covariances():
    m = SequenceModel.fgm(1.0, decay=0.5)
    x = sample_paths(m, 4, master_seed=9, paths=200_000)
    for k, j in [(1, 2), (1, 3), (2, 3)]:
        cov = np.cov(x[:, k - 1], x[:, j - 1])[0, 1]
        assert abs(cov - m.pair_theta(k, j) / 36.0) < 0.0012
    assert m.pair_theta(2, 3) == pytest.approx(1.0 * 0.5 / 3.0)


def test_fgm_pair_sampler_uniform_marginals():
    m = SequenceModel.fgm(1.0)
    x, y = sample_pairs(m, 1, 2, 100_000, (0, 0))
    assert abs(x.mean() - 0.5) < 0.005 and abs(y.mean() - 0.5) < 0.005
    assert 0 <= y.min() and y.max() <= 1


@given(
    st.sampled_from(["independent", "fgm", "bernoulli"]),
    st.integers(1, 6),
    st.integers(1, 6),
    st.floats(-3, 3),
    st.floats(-3, 3),
)
def test_analytic_delta_is_nonnegative(family, k, gap, x, y):
    m = {
        "independent": SequenceModel.independent(Marginal.standard_normal()),
        "fgm": SequenceModel.fgm(0.8, Marginal.centered_pareto(3.0), decay=0.7),
        "bernoulli": SequenceModel.paper_bernoulli(),
    }[family]
    assert analytic_delta(m, k, k + gap, x, y) >= 0.0


def test_sample_path_is_pure_function_of_stream():
    m = SequenceModel.gaussian("geometric", 0.5)
    a = sample_path(m, 50, (7, 3))
    b = sample_path(m, 50, StreamId(7, 3))
    assert a == b
    assert_array_equal(sample_paths(m, 50, 7, 5)[3], a.values)
    assert not np.array_equal(sample_path(m, 50, (7, 4)).values, a.values)


def test_path_prefixes_do_not_depend_on_length_for_independent_draws():
    m = SequenceModel.independent(Marginal.uniform01())
    assert_array_equal(sample_path(m, 10, (1, 0)).values, sample_path(m, 20, (1, 0)).values[:10])


def test_point_mass_paths_are_constant():
    m = SequenceModel.independent(Marginal.point_mass(2.5))
    assert_array_equal(sample_path(m, 5, (0, 0)).values, 2.5)


def test_model_round_trip_and_validation():
    for m in [
        SequenceModel.gaussian("second_index", 0.5),
        SequenceModel.fgm(0.5, Marginal.uniform01(), decay=0.9),
        SequenceModel.paper_bernoulli(),
        SequenceModel.independent(Marginal.centered_pareto(1.8)),
    ]:
        assert SequenceModel.from_dict(m.to_dict()) == m
    with pytest.raises(DomainError):
        RhoProfile("geometric", 1.0)
    with pytest.raises(DomainError):
        SequenceModel.fgm(1.5)
    with pytest.raises(DomainError):
        SequenceModel("gaussian_copula")
    with pytest.raises(DomainError):
        sample_path(SequenceModel.paper_bernoulli(), 0, (0, 0))
    with pytest.raises(DomainError):
        SequenceModel.paper_bernoulli().pair_law(2, 2)
