import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from bayesdcc.distributions import (
    SkewFamily,
    base_sample,
    skew_log_density,
    skew_sample,
    symmetric_log_density,
)
from bayesdcc.errors import InvalidInputError

FAMILY_POINTS = [
    ("skew-normal", None),
    ("skew-t", 4.0),
    ("skew-t", 8.0),
    ("skew-GED", 0.7),
    ("skew-GED", 1.0),
    ("skew-GED", 2.0),
]


def _quad_mass(fam, lo, hi):
    f = lambda x: math.exp(skew_log_density(fam, [x]))
    return integrate.quad(f, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def test_normal_mode_value():
    assert symmetric_log_density("normal", None, [0.0]) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-15)
    assert symmetric_log_density("normal", None, [0.0]) == pytest.approx(-0.9189, abs=1e-4)


def test_student_t_matches_rescaled_textbook_t():
    # unit-variance t_5: scale sqrt(3/5) applied to the standard t density
    expected = -1.5762529945270716
    assert symmetric_log_density("student-t", 5.0, [1.0]) == pytest.approx(expected, rel=1e-13)
    s = math.sqrt(3 / 5)
    assert expected == pytest.approx(math.log(stats.t.pdf(1 / s, 5) / s), rel=1e-13)


@pytest.mark.parametrize("family,tail", [("student-t", 3.0), ("student-t", 5.0), ("ged", 0.6), ("ged", 1.5)])
def test_base_densities_integrate_to_one(family, tail):
    f = lambda x: math.exp(symmetric_log_density(family, tail, [x]))
    assert integrate.quad(f, -np.inf, np.inf, epsabs=1e-12)[0] == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_ged_delta_one_is_normal(k):
    x = np.random.default_rng(k).normal(size=(50, k)) * 2
    np.testing.assert_allclose(symmetric_log_density("ged", 1.0, x), symmetric_log_density("normal", None, x),
                               rtol=0, atol=1e-12)


def test_bad_tail_rejected():
    with pytest.raises(InvalidInputError):
        symmetric_log_density("student-t", 2.0, [0.0])
    with pytest.raises(InvalidInputError):
        symmetric_log_density("ged", 0.0, [0.0])
    with pytest.raises(InvalidInputError):
        SkewFamily("skew-normal", [0.0])


def test_skew_normal_prefactor_at_zero():
    fam = SkewFamily("skew-normal", [2.0])
    assert skew_log_density(fam, [0.0]) == pytest.approx(math.log(0.8 * 0.3989422804014327), rel=1e-14)


@pytest.mark.parametrize("family,tail", FAMILY_POINTS)
@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_k1_normalisation_and_skew_ratio(family, tail, gamma):
    fam = SkewFamily(family, [gamma], tail)
    neg, pos = _quad_mass(fam, -np.inf, 0.0), _quad_mass(fam, 0.0, np.inf)
    assert neg + pos == pytest.approx(1.0, abs=1e-6)
    assert pos / neg == pytest.approx(gamma**2, abs=1e-6)


def test_prefactor_is_one_at_unit_gamma():
    for k in (1, 2, 4):
        fam = SkewFamily("skew-t", np.ones(k), 6.0)
        x = np.linspace(-2, 2, 4 * k).reshape(4, k)
        assert np.array_equal(skew_log_density(fam, x), symmetric_log_density("student-t", 6.0, x))


@settings(max_examples=60, deadline=None)
@given(
    family=st.sampled_from(["skew-normal", "skew-t", "skew-GED"]),
    gamma=st.floats(0.2, 5.0),
    tail=st.floats(2.5, 20.0),
)
def test_continuous_at_zero(family, gamma, tail):
    fam = SkewFamily(family, [gamma], tail)
    left, right = skew_log_density(fam, [-1e-12]), skew_log_density(fam, [1e-12])
    assert left == pytest.approx(right, abs=1e-9)
    assert skew_log_density(fam, [0.0]) == pytest.approx(right, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(
    k=st.integers(1, 4),
    seed=st.integers(0, 2**31 - 1),
    family=st.sampled_from(["skew-normal", "skew-t", "skew-GED"]),
)
def test_unit_gamma_recovers_base(k, seed, family):
    tail = {"skew-normal": None, "skew-t": 7.0, "skew-GED": 1.3}[family]
    x = np.random.default_rng(seed).standard_t(3, size=(20, k))
    fam = SkewFamily(family, np.ones(k), tail)
    np.testing.assert_allclose(skew_log_density(fam, x), symmetric_log_density(fam.base, tail, x), atol=1e-12)


def test_skew_sample_sign_ratio():
    x = skew_sample(SkewFamily("skew-t", [2.0], 6.0), 10**6, seed=11)
    ratio = np.mean(x >= 0) / np.mean(x < 0)
    assert ratio == pytest.approx(4.0, rel=0.05)


def _quadrature_cdf(fam, lo=-12.0, hi=12.0, n=200_001):
    grid = np.linspace(lo, hi, n)
    dens = np.exp(skew_log_density(fam, grid[:, None]))
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    return lambda v: np.interp(v, grid, cdf)


def test_skew_normal_sampler_ks():
    fam = SkewFamily("skew-normal", [1.5])
    x = skew_sample(fam, 10**5, seed=3)[:, 0]
    res = stats.kstest(x, _quadrature_cdf(fam))
    assert res.statistic < 1.628 / math.sqrt(x.size)


@pytest.mark.parametrize("family,tail,gamma", [("skew-normal", None, 0.7), ("skew-t", 5.0, 1.6), ("skew-GED", 0.8, 0.6),
                                               ("skew-GED", 2.0, 1.3)])
def test_sampler_chi_square_fit(family, tail, gamma):
    fam = SkewFamily(family, [gamma], tail)
    n = 200_000
    x = skew_sample(fam, n, seed=5)[:, 0]
    edges = np.concatenate([[-np.inf], np.quantile(x, np.linspace(0.02, 0.98, 39)), [np.inf]])
    edges = np.unique(np.round(edges, 6))
    probs = np.array([_quad_mass(fam, a, b) for a, b in zip(edges[:-1], edges[1:])])
    observed = np.histogram(x, bins=np.where(np.isinf(edges), np.sign(edges) * 1e300, edges))[0]
    chi2 = np.sum((observed - n * probs) ** 2 / (n * probs))
    assert stats.chi2.sf(chi2, len(probs) - 1) > 0.01


def test_sampler_is_deterministic():
    fam = SkewFamily("skew-GED", [0.8, 1.2], 1.4)
    assert np.array_equal(skew_sample(fam, 100, 9), skew_sample(fam, 100, 9))
    assert not np.array_equal(skew_sample(fam, 100, 9), skew_sample(fam, 100, 10))


def test_unit_gamma_sampler_matches_base_distribution():
    fam = SkewFamily("skew-t", [1.0], 6.0)
    a = skew_sample(fam, 50_000, 1)[:, 0]
    b = base_sample("student-t", 6.0, 1, 50_000, 2)[:, 0]
    assert stats.ks_2samp(a, b).pvalue > 0.01


def test_normal_base_covariance():
    x = base_sample("normal", None, 2, 10**5, 4)
    assert np.max(np.abs(np.cov(x, rowvar=False) - np.eye(2))) < 0.02


def test_student_t_base_unit_variance():
    x = base_sample("student-t", 8.0, 1, 10**6, 5)
    assert np.var(x) == pytest.approx(1.0, rel=0.02)


def test_ged_delta_one_sampler_is_normal():
    g = base_sample("ged", 1.0, 3, 10**5, 6)
    z = base_sample("normal", None, 3, 10**5, 7)
    for j in range(3):
        assert stats.ks_2samp(g[:, j], z[:, j]).pvalue > 0.01
    assert stats.ks_2samp(np.linalg.norm(g, axis=1), np.linalg.norm(z, axis=1)).pvalue > 0.01


def test_ged_radius_matches_density():
    # radial law r^(k-1) exp(-r^(2 delta)/2) implied by the density, checked via quadrature CDF
    delta, k = 0.7, 2
    r = np.linalg.norm(base_sample("ged", delta, k, 50_000, 8), axis=1)
    grid = np.linspace(0, 200, 400_001)
    dens = grid ** (k - 1) * np.exp(-0.5 * grid ** (2 * delta))
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    cdf /= cdf[-1]
    assert stats.kstest(r, lambda v: np.interp(v, grid, cdf)).pvalue > 0.01
