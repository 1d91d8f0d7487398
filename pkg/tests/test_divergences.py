import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import distributions, pairs
from robust_hellinger import adversarial as adv
from robust_hellinger.dist import BinnedDistribution, SupportMismatchError, align_supports, bernoulli
from robust_hellinger.divergences import bhattacharyya, divergence_report, hellinger_sq, sym_chi_sq, tv

ALL = (hellinger_sq, bhattacharyya, tv, sym_chi_sq)
DISJOINT = (BinnedDistribution.points([0.3, 0.7, 0, 0]), BinnedDistribution.points([0, 0, 0.6, 0.4]))


def test_identical():
    p = BinnedDistribution.points([0.1, 0.2, 0.3, 0.4])
    assert hellinger_sq(p, p) == 0 and tv(p, p) == 0 and sym_chi_sq(p, p) == 0
    assert bhattacharyya(p, p) == 1


def test_disjoint():
    a, b = DISJOINT
    assert hellinger_sq(a, b) == 1
    assert bhattacharyya(a, b) == 0
    assert tv(a, b) == 1
    assert sym_chi_sq(a, b) == pytest.approx(2, abs=1e-15)


def test_shifted_uniform_hellinger_is_eps():
    p, p2 = align_supports(BinnedDistribution.uniform(0, 1), BinnedDistribution.uniform(0.25, 1.25))
    assert hellinger_sq(p, p2) == pytest.approx(0.25, abs=1e-12)


def test_uniform_vs_wide_uniform():
    # sqrt-mass overlap is sqrt(1/2) on [0, 1), so H^2 = 1 - 1/sqrt 2
    p, p1 = align_supports(BinnedDistribution.uniform(0, 1), BinnedDistribution.uniform(-1, 1))
    assert hellinger_sq(p, p1) == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-12)


def test_bernoulli_closed_forms():
    a, b = bernoulli(0.25), bernoulli(0.75)
    assert bhattacharyya(a, b) == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    assert tv(a, b) == pytest.approx(0.5, abs=1e-15)


def test_family_member_chi2():
    for a1 in (2.0, 4.0, 10.0):
        params = adv.FamilyParams(1.0, a1, 1.0, 20)
        member = adv.make_member(params, range(1, params.r1_size + 1), range(1, 21), "perturb-p1")
        p1, _ = adv.base_pair(1.0, params.n_bins)
        assert sym_chi_sq(member.distribution, p1) == pytest.approx(2 / 3, abs=1e-12)


@pytest.mark.parametrize("f", ALL)
def test_mismatched_supports(f):
    with pytest.raises(SupportMismatchError):
        f(BinnedDistribution.points([1.0]), BinnedDistribution.points([0.5, 0.5]))


def test_report_fields():
    a, b = bernoulli(0.25), bernoulli(0.75)
    rep = divergence_report(a, b).to_dict()
    assert list(rep) == ["hellinger_sq", "bhattacharyya", "tv", "sym_chi_sq"]


@given(pairs())
def test_symmetry_exact(pair):
    a, b = pair
    for f in ALL:
        assert f(a, b) == f(b, a)


@given(distributions())
def test_identity_of_indiscernibles(d):
    assert hellinger_sq(d, d) == 0 and tv(d, d) == 0 and sym_chi_sq(d, d) == 0
    assert bhattacharyya(d, d) == 1


@given(pairs())
def test_report_invariants(pair):
    r = divergence_report(*pair)
    assert 0 <= r.hellinger_sq <= 1 and 0 <= r.bhattacharyya <= 1 and 0 <= r.tv <= 1
    assert abs(r.hellinger_sq - (1 - r.bhattacharyya)) <= 1e-12
    assert 0.5 * r.tv**2 <= r.hellinger_sq + 1e-12
    assert r.hellinger_sq <= r.tv + 1e-12
    assert 0.25 * r.sym_chi_sq <= r.hellinger_sq + 1e-12
    assert r.hellinger_sq <= 0.5 * r.sym_chi_sq + 1e-12


def test_sandwich_on_1000_random_pairs():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        k = int(rng.integers(2, 21))
        a = BinnedDistribution.points(rng.dirichlet(np.ones(k)))
        b = BinnedDistribution.points(rng.dirichlet(np.ones(k)))
        h, t, c = hellinger_sq(a, b), tv(a, b), sym_chi_sq(a, b)
        assert 0.5 * t * t <= h + 1e-12 and h <= t + 1e-12
        assert 0.25 * c <= h + 1e-12 and h <= 0.5 * c + 1e-12


@st.composite
def rational_pairs(draw):
    n = draw(st.integers(1, 4))

    def one():
        w = draw(st.lists(st.integers(0, 12), min_size=n, max_size=n).filter(any))
        return [Fraction(x, sum(w)) for x in w]

    return one(), one()


@given(rational_pairs())
def test_against_decimal_oracle(pair):
    fa, fb = pair
    a = BinnedDistribution.points([float(x) for x in fa])
    b = BinnedDistribution.points([float(x) for x in fb])
    assert abs(hellinger_sq(a, b) - float(oracles.hellinger_sq(fa, fb))) <= 1e-12
    assert abs(bhattacharyya(a, b) - float(oracles.bhattacharyya(fa, fb))) <= 1e-12
    assert abs(tv(a, b) - float(oracles.tv(fa, fb))) <= 1e-12
    assert abs(sym_chi_sq(a, b) - float(oracles.sym_chi_sq(fa, fb))) <= 1e-12


@given(st.lists(st.integers(0, 9), min_size=2, max_size=6).filter(any),
       st.lists(st.integers(0, 9), min_size=2, max_size=6).filter(any),
       st.integers(2, 5))
def test_invariant_under_refinement(w1, w2, k):
    n = min(len(w1), len(w2))
    a = BinnedDistribution.bins(np.array(w1[:n]) / sum(w1[:n]), 0.0, 1.0) if sum(w1[:n]) else None
    b = BinnedDistribution.bins(np.array(w2[:n]) / sum(w2[:n]), 0.0, 1.0) if sum(w2[:n]) else None
    if a is None or b is None:
        return
    fine = BinnedDistribution.uniform(0.0, 1.0, n * k)
    ra, _ = align_supports(a, fine)
    rb, _ = align_supports(b, fine)
    for f in ALL:
        assert abs(f(ra, rb) - f(a, b)) <= 1e-12
