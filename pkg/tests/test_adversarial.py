import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from robust_hellinger import adversarial as adv
from robust_hellinger.dist import SampleBatch
from robust_hellinger.divergences import hellinger_sq, tv
from robust_hellinger.robust_tests import Family, TestDecision, Verdict

SMALL = adv.FamilyParams(1.0, 2.0, 1.0, 2)


class TestBasePair:
    def test_orthogonal_at_b1(self):
        p1, p2 = adv.base_pair(1.0)
        assert p1.density.tolist() == [0.0, 2.0] and p2.density.tolist() == [2.0, 0.0]
        assert hellinger_sq(p1, p2) == 1

    @pytest.mark.parametrize("b", [0.1, 0.5, 0.9])
    def test_closed_forms(self, b):
        p1, p2 = adv.base_pair(b, 6)
        assert hellinger_sq(p1, p2) == pytest.approx(1 - math.sqrt(1 - b * b), abs=1e-12)
        assert tv(p1, p2) == pytest.approx(b, abs=1e-12)

    @pytest.mark.parametrize("b", [0.0, 1.5])
    def test_b_range(self, b):
        with pytest.raises(ValueError):
            adv.base_pair(b)


class TestParams:
    @pytest.mark.parametrize(
        "args", [(0.0, 1, 1, 2), (1.0, 0.5, 1, 2), (1.0, 2, 0.5, 2), (1.0, 2, 2.5, 2), (1.0, 2, 1, 0)]
    )
    def test_range_checks(self, args):
        with pytest.raises(ValueError):
            adv.FamilyParams(*args)

    def test_sizes(self):
        params = adv.FamilyParams(1.0, 4.0, 2.0, 8)
        assert (params.r1_size, params.r2_size, params.n_bins) == (2, 4, 16)

    def test_non_integral_sizes_refused(self):
        params = adv.FamilyParams(1.0, 3.0, 1.0, 2)
        assert not params.is_integral
        with pytest.raises(ValueError, match="not an integer"):
            params.r1_size
        with pytest.raises(ValueError):
            adv.make_member(params, [1], [1, 2], "perturb-p1")
        assert params.refined().n_half == 6 and params.refined().is_integral


class TestMembers:
    def test_worked_example(self):
        m = adv.make_member(SMALL, {1}, {1, 2}, "perturb-p1")
        assert m.distribution.density.tolist() == [2.0, 0.0, 1.0, 1.0]
        assert m.distribution.masses.tolist() == [0.5, 0.0, 0.25, 0.25]

    def test_mirror(self):
        m = adv.make_member(SMALL, {1}, {1, 2}, "perturb-p2")
        assert m.distribution.masses.tolist() == [0.25, 0.25, 0.5, 0.0]

    @pytest.mark.parametrize("r1,r2", [([1, 2], [1, 2]), ([1], [1]), ([3], [1, 2]), ([1, 1], [1, 2])])
    def test_bad_subsets(self, r1, r2):
        with pytest.raises(ValueError):
            adv.make_member(SMALL, r1, r2, "perturb-p1")

    @given(
        st.sampled_from([(1.0, 2.0, 1.0, 4), (0.5, 1.0, 1.0, 6), (1.0, 4.0, 2.0, 8), (0.5, 2.5, 1.25, 10)]),
        st.sampled_from(list(adv.Side)),
        st.randoms(use_true_random=False),
    )
    def test_against_fraction_oracle(self, raw, side, rnd):
        params = adv.FamilyParams(*raw)
        r1 = rnd.sample(range(1, params.n_half + 1), params.r1_size)
        r2 = rnd.sample(range(1, params.n_half + 1), params.r2_size)
        member = adv.make_member(params, r1, r2, side)
        exact = oracles.member_masses(*raw, set(r1), set(r2), side is adv.Side.PERTURB_P2)
        assert sum(exact) == 1
        assert np.all(np.abs(member.distribution.masses - np.array([float(x) for x in exact])) <= 1e-15)
        assert abs(member.distribution.masses.sum() - 1) <= 1e-12
        assert member.added_mass == pytest.approx(0.5 * params.b)
        assert member.removed_mass == pytest.approx(0.5 * params.b)

    def test_iter_members_count(self):
        params = adv.FamilyParams(1.0, 2.0, 1.0, 4)
        assert sum(1 for _ in adv.iter_members(params, "perturb-p1")) == math.comb(4, 2)


class TestProfile:
    LIMIT = adv.FamilyParams(1.0, 1e6, 1.0, 1000)

    def test_limit_closed_forms(self):
        prof = adv.family_distance_profile(self.LIMIT)
        assert prof.hellinger_to_p1 == pytest.approx(0.25 * ((math.sqrt(2) - 1) ** 2 + 1), abs=1e-12)
        assert abs(prof.ratio - math.sqrt(2) / (math.sqrt(2) - 1)) <= 3e-3
        assert prof.chi2_to_p1 == pytest.approx(2 / 3, abs=1e-12)
        assert abs(prof.chi2_ratio - 3) <= 3e-3
        assert prof.max_discrepancy <= 1e-12

    def test_far_distance_closed_form(self):
        for a1 in (2.0, 10.0, 100.0):
            prof = adv.closed_form_profile(adv.FamilyParams(1.0, a1, 1.0, 100))
            expected = 0.25 * (2 * (1 - 1 / a1) + (1 - math.sqrt(2 / a1)) ** 2 + 1)
            assert prof.hellinger_to_p2 == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("side", list(adv.Side))
    @pytest.mark.parametrize("raw", [(1.0, 2.0, 1.0, 10), (0.5, 1.0, 0.75, 12), (0.3, 0.6, 1.2, 20)])
    def test_closed_form_matches_direct(self, raw, side):
        assert adv.family_distance_profile(adv.FamilyParams(*raw), side).max_discrepancy <= 1e-12

    def test_uniform_across_members(self):
        params = adv.FamilyParams(1.0, 4.0, 2.0, 40)
        rng = np.random.default_rng(0)
        p1, _ = adv.base_pair(1.0, params.n_bins)
        values = []
        for _ in range(20):
            r1 = rng.choice(np.arange(1, 41), params.r1_size, replace=False)
            r2 = rng.choice(np.arange(1, 41), params.r2_size, replace=False)
            values.append(hellinger_sq(adv.make_member(params, r1, r2, "perturb-p1").distribution, p1))
        assert max(values) - min(values) <= 1e-12

    def test_ratios_approach_limits(self):
        h_prev, c_prev = 0.0, 0.0
        for k in range(2, 7):
            prof = adv.closed_form_profile(adv.FamilyParams(1.0, 10.0**k, 1.0, 10**k))
            assert h_prev < prof.ratio < adv.HELLINGER_RATIO_LIMIT
            assert c_prev < prof.chi2_ratio < 3
            h_prev, c_prev = prof.ratio, prof.chi2_ratio
        assert adv.HELLINGER_RATIO_LIMIT - h_prev < 3e-3


class TestCollisions:
    def test_single_sample(self):
        assert adv.collision_probability(SMALL, 1) == 1

    def test_two_factor_product(self):
        assert adv.collision_probability(SMALL, 3) == 0.375

    @given(st.integers(1, 200), st.integers(1, 40))
    def test_matches_fraction_product(self, n_bins, m):
        exact = oracles.no_collision_product(n_bins, m) if m <= n_bins else Fraction(0)
        assert abs(adv.uniform_no_collision(n_bins, m) - float(exact)) <= 1e-12

    def test_schedule_constant(self):
        c = adv.minimal_collision_constant()
        assert c == 4
        for m in (10, 100, 1000):
            n = adv.schedule_n_half(m, c)
            assert adv.uniform_no_collision(2 * n, m) >= 11 / 12
        assert any(adv.uniform_no_collision(2 * adv.schedule_n_half(m, c - 1), m) < 11 / 12 for m in (10, 100, 1000))

    @pytest.mark.parametrize("raw", [(1.0, 2.0, 1.0, 2), (1.0, 1.5, 1.0, 3), (1.0, 3.0, 1.5, 3)])
    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_member_probability_brute_force(self, raw, m):
        params = adv.FamilyParams(*raw)
        for side in adv.Side:
            member = next(adv.iter_members(params, side)).distribution.masses
            brute = sum(math.prod(member[i] for i in tup) for tup in itertools.permutations(range(params.n_bins), m))
            assert adv.member_collision_probability(params, m, side) == pytest.approx(brute, abs=1e-12)

    def test_member_probability_drops_with_large_a1(self):
        m = 50
        n = adv.schedule_n_half(m, 3)
        uniform = adv.collision_probability(adv.FamilyParams(1.0, 1.0, 1.0, n), m)
        spiky = adv.member_collision_probability(adv.FamilyParams(1.0, 49.0, 1.0, n), m)
        assert spiky < uniform


class TestBounds:
    def test_examples(self):
        assert adv.conditioning_tv_bound(0, Fraction(1, 12), Fraction(1, 12)) == Fraction(1, 3)
        assert adv.conditioning_tv_bound(0, 0, 0) == 0
        assert adv.conditioning_tv_bound(0.5, 0.2, 0.3) == 1
        assert adv.lecam_floor(Fraction(1, 3)) == Fraction(1, 3)
        assert adv.lecam_floor(0) == 0.5
        assert adv.lecam_floor(1) == 0

    @pytest.mark.parametrize("args", [(-0.1, 0, 0), (0, 1.1, 0), (0, 0, -1)])
    def test_range(self, args):
        with pytest.raises(ValueError):
            adv.conditioning_tv_bound(*args)
        with pytest.raises(ValueError):
            adv.lecam_floor(args[0] if args[0] else 1.5)

    @given(st.fractions(0, Fraction(1, 4)))
    def test_composition_identity(self, x):
        assert adv.lecam_floor(adv.conditioning_tv_bound(0, x, x)) == (1 - 4 * x) / 2


class TestEnumeration:
    @pytest.mark.parametrize("raw,m", [((1.0, 2.0, 1.0, 2), 2), ((1.0, 1.5, 1.0, 3), 2), ((1.0, 3.0, 1.0, 3), 2), ((1.0, 2.0, 1.0, 2), 3)])
    def test_conditional_law_matches_fraction_oracle(self, raw, m):
        params = adv.FamilyParams(*raw)
        for side, mirrored in ((adv.Side.PERTURB_P1, False), (adv.Side.PERTURB_P2, True)):
            law = adv.conditional_law(params, m, side)
            exact = oracles.conditional_law(*raw, m, mirrored)
            for tup, value in exact.items():
                assert abs(law[tup] - float(value)) <= 1e-12
            assert abs(law.sum() - 1) <= 1e-12

    def test_exact_gap_for_worked_instance(self):
        # independent Fraction enumeration: the two conditional laws differ by 1/10 at some tuple
        a = oracles.conditional_law(1, 2, 1, 2, 2, False)
        b = oracles.conditional_law(1, 2, 1, 2, 2, True)
        gap = max(abs(a[k] - b[k]) for k in a)
        assert gap == Fraction(1, 10)
        assert adv.conditional_law_gap(SMALL, 2) == pytest.approx(0.1, abs=1e-12)
        assert adv.conditional_equality_check(SMALL, 2) is False

    def test_single_sample_equal(self):
        for raw in [(1.0, 2.0, 1.0, 2), (1.0, 3.0, 1.0, 3), (0.5, 1.0, 1.0, 4)]:
            assert adv.conditional_equality_check(adv.FamilyParams(*raw), 1)

    def test_mixture_marginal_uniform(self):
        for raw in [(1.0, 2.0, 1.0, 2), (1.0, 2.0, 1.0, 4), (1.0, 3.0, 1.5, 3)]:
            params = adv.FamilyParams(*raw)
            for side in adv.Side:
                assert np.all(adv.mixture_marginal(params, side).masses == 1 / params.n_bins)

    @pytest.mark.parametrize("m", [2, 3])
    def test_equal_heights_control(self, m):
        assert adv.conditional_equality_check(adv.FamilyParams(1.0, 2.0, 2.0, 4), m)

    def test_corrupted_family_negative_control(self):
        good = adv.FamilyParams(1.0, 2.0, 2.0, 4)
        corrupted = adv.FamilyParams(1.0, 4.0, 2.0, 4)
        assert corrupted.r1_size != good.r1_size
        assert not adv.conditional_equality_check(good, 2, corrupted)

    def test_too_large(self):
        with pytest.raises(adv.InstanceTooLargeError):
            adv.conditional_equality_check(adv.FamilyParams(1.0, 2.0, 1.0, 8), 2)
        with pytest.raises(adv.InstanceTooLargeError):
            adv.conditional_equality_check(SMALL, 4)


class TestExperiment:
    PARAMS = adv.FamilyParams(1.0, 4.0, 1.0, 4 * 19**2)

    def test_no_trials(self):
        with pytest.raises(ValueError, match="no trials"):
            adv.indistinguishability_experiment(self.PARAMS, 20, Family.BARAUD, 0, 1)

    def test_constant_h0_errs_on_d2_rounds(self):
        always_h0 = lambda batch: TestDecision(Verdict.H0, 0.0, True)  # noqa: E731
        est = adv.indistinguishability_experiment(self.PARAMS, 20, always_h0, 4000, 3)
        assert est.type1 == 0 and est.type2 == 1
        assert abs(est.mixed_error - 0.5) <= 4 * math.sqrt(0.25 / 4000)

    def test_thread_count_does_not_change_result(self):
        a = adv.indistinguishability_experiment(self.PARAMS, 20, "baraud", 600, 11, threads=1)
        b = adv.indistinguishability_experiment(self.PARAMS, 20, "baraud", 600, 11, threads=4)
        assert a == b

    def test_callable_and_builtin_agree(self):
        from robust_hellinger.robust_tests import TestSpec, make_test

        p1, p2 = adv.base_pair(1.0, self.PARAMS.n_bins)
        test = make_test(TestSpec(Family.BARAUD, p1, p2))
        a = adv.indistinguishability_experiment(self.PARAMS, 20, test, 300, 5)
        b = adv.indistinguishability_experiment(self.PARAMS, 20, lambda batch: test(batch), 300, 5)
        assert a == b

    def test_floor_holds_for_ml(self):
        est = adv.indistinguishability_experiment(self.PARAMS, 20, "ml", 3000, 8)
        assert est.mixed_error >= 1 / 3 - 3 * est.mixed_standard_error
