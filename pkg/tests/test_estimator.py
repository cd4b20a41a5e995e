import math

import numpy as np
import pytest

from tailstrat.estimator import (
    AllocationStrategy,
    FailureEstimate,
    allocate,
    importance_estimate,
    largest_remainder,
    mcs_estimate,
    predicted_variance,
    tss_estimate,
    tss_full_with_a0,
)
from tailstrat.probmath import log_std_normal_pdf_vector, std_normal_cdf
from tailstrat.rng import RngStream
from tailstrat.sampling import sample_gaussian_shell
from tailstrat.stratification import (
    build_gaussian_radial,
    empirical_stratify,
    null_stratum_empty,
    null_stratum_from_design_point,
    null_stratum_from_predicate,
)


def norms(x):
    return np.linalg.norm(np.atleast_2d(x), axis=1)


def radial_problem(m=2, unbiased=False):
    strat = build_gaussian_radial(2, 3.0, 0.1, m, unbiased_tail=unbiased)
    safe = null_stratum_from_design_point(3.0, 2)
    return strat, safe


class TestAllocationStrategy:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            AllocationStrategy("optimal")

    def test_general_needs_valid_gammas(self):
        with pytest.raises(ValueError):
            AllocationStrategy("general")
        with pytest.raises(ValueError):
            AllocationStrategy.general((0.5, 0.6))
        with pytest.raises(ValueError):
            AllocationStrategy.general((1.1, -0.1))

    def test_pf_guesses_must_be_probabilities(self):
        with pytest.raises(ValueError):
            AllocationStrategy.neyman((0.5, 1.5))


class TestLargestRemainder:
    def test_printed_proportional_split(self):
        w = [0.9, 0.09, 0.009, 0.0009]
        np.testing.assert_array_equal(largest_remainder(w, 4000),
                                      [3600, 360, 36, 4])

    def test_exact_sum_on_random_weights(self):
        gen = np.random.default_rng(0)
        for _ in range(50):
            w = gen.uniform(0.0, 1.0, size=gen.integers(2, 8))
            n = int(gen.integers(1, 5000))
            counts = largest_remainder(w, n)
            assert counts.sum() == n
            assert np.all(counts >= 0)

    def test_tie_goes_to_lower_index(self):
        np.testing.assert_array_equal(largest_remainder([0.5, 0.5], 7), [4, 3])
        np.testing.assert_array_equal(largest_remainder([1.0, 1.0, 1.0], 4),
                                      [2, 1, 1])

    def test_bad_weights_rejected(self):
        with pytest.raises(ValueError):
            largest_remainder([0.5, -0.5], 10)
        with pytest.raises(ValueError):
            largest_remainder([0.0, 0.0], 10)


class TestAllocate:
    def test_proportional_large_budget(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 4)
        np.testing.assert_array_equal(
            allocate(AllocationStrategy.proportional(), strat, 4000),
            [3600, 360, 36, 4])

    def test_small_budget_keeps_deep_tail_alive(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 4)
        counts = allocate(AllocationStrategy.proportional(), strat, 300)
        np.testing.assert_array_equal(counts, [269, 27, 3, 1])

    def test_equal_split(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 4)
        np.testing.assert_array_equal(
            allocate(AllocationStrategy.equal(), strat, 10), [3, 3, 2, 2])

    def test_neyman_with_guesses(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 2)
        counts = allocate(AllocationStrategy.neyman((0.5, 0.5)), strat, 4000)
        np.testing.assert_array_equal(counts, [3636, 364])

    def test_zero_weight_stratum_stays_empty(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 3)
        counts = allocate(AllocationStrategy.general((0.9, 0.1, 0.0)), strat, 100)
        np.testing.assert_array_equal(counts, [90, 10, 0])
        counts = allocate(AllocationStrategy.neyman((0.5, 0.0, 0.5)), strat, 100)
        assert counts[1] == 0
        assert counts.sum() == 100

    def test_budget_below_live_strata_rejected(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 4)
        with pytest.raises(ValueError, match="budget"):
            allocate(AllocationStrategy.equal(), strat, 3)


class TestPredictedVariance:
    def test_matches_hand_formula(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 2)
        w = np.asarray(strat.strata_probs)
        pf = np.array([0.2, 0.6])
        n = 1000
        gamma = w / w.sum()
        expect = float(np.sum(w**2 * pf * (1 - pf) / (gamma * n)))
        got = predicted_variance(AllocationStrategy.proportional(), strat, pf, n)
        assert got == pytest.approx(expect, rel=1e-12)
        gamma = np.array([0.5, 0.5])
        expect = float(np.sum(w**2 * pf * (1 - pf) / (gamma * n)))
        assert predicted_variance(AllocationStrategy.equal(), strat, pf, n) \
            == pytest.approx(expect, rel=1e-12)

    def test_starved_variance_is_infinite(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 2)
        alloc = AllocationStrategy.general((1.0, 0.0))
        assert predicted_variance(alloc, strat, [0.2, 0.5], 100) == math.inf

    def test_no_variance_anywhere_is_zero(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 2)
        alloc = AllocationStrategy.general((1.0, 0.0))
        assert predicted_variance(alloc, strat, [0.0, 1.0], 100) == 0.0

    def test_neyman_never_beats_itself(self):
        gen = np.random.default_rng(42)
        strat = build_gaussian_radial(2, 3.0, 0.1, 3)
        neyman = AllocationStrategy.neyman()
        rivals = [AllocationStrategy.proportional(), AllocationStrategy.equal()]
        for _ in range(100):
            pf = gen.uniform(0.05, 0.95, size=3)
            g = gen.uniform(0.1, 1.0, size=3)
            rivals_here = rivals + [AllocationStrategy.general(tuple(g / g.sum()))]
            v_star = predicted_variance(neyman, strat, pf, 500)
            for rival in rivals_here:
                assert v_star <= predicted_variance(rival, strat, pf, 500) * (1 + 1e-12)

    def test_length_mismatch_rejected(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 3)
        with pytest.raises(ValueError):
            predicted_variance(AllocationStrategy.equal(), strat, [0.1, 0.2], 100)


class TestTssEstimate:
    def test_norm_threshold_is_estimated_exactly(self):
        # failure = beyond the first stratum boundary: stratum 1 never
        # fails, stratum 2 always does, so the estimate is deterministic
        strat, safe = radial_problem(m=2)
        b1 = strat.boundaries[1]
        est = tss_estimate(strat, safe, lambda x: norms(x) > b1,
                           AllocationStrategy.proportional(), 1000, RngStream(1))
        assert est.p_hat == pytest.approx(strat.strata_probs[1], rel=1e-14)
        assert est.var_hat == 0.0
        assert est.cov == 0.0
        assert est.bias_bound == pytest.approx(strat.remainder_prob, rel=1e-14)
        # weights 0.9 and 0.09 renormalize over the kept strata
        assert est.per_stratum == ((909, 0.0), (91, 1.0))
        assert est.n_g_evals == 1000
        assert est.estimator_kind == "tss"

    def test_truncation_bias_equals_omitted_mass(self):
        # with an all-failing far tail, estimate + bias bound recovers the
        # exact failure probability P(||x|| > b1)
        strat, safe = radial_problem(m=2)
        b1 = strat.boundaries[1]
        est = tss_estimate(strat, safe, lambda x: norms(x) > b1,
                           AllocationStrategy.proportional(), 1000, RngStream(1))
        exact = math.exp(-b1**2 / 2.0)
        assert est.p_hat + est.bias_bound == pytest.approx(exact, rel=1e-12)

    def test_unbiased_variant_hits_exactly(self):
        strat, safe = radial_problem(m=2, unbiased=True)
        b1 = strat.boundaries[1]
        est = tss_estimate(strat, safe, lambda x: norms(x) > b1,
                           AllocationStrategy.proportional(), 1000, RngStream(1))
        assert est.p_hat == pytest.approx(math.exp(-b1**2 / 2.0), rel=1e-12)
        assert est.bias_bound == 0.0
        assert est.estimator_kind == "tss_unbiased"

    def test_statistical_agreement_with_exact_tail(self):
        strat, safe = radial_problem(m=4)
        r_t = 3.4
        exact = math.exp(-r_t**2 / 2.0)
        est = tss_estimate(strat, safe, lambda x: norms(x) >= r_t,
                           AllocationStrategy.proportional(), 4000, RngStream(2))
        assert est.var_hat > 0.0
        assert abs(est.p_hat - exact) < 3.0 * math.sqrt(est.var_hat) + est.bias_bound

    def test_lhs_scheme_runs_and_tightens_nothing_weird(self):
        strat, safe = radial_problem(m=4)
        r_t = 3.4
        exact = math.exp(-r_t**2 / 2.0)
        est = tss_estimate(strat, safe, lambda x: norms(x) >= r_t,
                           AllocationStrategy.proportional(), 4000, RngStream(2),
                           "lhs")
        assert abs(est.p_hat - exact) < 3.0 * math.sqrt(est.var_hat) + est.bias_bound

    def test_neyman_pilot_path(self):
        strat, safe = radial_problem(m=2)
        mid = 0.5 * (strat.boundaries[1] + strat.boundaries[0])
        est = tss_estimate(strat, safe, lambda x: norms(x) >= mid,
                           AllocationStrategy.neyman(), 500, RngStream(3))
        assert "neyman_pilot" in est.flags
        assert est.n_g_evals == 500
        assert sum(c for c, _ in est.per_stratum) == 500

    def test_pilot_without_variance_rejected(self):
        strat, safe = radial_problem(m=2)
        with pytest.raises(ValueError, match="pilot"):
            tss_estimate(strat, safe, lambda x: np.zeros(len(x), dtype=bool),
                         AllocationStrategy.neyman(), 500, RngStream(3))

    def test_budget_too_small_for_pilot(self):
        strat, safe = radial_problem(m=4)
        with pytest.raises(ValueError, match="Neyman pilot"):
            tss_estimate(strat, safe, lambda x: norms(x) > 3.4,
                         AllocationStrategy.neyman(), 4, RngStream(3))

    def test_explicit_zero_guess_flags_estimate(self):
        strat, safe = radial_problem(m=2)
        b1 = strat.boundaries[1]
        est = tss_estimate(strat, safe, lambda x: norms(x) > b1,
                           AllocationStrategy.neyman((0.0, 0.5)), 200, RngStream(4))
        assert "zero_count_strata" in est.flags
        assert est.per_stratum[0] == (0, 0.0)
        # stratum 1 never fails here, so skipping it changes nothing
        assert est.p_hat == pytest.approx(strat.strata_probs[1], rel=1e-14)

    def test_mismatched_decomposition_rejected(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 2)
        wrong = null_stratum_from_predicate(lambda x: norms(x) < 1.0,
                                            probability=0.5)
        with pytest.raises(ValueError, match="partition"):
            tss_estimate(strat, wrong, lambda x: norms(x) > 4.0,
                         AllocationStrategy.proportional(), 100, RngStream(1))

    def test_empirical_pool_path(self):
        tail = sample_gaussian_shell(2, 3.0, math.inf, 20_000, RngStream(5))
        strat = empirical_stratify(tail, log_std_normal_pdf_vector, norms,
                                   0.1, 3, prob_a_star=math.exp(-4.5))
        safe = null_stratum_from_design_point(3.0, 2)
        exact = math.exp(-3.5**2 / 2.0)
        est = tss_estimate(strat, safe, lambda x: norms(x) >= 3.5,
                           AllocationStrategy.proportional(), None, RngStream(6))
        assert abs(est.p_hat - exact) < 4.0 * math.sqrt(est.var_hat) + est.bias_bound
        with pytest.raises(ValueError, match="proportional"):
            tss_estimate(strat, safe, lambda x: norms(x) >= 3.5,
                         AllocationStrategy.equal(), None, RngStream(6))
        with pytest.raises(ValueError, match="pool holds"):
            tss_estimate(strat, safe, lambda x: norms(x) >= 3.5,
                         AllocationStrategy.proportional(), 5000, RngStream(6))

    def test_record_shape(self):
        strat, safe = radial_problem(m=2)
        b1 = strat.boundaries[1]
        est = tss_estimate(strat, safe, lambda x: norms(x) > b1,
                           AllocationStrategy.proportional(), 100, RngStream(7))
        rec = est.to_record()
        assert set(rec) == {"p_hat", "var_hat", "cov", "bias_bound",
                            "n_g_evals", "estimator_kind", "flags"}
        assert rec["estimator_kind"] == "tss"
        assert isinstance(rec["flags"], str)


class TestTssFullWithA0:
    def test_zero_a0_budget_is_the_plain_estimator(self):
        strat, safe = radial_problem(m=2)
        ind = lambda x: norms(x) > strat.boundaries[1]
        alloc = AllocationStrategy.proportional()
        a = tss_estimate(strat, safe, ind, alloc, 500, RngStream(8))
        b = tss_full_with_a0(strat, safe, ind, alloc, 500, 0, RngStream(8))
        assert b.p_hat == a.p_hat
        assert b.var_hat == a.var_hat
        assert b.per_stratum == a.per_stratum

    def test_safe_null_stratum_adds_nothing(self):
        strat, safe = radial_problem(m=2)
        ind = lambda x: norms(x) > strat.boundaries[1]
        alloc = AllocationStrategy.proportional()
        a = tss_estimate(strat, safe, ind, alloc, 500, RngStream(8))
        b = tss_full_with_a0(strat, safe, ind, alloc, 500, 300, RngStream(8))
        assert b.p_hat == a.p_hat
        assert b.var_hat == a.var_hat
        assert b.estimator_kind == "tss_full"
        assert b.per_stratum[0] == (300, 0.0)
        assert b.per_stratum[1:] == a.per_stratum
        assert b.n_g_evals == a.n_g_evals + 300
        assert b.extra["a0_term"] == 0.0
        assert "safe_region_violation" not in b.flags

    def test_failing_null_stratum_is_flagged_not_dropped(self):
        strat, safe = radial_problem(m=2)
        always_fail = lambda x: np.ones(len(np.atleast_2d(x)), dtype=bool)
        alloc = AllocationStrategy.proportional()
        tail = tss_estimate(strat, safe, always_fail, alloc, 500, RngStream(9))
        full = tss_full_with_a0(strat, safe, always_fail, alloc, 500, 100,
                                RngStream(9))
        assert "safe_region_violation" in full.flags
        assert full.p_hat == pytest.approx(tail.p_hat + safe.probability,
                                           rel=1e-12)

    def test_misuse_rejected(self):
        strat, safe = radial_problem(m=2)
        ind = lambda x: norms(x) > 4.0
        alloc = AllocationStrategy.proportional()
        with pytest.raises(ValueError, match="nonnegative"):
            tss_full_with_a0(strat, safe, ind, alloc, 100, -1, RngStream(1))
        # an unstated safe region cannot be sampled
        strat_open = build_gaussian_radial(2, 0.0, 0.1, 2)
        with pytest.raises(ValueError, match="null stratum"):
            tss_full_with_a0(strat_open, null_stratum_empty(), ind, alloc,
                             100, 10, RngStream(1))

    def test_predicate_region_needs_its_own_sampler(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 2)
        safe = null_stratum_from_predicate(lambda x: norms(x) < 3.0,
                                           probability=1.0 - math.exp(-4.5))
        ind = lambda x: norms(x) > 4.0
        alloc = AllocationStrategy.proportional()
        with pytest.raises(ValueError, match="a0_sampler"):
            tss_full_with_a0(strat, safe, ind, alloc, 100, 10, RngStream(1))


class TestMcsEstimate:
    @staticmethod
    def normal_sampler(gen, n):
        return gen.standard_normal((n, 1))

    def test_binomial_bookkeeping(self):
        n = 100_000
        est = mcs_estimate(lambda x: x[:, 0] > 2.0, self.normal_sampler, n,
                           RngStream(10))
        p = 1.0 - std_normal_cdf(2.0)
        assert abs(est.p_hat - p) < 3.0 * math.sqrt(p * (1 - p) / n)
        assert est.var_hat == pytest.approx(est.p_hat * (1 - est.p_hat) / n)
        assert est.estimator_kind == "mcs"
        assert est.per_stratum == ((n, est.p_hat),)
        assert est.bias_bound == 0.0

    def test_batching_does_not_change_the_stream(self):
        ind = lambda x: x[:, 0] > 2.0
        a = mcs_estimate(ind, self.normal_sampler, 50_000, RngStream(11),
                         batch=7_000)
        b = mcs_estimate(ind, self.normal_sampler, 50_000, RngStream(11),
                         batch=50_000)
        assert a.p_hat == b.p_hat

    def test_zero_failures_has_undefined_cov(self):
        est = mcs_estimate(lambda x: x[:, 0] > 50.0, self.normal_sampler, 1000,
                           RngStream(12))
        assert est.p_hat == 0.0
        assert est.cov is None

    def test_bad_n_rejected(self):
        with pytest.raises(ValueError):
            mcs_estimate(lambda x: x[:, 0] > 2.0, self.normal_sampler, 0,
                         RngStream(1))


class TestImportanceEstimate:
    def test_shifted_proposal_for_a_normal_tail(self):
        # P(X > 3) under N(0,1), proposal N(3,1)
        n = 10_000
        log_f = lambda x: -0.5 * x[:, 0] ** 2
        log_q = lambda x: -0.5 * (x[:, 0] - 3.0) ** 2
        est = importance_estimate(
            lambda x: x[:, 0] > 3.0, log_f, log_q,
            lambda gen, k: 3.0 + gen.standard_normal((k, 1)), n, RngStream(13))
        p = 1.0 - std_normal_cdf(3.0)
        assert p == pytest.approx(1.3499e-3, abs=1e-7)
        assert abs(est.p_hat - p) < 3.0 * math.sqrt(est.var_hat)
        # the tilted proposal beats plain Monte Carlo variance easily
        assert est.var_hat < 0.1 * p * (1 - p) / n
        assert est.estimator_kind == "importance"
        assert est.flags == ()

    def test_low_effective_sample_size_flagged(self):
        pts = np.linspace(0.0, 5.0, 50)[:, None]
        est = importance_estimate(
            lambda x: x[:, 0] > 1.0,
            lambda x: x[:, 0] ** 2, lambda x: np.zeros(len(x)),
            lambda gen, k: pts[:k], 50, RngStream(14))
        assert "low_ess" in est.flags

    def test_no_failures_is_degenerate(self):
        est = importance_estimate(
            lambda x: x[:, 0] > 99.0,
            lambda x: np.zeros(len(x)), lambda x: np.zeros(len(x)),
            lambda gen, k: gen.standard_normal((k, 1)), 100, RngStream(15))
        assert est.p_hat == 0.0
        assert "degenerate" in est.flags
        assert est.cov is None
