import math

import numpy as np
import pytest

from tailstrat.probmath import chi_cdf, chi_sf, log_std_normal_pdf_vector
from tailstrat.rng import RngStream
from tailstrat.sampling import (
    SamplingError,
    allocated_samples,
    proportional_pool,
    sample_gaussian_ball,
    sample_gaussian_shell,
    sample_uniform_shell,
)
from tailstrat.stratification import (
    build_gaussian_radial,
    build_uniform_norm,
    classify,
    empirical_stratify,
)


def norms(x):
    return np.linalg.norm(np.atleast_2d(x), axis=1)


class TestGaussianShell:
    def test_shape_and_containment(self):
        x = sample_gaussian_shell(3, 2.0, 4.0, 500, RngStream(1))
        assert x.shape == (500, 3)
        r = norms(x)
        assert np.all(r >= 2.0)
        assert np.all(r <= 4.0)

    def test_deterministic_per_stream(self):
        a = sample_gaussian_shell(2, 3.0, math.inf, 100, RngStream(9))
        b = sample_gaussian_shell(2, 3.0, math.inf, 100, RngStream(9))
        np.testing.assert_array_equal(a, b)

    def test_conditional_tail_fractions(self):
        # beyond r_k the conditional tail mass is 0.1^k of the shell
        n = 100_000
        x = sample_gaussian_shell(2, 3.0, math.inf, n, RngStream(2))
        r = norms(x)
        r1 = math.sqrt(9.0 + 2.0 * math.log(10.0))
        r2 = math.sqrt(9.0 + 4.0 * math.log(10.0))
        f1 = np.mean(r >= r1)
        f2 = np.mean(r >= r2)
        assert abs(f1 - 0.1) < 3.0 * math.sqrt(0.1 * 0.9 / n)
        assert abs(f2 - 0.01) < 3.0 * math.sqrt(0.01 * 0.99 / n)

    def test_direction_is_isotropic(self):
        x = sample_gaussian_shell(2, 3.0, 4.0, 50_000, RngStream(3))
        u = x / norms(x)[:, None]
        assert np.all(np.abs(u.mean(axis=0)) < 3.0 / math.sqrt(2 * 50_000))

    def test_high_dimension_squared_norm(self):
        n = 2000
        x = sample_gaussian_shell(1000, 0.0, math.inf, n, RngStream(4))
        m = float(np.mean(np.sum(x * x, axis=1)))
        assert abs(m - 1000.0) < 3.0 * math.sqrt(2.0 * 1000.0 / n)

    def test_exclusive_lower_edge(self):
        x = sample_gaussian_shell(2, 3.0, math.inf, 1000, RngStream(5),
                                  inclusive_low=False)
        assert np.all(norms(x) > 3.0)

    def test_lhs_stratifies_radius_one_per_bin(self):
        n = 64
        x = sample_gaussian_shell(2, 3.0, math.inf, n, RngStream(6), "lhs")
        q_lo = chi_sf(3.0, 2)
        u = 1.0 - chi_sf(norms(x), 2) / q_lo
        bins = np.minimum((u * n).astype(int), n - 1)
        assert sorted(bins) == list(range(n))

    def test_lhs_stratifies_angle_in_two_dimensions(self):
        n = 64
        x = sample_gaussian_shell(2, 3.0, math.inf, n, RngStream(6), "lhs")
        ang = np.mod(np.arctan2(x[:, 1], x[:, 0]), 2.0 * math.pi)
        bins = np.minimum((ang / (2 * math.pi) * n).astype(int), n - 1)
        assert sorted(bins) == list(range(n))

    def test_bad_arguments_rejected(self):
        with pytest.raises(ValueError):
            sample_gaussian_shell(2, 3.0, math.inf, 0, RngStream(1))
        with pytest.raises(ValueError):
            sample_gaussian_shell(2, -1.0, 2.0, 10, RngStream(1))
        with pytest.raises(ValueError):
            sample_gaussian_shell(2, 3.0, 2.0, 10, RngStream(1))
        with pytest.raises(ValueError):
            sample_gaussian_shell(2, 3.0, math.inf, 10, RngStream(1), "sobol")


class TestGaussianBall:
    def test_containment(self):
        x = sample_gaussian_ball(2, 3.0, 2000, RngStream(7))
        assert np.all(norms(x) < 3.0)

    def test_conditional_law(self):
        n = 100_000
        x = sample_gaussian_ball(2, 3.0, n, RngStream(8))
        p = chi_cdf(1.0, 2) / chi_cdf(3.0, 2)
        f = np.mean(norms(x) <= 1.0)
        assert abs(f - p) < 3.0 * math.sqrt(p * (1 - p) / n)

    def test_bad_arguments_rejected(self):
        with pytest.raises(ValueError):
            sample_gaussian_ball(2, 0.0, 10, RngStream(1))
        with pytest.raises(ValueError):
            sample_gaussian_ball(2, 3.0, 0, RngStream(1))


class TestUniformShell:
    def test_thick_shell_uses_cube_rejection(self):
        stats = {}
        x = sample_uniform_shell(2, math.inf, 0.5, 1.0, 3000, RngStream(10),
                                 stats=stats)
        assert stats["route"] == "cube"
        r = np.max(np.abs(x), axis=1)
        assert np.all(r >= 0.5)
        assert np.all(r <= 1.0)
        # 3 of the 4 units of cube area lie in the shell
        assert stats["expected_acceptance"] == pytest.approx(0.75, abs=1e-6)
        assert 0 < stats["acceptance"] <= 1.0

    def test_thin_shell_switches_to_ball_route(self):
        # in d=8 the 0.9..0.91 l2 shell holds well under 1e-3 of the cube
        stats = {}
        x = sample_uniform_shell(8, 2.0, 0.9, 0.91, 500, RngStream(11),
                                 stats=stats)
        assert stats["route"] == "ball_shell"
        # the shell never touches the cube faces, so nothing is rejected
        assert stats["expected_acceptance"] > 0.999
        r = np.linalg.norm(x, axis=1)
        assert np.all(r >= 0.9)
        assert np.all(r <= 0.91)
        assert np.all(np.abs(x) <= 1.0)

    def test_thin_shell_is_radially_uniform(self):
        n = 20_000
        x = sample_uniform_shell(8, 2.0, 0.9, 0.91, n, RngStream(12))
        r = np.linalg.norm(x, axis=1)
        # radius^d is uniform between the volume endpoints
        u = (r**8 - 0.9**8) / (0.91**8 - 0.9**8)
        f = np.mean(u <= 0.5)
        assert abs(f - 0.5) < 3.0 * math.sqrt(0.25 / n)

    def test_corner_sliver_rejected_with_guidance(self):
        with pytest.raises(SamplingError, match="decompose"):
            sample_uniform_shell(2, 1.0, 2.0 - 1e-6, 2.0, 10, RngStream(13))

    def test_deterministic_per_stream(self):
        a = sample_uniform_shell(2, 1.0, 0.5, 1.5, 200, RngStream(14))
        b = sample_uniform_shell(2, 1.0, 0.5, 1.5, 200, RngStream(14))
        np.testing.assert_array_equal(a, b)

    def test_bad_arguments_rejected(self):
        with pytest.raises(ValueError):
            sample_uniform_shell(2, 2.0, 0.5, 0.5, 10, RngStream(1))
        with pytest.raises(ValueError):
            sample_uniform_shell(2, 2.0, 0.0, 5.0, 10, RngStream(1))
        with pytest.raises(ValueError):
            sample_uniform_shell(2, 2.0, 0.1, 1.0, 0, RngStream(1))


class TestProportionalPool:
    def test_partition_and_counts(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 3)
        pool = proportional_pool(strat, 10_000, RngStream(15))
        assert pool.samples.shape == (10_000, 2)
        total = sum(len(v) for v in pool.by_stratum.values())
        assert total == 10_000
        for k, idx in pool.by_stratum.items():
            np.testing.assert_array_equal(pool.labels[idx], k)
        # multinomial counts around n * (1-p0) p0^(i-1)
        for i, frac in [(1, 0.9), (2, 0.09), (3, 0.009)]:
            got = len(pool.by_stratum.get(i, ()))
            se = math.sqrt(10_000 * frac * (1 - frac))
            assert abs(got - 10_000 * frac) < 4 * se + 1

    def test_beyond_group_for_truncated_scheme(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 2)
        pool = proportional_pool(strat, 50_000, RngStream(16))
        # about 1% of the tail lies beyond the last boundary
        assert 0.005 < pool.n_beyond / 50_000 < 0.015
        assert pool.n_beyond == len(pool.by_stratum[-1])

    def test_unbiased_scheme_has_no_beyond(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 2, unbiased_tail=True)
        pool = proportional_pool(strat, 20_000, RngStream(16))
        assert pool.n_beyond == 0

    def test_uniform_scheme_pool(self):
        strat = build_uniform_norm(2, 1.0, 0.5, 0.1, 2)
        pool = proportional_pool(strat, 5000, RngStream(17))
        assert np.all(np.abs(pool.samples) <= 1.0)
        f1 = len(pool.by_stratum[1]) / 5000
        assert abs(f1 - 0.9) < 4 * math.sqrt(0.09 / 5000)

    def test_empirical_requires_sampler(self):
        tail = sample_gaussian_shell(2, 3.0, math.inf, 1000, RngStream(18))
        strat = empirical_stratify(tail, log_std_normal_pdf_vector, norms,
                                   0.1, 3, prob_a_star=math.exp(-4.5))
        with pytest.raises(ValueError, match="sampler"):
            proportional_pool(strat, 100, RngStream(19))
        pool = proportional_pool(
            strat, 4000, RngStream(19),
            sampler=lambda gen, n: sample_gaussian_shell(
                2, 3.0, math.inf, n, RngStream(20)))
        assert len(pool.by_stratum[1]) / 4000 == pytest.approx(0.9, abs=0.03)


class TestAllocatedSamples:
    def test_counts_and_classification(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 3)
        out = allocated_samples(strat, [50, 20, 10], RngStream(21))
        assert set(out) == {1, 2, 3}
        for i, c in zip((1, 2, 3), (50, 20, 10)):
            assert out[i].shape == (c, 2)
            np.testing.assert_array_equal(classify(strat, out[i]), i)

    def test_zero_count_skips_stratum(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 3)
        out = allocated_samples(strat, [50, 0, 10], RngStream(21))
        assert set(out) == {1, 3}

    def test_strata_use_independent_substreams(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 2)
        a = allocated_samples(strat, [5, 7], RngStream(22))
        b = allocated_samples(strat, [5, 9], RngStream(22))
        np.testing.assert_array_equal(a[1], b[1])
        assert a[2].shape != b[2].shape

    def test_lhs_scheme_on_radial_strata(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 2)
        out = allocated_samples(strat, [32, 16], RngStream(23), "lhs")
        np.testing.assert_array_equal(classify(strat, out[1]), 1)
        np.testing.assert_array_equal(classify(strat, out[2]), 2)

    def test_uniform_scheme_allocation(self):
        strat = build_uniform_norm(2, 1.0, 0.5, 0.1, 2)
        out = allocated_samples(strat, [40, 8], RngStream(24))
        np.testing.assert_array_equal(classify(strat, out[1]), 1)
        np.testing.assert_array_equal(classify(strat, out[2]), 2)
        with pytest.raises(ValueError, match="lhs"):
            allocated_samples(strat, [40, 8], RngStream(24), "lhs")

    def test_validation_errors(self):
        strat = build_gaussian_radial(2, 3.0, 0.1, 3)
        with pytest.raises(ValueError, match="counts"):
            allocated_samples(strat, [5, 5], RngStream(1))
        with pytest.raises(ValueError, match="nonnegative"):
            allocated_samples(strat, [5, -1, 5], RngStream(1))
        tail = sample_gaussian_shell(2, 3.0, math.inf, 1000, RngStream(2))
        emp = empirical_stratify(tail, log_std_normal_pdf_vector, norms,
                                 0.1, 3, prob_a_star=math.exp(-4.5))
        with pytest.raises(ValueError, match="pool"):
            allocated_samples(emp, [5, 5, 5], RngStream(1))
