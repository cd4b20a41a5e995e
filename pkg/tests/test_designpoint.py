import math

import numpy as np
import pytest

from tailstrat.benchmarks import get_benchmark
from tailstrat.designpoint import find_design_point, multi_start_design_point
from tailstrat.rng import RngStream


class TestFindDesignPoint:
    def test_linear_margin(self):
        res = find_design_point(lambda x: 3.0 - x[:, 0], 2)
        assert res.converged
        assert res.beta == pytest.approx(3.0, abs=1e-6)
        np.testing.assert_allclose(res.x_star, [3.0, 0.0], atol=1e-6)
        assert abs(res.g_value) < 1e-6

    def test_random_linear_margins(self):
        gen = np.random.default_rng(3)
        for _ in range(10):
            a = gen.uniform(-2.0, 2.0, size=4)
            if np.linalg.norm(a) < 0.5:
                continue
            c = gen.uniform(1.0, 5.0)
            res = find_design_point(lambda x: c - x @ a, 4)
            assert res.converged
            assert res.beta == pytest.approx(c / np.linalg.norm(a), abs=1e-6)

    def test_spherical_margin(self):
        res = find_design_point(lambda x: 4.0 - np.linalg.norm(x, axis=1), 3,
                                x0=np.array([1.0, 1.0, 1.0]))
        assert res.converged
        assert res.beta == pytest.approx(4.0, abs=1e-6)

    def test_quadratic_valley(self):
        # g = 2 - x1^2: two symmetric solutions at |x1| = sqrt(2)
        res = find_design_point(lambda x: 2.0 - x[:, 0] ** 2, 2,
                                x0=np.array([1.0, 0.5]))
        assert res.converged
        assert res.beta == pytest.approx(math.sqrt(2.0), abs=1e-6)

    def test_flat_function_flags_zero_gradient(self):
        res = find_design_point(lambda x: np.ones(x.shape[0]), 2)
        assert not res.converged
        assert "zero_gradient" in res.flags

    def test_nan_from_g_is_an_error(self):
        def g(x):
            return np.where(x[:, 0] > 1.0, np.nan, 3.0 - x[:, 0])
        with pytest.raises(ValueError, match="NaN"):
            find_design_point(g, 2)

    def test_eval_counter_matches_calls(self, counting):
        wrapped = counting(lambda x: 3.0 - x[:, 0])
        res = find_design_point(wrapped, 2)
        assert res.g_evals == wrapped.rows

    def test_bad_start_shape(self):
        with pytest.raises(ValueError, match="x0"):
            find_design_point(lambda x: 3.0 - x[:, 0], 2, x0=np.zeros(3))


class TestMultiStart:
    def test_four_branch_reaches_the_global_branch(self):
        b = get_benchmark("four_branch")
        res = multi_start_design_point(b.g, 2, RngStream(7).substream(3),
                                       n_starts=8)
        assert res.converged
        assert res.beta == pytest.approx(3.0, abs=1e-3)

    def test_shallow_rastrigin_minimum(self):
        b = get_benchmark("rastrigin")
        res = multi_start_design_point(b.g, 2, RngStream(7).substream(3),
                                       n_starts=8)
        assert res.converged
        assert res.beta == pytest.approx(0.6422, abs=2e-3)

    def test_stalled_surface_point_is_still_usable(self):
        # a high-curvature boundary keeps the update orbiting; the point
        # on the surface is returned and marked rather than discarded
        b = get_benchmark("wavy_line")
        res = multi_start_design_point(b.g, 2, RngStream(7).substream(3),
                                       n_starts=8)
        assert "stalled_on_surface" in res.flags
        assert res.beta == pytest.approx(4.3673, abs=2e-3)
        assert abs(res.g_value) < 1e-4

    def test_plateau_surface_reports_failure_honestly(self):
        # nearly-flat margins give the search nothing to follow; the
        # result must say so instead of pretending convergence
        b = get_benchmark("black_swan")
        res = multi_start_design_point(b.g, 2, RngStream(7).substream(3),
                                       n_starts=8)
        assert not res.converged
        assert "no_start_converged" in res.flags

    def test_total_eval_accounting(self, counting):
        wrapped = counting(lambda x: 3.0 - x[:, 0])
        res = multi_start_design_point(wrapped, 2, RngStream(1), n_starts=4)
        assert res.g_evals == wrapped.rows

    def test_deterministic_per_stream(self):
        b = get_benchmark("four_branch")
        r1 = multi_start_design_point(b.g, 2, RngStream(11), n_starts=4)
        r2 = multi_start_design_point(b.g, 2, RngStream(11), n_starts=4)
        np.testing.assert_array_equal(r1.x_star, r2.x_star)
        assert r1.g_evals == r2.g_evals

    def test_bad_n_starts(self):
        with pytest.raises(ValueError):
            multi_start_design_point(lambda x: 3.0 - x[:, 0], 2, RngStream(1),
                                     n_starts=0)
