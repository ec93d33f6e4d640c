import math
import warnings

import numpy as np
import pytest

from csrk.increments import CapacityError
from csrk.integrator import TimeGrid
from csrk.sde import Functional, linear_problem, ode_problem, system2d_problem
from csrk.stats import (
    ErrorRecord,
    dense_error_profile,
    empirical_order,
    error_table,
    exact_weak_expectation,
    grid_for_step,
    mc_expectation,
    mc_expectations_at,
    normal_quantile,
)
from csrk.tableau import builtin_scheme

LIN = linear_problem(1.5, 0.1, 0.1, 2.0)
FX = Functional("identity", 0)
FX2 = Functional("square", 0)


class TestQuantile:
    def test_ninety_percent(self):
        assert normal_quantile(0.9) == pytest.approx(
            1.6448536269514722, abs=1e-14
        )

    def test_domain(self):
        with pytest.raises(ValueError):
            normal_quantile(1.0)


class TestGridForStep:
    def test_divisible(self):
        g = grid_for_step(LIN, 0.25)
        assert g.n_steps == 8 and g.T == 2.0

    def test_non_divisible_rejected(self):
        with pytest.raises(ValueError, match="allow_shortened"):
            grid_for_step(LIN, 0.3)

    def test_shortened_final_step(self):
        g = grid_for_step(LIN, 0.3, allow_shortened=True)
        assert g.T == 2.0
        assert g.step(g.n_steps - 1)[1] == pytest.approx(0.2)


class TestMonteCarlo:
    def test_bit_identical_across_thread_counts(self):
        grid = grid_for_step(LIN, 0.25)
        kw = dict(M=30000, seed=5, confidence=0.9)
        t = builtin_scheme("CRDI2WM")
        e1 = mc_expectation(t, LIN, grid, FX, 2.0, **kw, threads=1)
        e2 = mc_expectation(t, LIN, grid, FX, 2.0, **kw, threads=3)
        e3 = mc_expectation(t, LIN, grid, FX, 2.0, **kw, threads=8)
        assert e1.mean == e2.mean == e3.mean
        assert e1.variance_of_mean == e2.variance_of_mean == e3.variance_of_mean

    def test_same_seed_bit_identical(self):
        grid = grid_for_step(LIN, 0.5)
        t = builtin_scheme("CRDI3WM")
        a = mc_expectation(t, LIN, grid, FX, 1.7, 5000, 9)
        b = mc_expectation(t, LIN, grid, FX, 1.7, 5000, 9)
        assert a == b

    def test_chunk_partition_changes_nothing_but_order(self):
        # M not a multiple of the chunk size still uses every path once
        grid = grid_for_step(LIN, 0.5)
        t = builtin_scheme("CRDI2WM")
        est = mc_expectation(t, LIN, grid, FX, 2.0, 5000, 1, chunk_size=1024)
        assert est.samples == 5000
        est_small = mc_expectation(
            t, LIN, grid, FX, 2.0, 5000, 1, chunk_size=617
        )
        # same paths, same draws; only the reduction grouping differs
        assert est_small.mean == pytest.approx(est.mean, rel=1e-12)

    def test_zero_diffusion_zero_variance(self):
        ode = ode_problem(1.0, 1.0, 1.0)
        grid = grid_for_step(ode, 0.25)
        t = builtin_scheme("CRDI3WM")
        est = mc_expectation(t, ode, grid, FX, 1.0, 1000, 0)
        # identical paths; only mean-summation rounding can leak in
        assert est.variance_of_mean <= 1e-30
        assert est.half_width <= 1e-14

    def test_m_too_small(self):
        grid = grid_for_step(LIN, 0.5)
        with pytest.raises(ValueError):
            mc_expectation(builtin_scheme("EULER_OPT"), LIN, grid, FX, 2.0, 1, 0)

    def test_multiple_times_share_paths(self):
        grid = grid_for_step(LIN, 0.5)
        t = builtin_scheme("CRDI2WM")
        ests = mc_expectations_at(t, LIN, grid, FX, [0.7, 1.7, 2.0], 4000, 3)
        singles = [
            mc_expectation(t, LIN, grid, FX, tv, 4000, 3)
            for tv in (0.7, 1.7, 2.0)
        ]
        for joint, single in zip(ests, singles):
            assert joint.mean == single.mean


class TestExactExpectation:
    def test_one_step_euler_by_hand(self):
        # E[x0 (1 + a h + b dW)] = x0 (1 + a h)
        g = TimeGrid.uniform(0.0, 0.25, 1)
        val = exact_weak_expectation(
            builtin_scheme("EULER_LINEAR"), LIN, g, FX
        )
        assert val == pytest.approx(0.1 * (1 + 1.5 * 0.25), rel=1e-14)

    def test_capacity_error(self):
        g = TimeGrid.uniform(0.0, 2.0, 20)
        with pytest.raises(CapacityError, match="mc_expectation"):
            exact_weak_expectation(
                builtin_scheme("CRDI2WM"), LIN, g, FX, outcome_cap=1000
            )

    def test_matches_mc_within_5_sigma_over_20_seeds(self):
        g = TimeGrid.uniform(0.0, 2.0, 4)
        t = builtin_scheme("CRDI2WM")
        exact = exact_weak_expectation(t, LIN, g, FX2)
        for seed in range(20):
            est = mc_expectation(t, LIN, g, FX2, 2.0, 40000, seed)
            sigma = math.sqrt(est.variance_of_mean)
            assert abs(est.mean - exact) <= 5 * sigma, f"seed {seed}"

    def test_theta_eval_on_final_step(self):
        t = builtin_scheme("CRDI3WM")
        g = TimeGrid.uniform(0.0, 1.0, 2)
        full = exact_weak_expectation(t, LIN, g, FX, theta_eval=1.0)
        mid = exact_weak_expectation(t, LIN, g, FX, theta_eval=0.5)
        assert mid != full
        # theta = 0 discards the final step entirely
        left = exact_weak_expectation(t, LIN, g, FX, theta_eval=0.0)
        one = exact_weak_expectation(t, LIN, TimeGrid.uniform(0, 0.5, 1), FX)
        assert left == pytest.approx(one, rel=1e-14)

    def test_system2d_enumeration_runs(self):
        t = builtin_scheme("CRDI4WM")
        g = TimeGrid.uniform(0.0, 4.0, 2)
        val = exact_weak_expectation(t, system2d_problem(), g, FX2,
                                     outcome_cap=10**4)
        assert np.isfinite(val)


class TestOrderEstimation:
    def test_synthetic_power_law(self):
        pairs = [(h, 3.0 * h**2) for h in (0.5, 0.25, 0.125, 0.0625)]
        est = empirical_order(pairs)
        assert est.slope == pytest.approx(2.0, abs=1e-12)
        assert est.intercept == pytest.approx(math.log2(3.0), abs=1e-12)

    def test_published_digits_linear(self):
        pairs = [
            (2**-1, -2.188e-2), (2**-2, -3.965e-3),
            (2**-3, -5.662e-4), (2**-4, -8.682e-5),
        ]
        assert empirical_order(pairs).slope == pytest.approx(2.66, abs=0.02)

    def test_published_digits_system2d(self):
        pairs = [
            (2.0, -1.031e-2), (1.0, -2.161e-3),
            (0.5, -4.258e-4), (0.25, -9.392e-5),
        ]
        assert empirical_order(pairs).slope == pytest.approx(2.26, abs=0.02)

    def test_zero_errors_dropped_with_warning(self):
        with pytest.warns(UserWarning, match="zero error"):
            est = empirical_order([(0.5, 0.0), (0.25, 1e-3), (0.125, 2.5e-4)])
        assert est.slope == pytest.approx(2.0, abs=1e-12)

    def test_too_few_pairs(self):
        with pytest.raises(ValueError):
            empirical_order([(0.5, 1e-3)])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(ValueError):
                empirical_order([(0.5, 0.0), (0.25, 0.0)])

    def test_accepts_error_records(self):
        recs = [
            ErrorRecord(h=0.5, mean_error=1e-2, variance_of_mean=0.0,
                        half_width=0.0),
            ErrorRecord(h=0.25, mean_error=2.5e-3, variance_of_mean=0.0,
                        half_width=0.0),
        ]
        assert empirical_order(recs).slope == pytest.approx(2.0, abs=1e-12)


class TestErrorTable:
    def test_rows_against_reference(self):
        t = builtin_scheme("CRDI2WM")
        recs = error_table(t, LIN, FX, 2.0, [0.5, 0.25], 20000, 4)
        assert [r.h for r in recs] == [0.5, 0.25]
        for r in recs:
            assert r.ci_low == r.mean_error - r.half_width
            assert r.ci_high == r.mean_error + r.half_width
        assert abs(recs[1].mean_error) < abs(recs[0].mean_error)

    def test_provenance_selector(self):
        t = builtin_scheme("CRDI2WM")
        sys2 = system2d_problem()
        derived = error_table(t, sys2, FX2, 4.0, [1.0], 2000, 0)
        stated = error_table(t, sys2, FX2, 4.0, [1.0], 2000, 0,
                             provenance="paper_stated")
        diff = math.exp(-4.0) - math.exp(-271 / 256 * 4.0)
        assert derived[0].mean_error - stated[0].mean_error == pytest.approx(
            diff, rel=1e-12
        )

    def test_missing_reference(self):
        ode = ode_problem(1.0, 1.0, 1.0)
        with pytest.raises(KeyError):
            error_table(builtin_scheme("EULER_OPT"), ode, FX2, 1.0, [0.5],
                        100, 0)


class TestDenseProfile:
    def test_zero_diffusion_profile_deterministic(self):
        ode = ode_problem(1.0, 1.0, 1.0)
        t = builtin_scheme("CRDI3WM")
        rows_small = dense_error_profile(t, ode, FX, 0.25, [0.5], 100, 0)
        rows_big = dense_error_profile(t, ode, FX, 0.25, [0.5], 1000, 7)
        for (ta, tha, ra), (tb, thb, rb) in zip(rows_small, rows_big):
            assert (ta, tha) == (tb, thb)
            assert ra.mean_error == pytest.approx(rb.mean_error, rel=1e-12)
            assert ra.variance_of_mean <= 1e-30

    def test_profile_layout(self):
        t = builtin_scheme("CRDI2WM")
        rows = dense_error_profile(t, LIN, FX, 0.5, [0.25, 0.75], 500, 0)
        assert len(rows) == 4 * 2
        times = [r[0] for r in rows]
        assert times[0] == pytest.approx(0.125)
        assert times[-1] == pytest.approx(1.875)

    def test_theta_domain(self):
        with pytest.raises(ValueError):
            dense_error_profile(
                builtin_scheme("CRDI2WM"), LIN, FX, 0.5, [1.0], 100, 0
            )
