"""Kernel families: closed-form values, integrals, and branching factors."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from selfexciting import (
    DivergentMarkMomentError,
    ExponentialKernel,
    MarkDistribution,
    MarkedExponentialKernel,
    MarkedPowerLawKernel,
    ParameterError,
    PowerLawKernel,
    branching_factor,
    marked_branching_factor,
)

ALL_KERNELS = [
    ExponentialKernel(alpha=0.7, delta=2.0),
    PowerLawKernel(alpha=1.0, delta=1.0, eta=2.0),
    MarkedPowerLawKernel(kappa=0.8, beta=0.6, c=10.0, theta=0.8),
    MarkedExponentialKernel(kappa=1.2, beta=0.4, theta=2.0),
]


class TestValues:
    def test_exponential_at_zero_is_alpha(self):
        assert ExponentialKernel(0.7, 2.0).value(0.0) == 0.7

    def test_tutorial_marked_powerlaw_value(self):
        # 1000**0.6 * 10**-1.8 == 1, so the value collapses to kappa
        k = MarkedPowerLawKernel(kappa=0.8, beta=0.6, c=10.0, theta=0.8)
        assert k.value(0.0, mark=1000.0) == pytest.approx(0.8, rel=1e-12)

    def test_marked_exponential_at_zero(self):
        k = MarkedExponentialKernel(kappa=1.0, beta=0.0, theta=2.0)
        assert k.value(0.0, mark=5.0) == pytest.approx(2.0)

    def test_negative_lag_rejected(self):
        for k in ALL_KERNELS:
            with pytest.raises(ValueError):
                k.value(-0.1)

    def test_vectorized_value_matches_scalar(self):
        lags = np.array([0.0, 0.5, 2.0, 11.0])
        for k in ALL_KERNELS:
            vec = k.value(lags, mark=3.0)
            scalars = [k.value(float(x), mark=3.0) for x in lags]
            np.testing.assert_allclose(vec, scalars, rtol=1e-15)

    @settings(max_examples=200, deadline=None)
    @given(
        x=st.floats(min_value=0.0, max_value=1e4),
        y=st.floats(min_value=0.0, max_value=1e4),
    )
    def test_value_nonincreasing_in_lag(self, x, y):
        lo, hi = sorted((x, y))
        for k in ALL_KERNELS:
            assert k.value(lo, mark=2.0) >= k.value(hi, mark=2.0)


class TestIntegrals:
    def test_exponential_tail_integral(self):
        k = ExponentialKernel(alpha=0.8, delta=1.2)
        assert k.integral(0.0, math.inf) == pytest.approx(0.8 / 1.2, rel=1e-12)
        # quadrature oracle over [0, 60/delta] captures the full mass
        numeric, _ = quad(lambda x: k.value(x), 0.0, 60.0 / 1.2, limit=200)
        assert k.integral(0.0, math.inf) == pytest.approx(numeric, rel=1e-9)

    def test_marked_powerlaw_unit_tail(self):
        k = MarkedPowerLawKernel(kappa=1.0, beta=0.0, c=1.0, theta=1.0)
        assert k.integral(0.0, math.inf, mark=1.0) == pytest.approx(1.0, rel=1e-12)

    def test_empty_range_is_zero(self):
        for k in ALL_KERNELS:
            assert k.integral(3.5, 3.5, mark=2.0) == 0.0

    def test_reversed_bounds_rejected(self):
        for k in ALL_KERNELS:
            with pytest.raises(ValueError):
                k.integral(2.0, 1.0)

    def test_integral_matches_quadrature(self):
        rng = np.random.default_rng(42)
        for k in ALL_KERNELS:
            for _ in range(5):
                a = rng.uniform(0.0, 5.0)
                b = a + rng.uniform(0.1, 20.0)
                mark = rng.uniform(1.0, 50.0)
                numeric, _ = quad(lambda x: k.value(x, mark), a, b, limit=200)
                assert k.integral(a, b, mark) == pytest.approx(numeric, rel=1e-9)


class TestBranchingFactor:
    def test_exponential(self):
        assert branching_factor(ExponentialKernel(0.5, 1.0)) == pytest.approx(0.5)
        assert branching_factor(ExponentialKernel(0.0, 3.0)) == 0.0

    def test_power_law(self):
        assert branching_factor(PowerLawKernel(1.0, 1.0, 2.0)) == pytest.approx(0.5)
        # cross-check against quadrature, log-spaced segments to tame the tail
        k = PowerLawKernel(alpha=0.9, delta=2.0, eta=1.5)
        knots = np.concatenate([[0.0], np.logspace(-3, 7, 60)])
        numeric = sum(
            quad(lambda x: k.value(x), a, b, limit=100)[0]
            for a, b in zip(knots[:-1], knots[1:])
        )
        assert branching_factor(k) == pytest.approx(numeric, rel=1e-4)

    def test_marked_family_rejected(self):
        with pytest.raises(TypeError):
            branching_factor(MarkedPowerLawKernel(1.0, 0.0, 1.0, 1.0))

    def test_tail_integral_converges_to_branching_factor(self):
        # characteristic decay: 1/delta for exponential kernels, the offset
        # for power laws; at 1e6 scales the truncated mass is within 1e-4
        cases = [
            (ExponentialKernel(0.7, 2.0), 1e6 / 2.0),
            (PowerLawKernel(1.0, 1.0, 0.8), 1e6 * 1.0),
            (ExponentialKernel(0.3, 0.1), 1e6 / 0.1),
        ]
        for k, span in cases:
            assert k.integral(0.0, span) == pytest.approx(
                branching_factor(k), rel=1e-4
            )

    def test_marked_tail_integral_converges(self):
        dist = MarkDistribution(2.5)
        k = MarkedPowerLawKernel(kappa=0.8, beta=0.6, c=10.0, theta=0.8)
        # with the mark expectation factored out, the unit-mark integral
        # must converge to n* / E[m^beta]
        target = marked_branching_factor(k, dist) / dist.moment(k.beta)
        assert k.integral(0.0, 1e6 * k.c, mark=1.0) == pytest.approx(target, rel=1e-4)
        ke = MarkedExponentialKernel(kappa=1.2, beta=0.4, theta=2.0)
        target = marked_branching_factor(ke, dist) / dist.moment(ke.beta)
        assert ke.integral(0.0, 1e6 / ke.theta, mark=1.0) == pytest.approx(
            target, rel=1e-4
        )


class TestMarkedBranchingFactor:
    def test_direct_substitution(self):
        k = MarkedPowerLawKernel(kappa=1.0, beta=0.0, c=1.0, theta=1.0)
        assert marked_branching_factor(k, MarkDistribution(2.0)) == pytest.approx(1.0)
        # beta = 0 makes the mark expectation cancel entirely
        assert marked_branching_factor(k, MarkDistribution(3.0)) == pytest.approx(1.0)

    def test_divergent_mark_moment(self):
        k = MarkedPowerLawKernel(kappa=1.0, beta=1.2, c=1.0, theta=1.0)
        with pytest.raises(DivergentMarkMomentError):
            marked_branching_factor(k, MarkDistribution(2.0))

    def test_unmarked_family_rejected(self):
        with pytest.raises(TypeError):
            marked_branching_factor(ExponentialKernel(0.5, 1.0), MarkDistribution(2.0))

    def test_monte_carlo_mark_average(self):
        # empirical mean of the per-mark tail integral vs the closed form;
        # alpha - beta = 1.9 > 1.5 keeps the sample variance finite
        dist = MarkDistribution(2.5)
        k = MarkedPowerLawKernel(kappa=0.8, beta=0.6, c=10.0, theta=0.8)
        rng = np.random.default_rng(7)
        marks = dist.sample(rng, 1_000_000)
        integrals = k.integral(0.0, math.inf, marks)
        mean = float(np.mean(integrals))
        stderr = float(np.std(integrals, ddof=1)) / math.sqrt(marks.size)
        expected = marked_branching_factor(k, dist)
        assert abs(mean - expected) <= 3.0 * stderr


class TestMarkDistribution:
    def test_moment_formula(self):
        dist = MarkDistribution(2.5)
        assert dist.moment(0.0) == pytest.approx(1.0)
        assert dist.moment(0.6) == pytest.approx(1.5 / 0.9)

    def test_samples_support(self):
        rng = np.random.default_rng(3)
        draws = MarkDistribution(2.2).sample(rng, 10_000)
        assert np.all(draws >= 1.0)
        assert np.all(np.isfinite(draws))

    def test_sample_mean_matches_moment(self):
        dist = MarkDistribution(3.5)
        rng = np.random.default_rng(11)
        draws = dist.sample(rng, 500_000)
        stderr = float(np.std(draws, ddof=1)) / math.sqrt(draws.size)
        assert abs(float(np.mean(draws)) - dist.moment(1.0)) <= 3.0 * stderr

    def test_exponent_domain(self):
        with pytest.raises(ParameterError):
            MarkDistribution(1.0)


class TestParameterDomains:
    @pytest.mark.parametrize(
        "ctor",
        [
            lambda: ExponentialKernel(-0.1, 1.0),
            lambda: ExponentialKernel(1.0, 0.0),
            lambda: PowerLawKernel(1.0, 0.0, 1.0),
            lambda: PowerLawKernel(1.0, 1.0, 0.0),
            lambda: MarkedPowerLawKernel(-1.0, 0.0, 1.0, 1.0),
            lambda: MarkedPowerLawKernel(1.0, -0.1, 1.0, 1.0),
            lambda: MarkedPowerLawKernel(1.0, 0.0, 0.0, 1.0),
            lambda: MarkedPowerLawKernel(1.0, 0.0, 1.0, 0.0),
            lambda: MarkedExponentialKernel(1.0, 0.0, 0.0),
        ],
    )
    def test_rejected(self, ctor):
        with pytest.raises(ParameterError):
            ctor()

    def test_zero_kernel_allowed(self):
        # the degenerate no-excitation kernel is valid input downstream
        assert MarkedPowerLawKernel(0.0, 0.0, 1.0, 1.0).value(1.0) == 0.0
