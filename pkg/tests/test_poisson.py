"""Exponential inter-arrival law and its statistical self-checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selfexciting import (
    ExponentialLaw,
    memorylessness_check,
    sample_poisson_interarrival,
)


class TestExponentialLaw:
    def test_survival_at_zero(self):
        assert ExponentialLaw(1.0).survival(0.0) == 1.0

    def test_survival_half_life(self):
        law = ExponentialLaw(2.0)
        assert law.survival(math.log(2.0) / 2.0) == pytest.approx(0.5, rel=1e-15)

    def test_negative_time_piecewise(self):
        law = ExponentialLaw(1.5)
        assert law.pdf(-1.0) == 0.0
        assert law.cdf(-1.0) == 0.0
        assert law.survival(-1.0) == 1.0

    @settings(max_examples=200, deadline=None)
    @given(t=st.floats(min_value=0.0, max_value=100.0), rate=st.floats(0.01, 50.0))
    def test_cdf_plus_survival_is_exactly_one(self, t, rate):
        law = ExponentialLaw(rate)
        assert law.cdf(t) + law.survival(t) == 1.0

    def test_mean(self):
        assert ExponentialLaw(4.0).mean() == 0.25
        assert ExponentialLaw(1.0).mean() == 1.0

    def test_sample_mean_within_three_stderr(self):
        law = ExponentialLaw(3.0)
        rng = np.random.default_rng(17)
        draws = law.sample(rng, 1_000_000)
        stderr = float(np.std(draws, ddof=1)) / math.sqrt(draws.size)
        assert abs(float(np.mean(draws)) - law.mean()) <= 3.0 * stderr

    def test_rate_domain(self):
        with pytest.raises(ValueError):
            ExponentialLaw(0.0)


class TestPoissonInterarrival:
    def test_exact_values(self):
        assert sample_poisson_interarrival(2.0, math.exp(-2.0)) == pytest.approx(1.0)
        assert sample_poisson_interarrival(1.0, 0.5) == pytest.approx(math.log(2.0))

    def test_limit_toward_one(self):
        assert sample_poisson_interarrival(10.0, 1.0 - 1e-12) < 1e-11

    def test_argument_domains(self):
        with pytest.raises(ValueError):
            sample_poisson_interarrival(0.0, 0.5)
        with pytest.raises(ValueError):
            sample_poisson_interarrival(1.0, 0.0)
        with pytest.raises(ValueError):
            sample_poisson_interarrival(1.0, 1.0)


class TestMemorylessness:
    def test_z_within_three_sigma(self):
        result = memorylessness_check(
            ExponentialLaw(1.3), m=0.7, t=0.9, samples=200_000, seed=123
        )
        assert result.conclusive
        assert abs(result.z) < 3.0

    def test_t_zero_gives_zero_z(self):
        result = memorylessness_check(
            ExponentialLaw(2.0), m=0.5, t=0.0, samples=50_000, seed=1
        )
        assert result.conclusive
        assert result.z == 0.0

    def test_inconclusive_when_no_survivors(self):
        result = memorylessness_check(
            ExponentialLaw(50.0), m=5.0, t=1.0, samples=20_000, seed=1
        )
        assert not result.conclusive
        assert result.survivors < 100
