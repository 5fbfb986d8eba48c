"""Cross-module oracle suites.

Each check pits one implementation path against an independent oracle:
the linear-time likelihood recursion against the quadratic generic path,
analytic gradients against central finite differences, the two samplers
against each other distributionally, and closed-form predictions against
Monte Carlo.  The suites run with fixed seeds so results are reproducible;
they back both the ``hawkes verify`` command and the acceptance tests.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .inference import (
    gradient_marked_powerlaw,
    log_likelihood,
    log_likelihood_exponential_recursive,
    log_likelihood_marked_powerlaw,
)
from .kernels import (
    ExponentialKernel,
    MarkDistribution,
    MarkedPowerLawKernel,
)
from .poisson import ExponentialLaw, memorylessness_check
from .prediction import simulate_continuations, total_cascade_size
from .process import (
    ConstantBackground,
    Event,
    EventSequence,
    HawkesModel,
    ZeroBackground,
)
from .simulation import (
    Horizon,
    MaxEvents,
    SimulationConfig,
    simulate_cluster,
    simulate_exp_decomposition,
    simulate_thinning,
)

__all__ = ["CheckResult", "SUITES", "run_suites"]


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    statistic: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (
            f"[{flag}] {self.suite}/{self.name}: "
            f"statistic={self.statistic:.6g} threshold={self.threshold:.6g} "
            f"{self.detail}"
        )


def _random_exp_instance(rng):
    """Simulate one exponential-Hawkes realization with random parameters."""
    lambda0 = rng.uniform(0.3, 2.0)
    delta = rng.uniform(0.5, 3.0)
    ratio = rng.uniform(0.1, 0.8)
    alpha = ratio * delta
    size = int(round(10.0 ** rng.uniform(2.0, 4.0)))
    seed = int(rng.integers(0, 2**63 - 1))
    sim = simulate_exp_decomposition(
        a=lambda0, lambda0=lambda0, delta=delta, gamma=alpha, n_events=size, seed=seed
    )
    return (lambda0, alpha, delta), sim.sequence


def check_likelihood_equivalence(instances: int = 100, seed: int = 1001):
    """Recursive O(n) exponential log-likelihood vs the O(n^2) generic path."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    started = time.perf_counter()
    for k in range(instances):
        (lambda0, alpha, delta), seq = _random_exp_instance(rng)
        if k < 2:  # force full-size instances at the 1e4 ceiling
            sim = simulate_exp_decomposition(
                a=lambda0,
                lambda0=lambda0,
                delta=delta,
                gamma=alpha,
                n_events=10_000,
                seed=int(rng.integers(0, 2**63 - 1)),
            )
            seq = sim.sequence
        model = HawkesModel(
            ConstantBackground(lambda0), ExponentialKernel(alpha, delta)
        )
        brute = log_likelihood(model, seq)
        fast = log_likelihood_exponential_recursive((lambda0, alpha, delta), seq)
        rel = abs(fast - brute) / max(abs(brute), 1e-12)
        worst = max(worst, rel)
    elapsed = time.perf_counter() - started
    return [
        CheckResult(
            suite="likelihood",
            name="recursive-vs-brute",
            statistic=worst,
            threshold=1e-9,
            passed=worst <= 1e-9,
            detail=f"max relative error over {instances} instances "
            f"({elapsed:.1f}s total)",
        )
    ]


def _random_cascade(rng, dist: MarkDistribution, max_events: int = 60):
    n = int(rng.integers(5, max_events))
    window = rng.uniform(20.0, 100.0)
    offsets = np.sort(rng.uniform(0.0, window, size=n - 1))
    times = np.concatenate([[0.0], offsets])
    marks = dist.sample(rng, n)
    return EventSequence.from_arrays(times, marks, observation_end=window * 1.05)


def check_gradient_fd(instances: int = 50, seed: int = 2002):
    """Analytic cascade-likelihood gradient vs central finite differences."""
    rng = np.random.default_rng(seed)
    dist = MarkDistribution(2.5)
    worst = 0.0
    for _ in range(instances):
        seq = _random_cascade(rng, dist)
        params = MarkedPowerLawKernel(
            kappa=math.exp(rng.uniform(math.log(0.3), math.log(2.0))),
            beta=rng.uniform(0.1, 0.8),
            c=math.exp(rng.uniform(math.log(0.5), math.log(20.0))),
            theta=math.exp(rng.uniform(math.log(0.3), math.log(2.0))),
        )
        analytic = gradient_marked_powerlaw(params, seq)
        values = np.array([params.kappa, params.beta, params.c, params.theta])
        fd = np.empty(4)
        for k in range(4):
            h = 1e-6 * abs(values[k])
            hi = values.copy()
            lo = values.copy()
            hi[k] += h
            lo[k] -= h
            fd[k] = (
                log_likelihood_marked_powerlaw(MarkedPowerLawKernel(*hi), seq)
                - log_likelihood_marked_powerlaw(MarkedPowerLawKernel(*lo), seq)
            ) / (2.0 * h)
        rel = np.max(np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-10))
        worst = max(worst, float(rel))
    return [
        CheckResult(
            suite="gradient",
            name="analytic-vs-finite-difference",
            statistic=worst,
            threshold=1e-4,
            passed=worst <= 1e-4,
            detail=f"max relative component error over {instances} instances",
        )
    ]


KS_SETTINGS = (
    # (lambda0, delta, gamma): constant background a = lambda0, so the
    # decomposition sampler targets the same law as thinning
    (1.0, 2.0, 1.0),
    (0.5, 1.2, 0.8),
    (2.0, 3.0, 0.6),
)


def check_sampler_ks(n_events: int = 100_000, seed: int = 3003):
    """Two-sample KS between thinning and decomposition inter-arrivals."""
    results = []
    for idx, (lambda0, delta, gamma) in enumerate(KS_SETTINGS):
        dec = simulate_exp_decomposition(
            a=lambda0,
            lambda0=lambda0,
            delta=delta,
            gamma=gamma,
            n_events=n_events,
            seed=seed + 2 * idx,
        )
        model = HawkesModel(ConstantBackground(lambda0), ExponentialKernel(gamma, delta))
        thin = simulate_thinning(
            model,
            SimulationConfig(
                stop=MaxEvents(n_events),
                seed=seed + 2 * idx + 1,
                attribute_parents=False,
            ),
        )
        gaps_dec = np.diff(dec.times, prepend=0.0)
        gaps_thin = np.diff(thin.times, prepend=0.0)
        ks = stats.ks_2samp(gaps_dec, gaps_thin)
        results.append(
            CheckResult(
                suite="ks",
                name=f"thinning-vs-decomposition-{idx}",
                statistic=float(ks.pvalue),
                threshold=0.01,
                passed=ks.pvalue > 0.01,
                detail=(
                    f"lambda0={lambda0} delta={delta} gamma={gamma} "
                    f"D={ks.statistic:.5f} n={n_events}"
                ),
            )
        )
    return results


PREDICTION_CASCADE_TIMES = (0.0, 1.5, 4.0, 9.0, 13.0, 22.0, 31.0)
PREDICTION_CASCADE_MARKS = (40.0, 2.0, 6.0, 1.0, 3.0, 9.0, 1.0)
PREDICTION_WINDOW = 40.0


def check_prediction_mc(runs: int = 10_000, seed: int = 4004):
    """Closed-form N_inf vs the mean of simulated continuations."""
    dist = MarkDistribution(2.5)
    seq = EventSequence.from_arrays(
        PREDICTION_CASCADE_TIMES, PREDICTION_CASCADE_MARKS, PREDICTION_WINDOW
    )
    beta, c, theta = 0.4, 6.0, 1.1
    results = []
    for idx, n_star in enumerate((0.2, 0.5, 0.8)):
        kappa = n_star * theta * c**theta / dist.moment(beta)
        kernel = MarkedPowerLawKernel(kappa=kappa, beta=beta, c=c, theta=theta)
        report = total_cascade_size(kernel, dist, seq)
        mc = simulate_continuations(kernel, dist, seq, runs=runs, seed=seed + idx)
        mean = float(np.mean(mc.sizes))
        stderr = float(np.std(mc.sizes, ddof=1)) / math.sqrt(runs)
        gap = abs(mean - report.n_infinity)
        results.append(
            CheckResult(
                suite="prediction",
                name=f"closed-form-vs-monte-carlo-nstar-{n_star}",
                statistic=gap / stderr if stderr else 0.0,
                threshold=3.0,
                passed=gap <= 3.0 * stderr and mc.truncated_runs == 0,
                detail=(
                    f"N_inf={report.n_infinity:.3f} mc_mean={mean:.3f} "
                    f"stderr={stderr:.4f} runs={runs}"
                ),
            )
        )
    return results


def check_cluster_size_law(clusters: int = 10_000, seed: int = 5005):
    """Mean simulated cluster size vs 1 / (1 - n*), unmarked exponential."""
    results = []
    for idx, n_star in enumerate((0.3, 0.6)):
        kernel = ExponentialKernel(alpha=n_star, delta=1.0)
        model = HawkesModel(ZeroBackground(), kernel)
        sizes = np.empty(clusters, dtype=np.int64)
        run_seeds = np.random.SeedSequence(seed + idx).generate_state(clusters, np.uint64)
        for run in range(clusters):
            sim = simulate_cluster(
                model,
                Event(time=0.0, mark=1.0),
                SimulationConfig(
                    stop=Horizon(200.0),
                    seed=int(run_seeds[run]),
                    attribute_parents=False,
                ),
            )
            sizes[run] = len(sim)
        expected = 1.0 / (1.0 - n_star)
        mean = float(np.mean(sizes))
        stderr = float(np.std(sizes, ddof=1)) / math.sqrt(clusters)
        gap = abs(mean - expected)
        results.append(
            CheckResult(
                suite="cluster",
                name=f"mean-size-nstar-{n_star}",
                statistic=gap / stderr if stderr else 0.0,
                threshold=3.0,
                passed=gap <= 3.0 * stderr,
                detail=(
                    f"expected={expected:.4f} mean={mean:.4f} "
                    f"stderr={stderr:.4f} clusters={clusters}"
                ),
            )
        )
    return results


def check_poisson_foundations(seed: int = 6006):
    """Mean inter-arrival, memorylessness, and superposition checks."""
    results = []

    law = ExponentialLaw(2.0)
    rng = np.random.default_rng(seed)
    draws = law.sample(rng, 1_000_000)
    mean = float(np.mean(draws))
    stderr = float(np.std(draws, ddof=1)) / math.sqrt(draws.size)
    gap = abs(mean - law.mean())
    results.append(
        CheckResult(
            suite="poisson",
            name="mean-interarrival",
            statistic=gap / stderr,
            threshold=3.0,
            passed=gap <= 3.0 * stderr,
            detail=f"mean={mean:.6f} expected={law.mean():.6f}",
        )
    )

    check = memorylessness_check(
        ExponentialLaw(1.3), m=0.7, t=0.9, samples=200_000, seed=seed + 1
    )
    results.append(
        CheckResult(
            suite="poisson",
            name="memorylessness",
            statistic=abs(check.z),
            threshold=3.0,
            passed=check.conclusive and abs(check.z) <= 3.0,
            detail=f"z={check.z:.3f} survivors={check.survivors}",
        )
    )

    rate1, rate2 = 0.7, 1.6
    target = 100_000
    horizon = target / (rate1 + rate2)
    streams = []
    for j, rate in enumerate((rate1, rate2)):
        model = HawkesModel(
            ConstantBackground(rate), ExponentialKernel(alpha=0.0, delta=1.0)
        )
        sim = simulate_thinning(
            model,
            SimulationConfig(
                stop=Horizon(horizon), seed=seed + 10 + j, attribute_parents=False
            ),
        )
        streams.append(sim.times)
    merged = np.sort(np.concatenate(streams))
    gaps = np.diff(merged, prepend=0.0)
    ks = stats.kstest(gaps, "expon", args=(0.0, 1.0 / (rate1 + rate2)))
    results.append(
        CheckResult(
            suite="poisson",
            name="superposition-ks",
            statistic=float(ks.pvalue),
            threshold=0.01,
            passed=ks.pvalue > 0.01,
            detail=f"D={ks.statistic:.5f} merged n={merged.size}",
        )
    )
    return results


SUITES = {
    "likelihood": check_likelihood_equivalence,
    "gradient": check_gradient_fd,
    "ks": check_sampler_ks,
    "prediction": check_prediction_mc,
    "cluster": check_cluster_size_law,
    "poisson": check_poisson_foundations,
}


def run_suites(names=None, seed=None, **overrides):
    """Run the named suites (all by default) and return their CheckResults.

    ``overrides`` may carry per-suite size arguments: ``n_events`` (ks),
    ``instances`` (likelihood, gradient), ``runs`` (prediction),
    ``clusters`` (cluster).
    """
    if names is None or names == "all" or "all" in names:
        names = list(SUITES)
    results = []
    for name in names:
        suite = SUITES[name]
        kwargs = {}
        if seed is not None:
            kwargs["seed"] = seed
        for key, value in overrides.items():
            if value is None:
                continue
            if key in suite.__code__.co_varnames[: suite.__code__.co_argcount]:
                kwargs[key] = value
        results.extend(suite(**kwargs))
    return results
