"""Closed-form cascade-size prediction and its Monte Carlo oracle.

Having observed a cascade up to its horizon T, the expected number of
events still to come is the tail kernel mass of every observed event
(their expected direct children) amplified by the geometric cascade of
descendants, 1 / (1 - n*).  The closed form is only meaningful in the
subcritical regime n* < 1; supercritical inputs yield a typed regime flag
rather than an infinite or negative size.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import KernelSpec, MarkDistribution, marked_branching_factor
from .process import EventSequence, HawkesModel, ZeroBackground
from .simulation import MaxEvents, ParetoMarks, _thinning_run

__all__ = [
    "SupercriticalError",
    "Regime",
    "PredictionReport",
    "ContinuationResult",
    "expected_direct_children",
    "cluster_size_unmarked",
    "total_cascade_size",
    "simulate_continuations",
]

EPSILON_CRITICAL = 1e-9  # closer to 1 than this is flagged numerically unstable


class SupercriticalError(ValueError):
    """Cluster sizes are unbounded at or above the critical branching factor."""


class Regime(enum.Enum):
    SUBCRITICAL = "subcritical"
    SUPERCRITICAL = "supercritical"


@dataclass(frozen=True)
class PredictionReport:
    """Expected total cascade size and the quantities behind it.

    ``n_infinity`` is present only in the subcritical regime; when n* falls
    within EPSILON_CRITICAL of 1 the report is still subcritical but
    ``numerically_unstable`` is set.
    """

    a1: float
    n_star: float
    n_observed: int
    n_infinity: Optional[float]
    regime: Regime
    numerically_unstable: bool = False


@dataclass(frozen=True)
class ContinuationResult:
    """Final sizes of simulated continuations (observed events included).

    ``truncated_runs`` counts runs that hit the per-run event budget before
    dying out; their sizes are lower bounds.
    """

    sizes: np.ndarray
    truncated_runs: int


def expected_direct_children(kernel: KernelSpec, seq: EventSequence) -> float:
    """Expected direct offspring arriving after the observation horizon.

    Equals the compensator of the zero-background model over [T, inf):
    the tail kernel mass of each observed event, summed.
    """
    if len(seq) == 0:
        return 0.0
    lags = seq.observation_end - seq.times
    return float(np.sum(kernel.integral(lags, math.inf, seq.marks)))


def cluster_size_unmarked(n_star: float) -> float:
    """Expected cluster size 1 / (1 - n*) of a single immigrant."""
    if n_star < 0.0:
        raise ValueError("branching factor cannot be negative")
    if n_star >= 1.0:
        raise SupercriticalError(
            f"n* = {n_star} >= 1: expected cluster size is unbounded"
        )
    return 1.0 / (1.0 - n_star)


def total_cascade_size(
    kernel: KernelSpec, marks: MarkDistribution, seq: EventSequence
) -> PredictionReport:
    """Expected final cascade size: observed count + A1 / (1 - n*).

    Supercritical kernels produce a report with ``n_infinity`` absent; this
    is a valid outcome, not an error.
    """
    n_star = marked_branching_factor(kernel, marks)
    a1 = expected_direct_children(kernel, seq)
    n_observed = len(seq)
    if n_star >= 1.0:
        return PredictionReport(
            a1=a1,
            n_star=n_star,
            n_observed=n_observed,
            n_infinity=None,
            regime=Regime.SUPERCRITICAL,
        )
    return PredictionReport(
        a1=a1,
        n_star=n_star,
        n_observed=n_observed,
        n_infinity=n_observed + a1 / (1.0 - n_star),
        regime=Regime.SUBCRITICAL,
        numerically_unstable=n_star >= 1.0 - EPSILON_CRITICAL,
    )


def simulate_continuations(
    kernel: KernelSpec,
    marks: MarkDistribution,
    seq: EventSequence,
    runs: int,
    seed: int,
    extinction_threshold: float = 1e-3,
    max_new_events: int = 100_000,
    workers: int = 1,
) -> ContinuationResult:
    """Continue the observed cascade past its horizon by thinning.

    Each run restarts the thinning sampler at the horizon with the observed
    events as history; marks of future events are drawn i.i.d. from the
    configured mark law.  A run ends when the expected number of remaining
    descendants (residual tail mass over 1 - n*) drops below
    ``extinction_threshold``, or when ``max_new_events`` is hit (counted in
    ``truncated_runs``; a guard for near- or supercritical kernels).

    Runs are independent with one RNG stream each, keyed by run index, so
    the result does not depend on ``workers``.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    model = HawkesModel(ZeroBackground(), kernel)
    n_star = marked_branching_factor(kernel, marks)
    amplification = 1.0 / max(1.0 - n_star, 1e-12)
    n_observed = len(seq)
    budget = n_observed + max_new_events

    def extinct(t, times, mark_values):
        residual = float(
            np.sum(kernel.integral(t - np.asarray(times), math.inf, np.asarray(mark_values)))
        )
        return residual * amplification < extinction_threshold

    seed_seqs = np.random.SeedSequence(seed).spawn(runs)

    def one_run(run: int) -> int:
        rng = np.random.default_rng(seed_seqs[run])
        events, _, _ = _thinning_run(
            model,
            rng,
            stop=MaxEvents(budget),
            marks=ParetoMarks(marks),
            attribute_parents=False,
            stall_budget=10_000_000,
            initial_events=seq.events,
            initial_generations=tuple(0 for _ in seq.events),
            start_time=seq.observation_end,
            stop_when=extinct,
        )
        return len(events)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sizes = np.fromiter(pool.map(one_run, range(runs)), dtype=np.int64, count=runs)
    else:
        sizes = np.fromiter(map(one_run, range(runs)), dtype=np.int64, count=runs)
    truncated = int(np.sum(sizes >= budget))
    sizes.setflags(write=False)
    return ContinuationResult(sizes=sizes, truncated_runs=truncated)
