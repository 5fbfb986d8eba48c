"""Event simulation for Hawkes processes.

Two samplers are provided:

* :func:`simulate_thinning`: rejection sampling from a piecewise-constant
  upper bound on the intensity.  Works for any monotonically nonincreasing
  kernel; the bound is refreshed after every proposal, accepted or not.
* :func:`simulate_exp_decomposition`: the rejection-free, linear-time
  sampler for exponential kernels, which decomposes the next inter-arrival
  into a constant-background component and a Markov decaying component.

Randomness contract: each run owns a single ``numpy`` PCG64 generator
seeded from the config, and the draw order is fixed: per proposal one
uniform for the waiting time, one for the accept test; on acceptance one
more for the mark (Pareto source only) and one for the parent choice (when
attribution is on).  Identical seed and config therefore reproduce the
output bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .kernels import (
    ExponentialKernel,
    MarkDistribution,
    MarkedExponentialKernel,
)
from .process import Event, EventSequence, HawkesModel, ZeroBackground

__all__ = [
    "MaxEvents",
    "Horizon",
    "StopRule",
    "UnitMarks",
    "FixedMarks",
    "ParetoMarks",
    "MarkSource",
    "SimulationConfig",
    "SimulatedSequence",
    "StallError",
    "sample_poisson_interarrival",
    "simulate_thinning",
    "simulate_cluster",
    "simulate_exp_decomposition",
]


class StallError(RuntimeError):
    """The sampler can no longer make progress toward its stop rule.

    ``partial`` holds whatever was simulated before the stall (a
    :class:`SimulatedSequence` when raised by the public entry points).
    """

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


@dataclass(frozen=True)
class MaxEvents:
    """Stop once the sequence holds this many events in total."""

    count: int

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("event count must be >= 0")


@dataclass(frozen=True)
class Horizon:
    """Stop once the time cursor passes this duration (seconds)."""

    duration: float

    def __post_init__(self) -> None:
        if self.duration < 0.0:
            raise ValueError("horizon must be >= 0")


StopRule = Union[MaxEvents, Horizon]


@dataclass(frozen=True)
class UnitMarks:
    """All generated events carry mark 1.0 (unmarked process)."""


@dataclass(frozen=True)
class FixedMarks:
    """Marks consumed in order, one per accepted event; raises on exhaustion."""

    values: tuple[float, ...]


@dataclass(frozen=True)
class ParetoMarks:
    """Marks drawn i.i.d. from a Pareto mark distribution."""

    distribution: MarkDistribution


MarkSource = Union[UnitMarks, FixedMarks, ParetoMarks]


@dataclass(frozen=True)
class SimulationConfig:
    stop: StopRule
    seed: int
    marks: MarkSource = UnitMarks()
    attribute_parents: bool = True
    stall_budget: int = 10_000_000


@dataclass(frozen=True)
class SimulatedSequence:
    """A simulated realization with its branching bookkeeping.

    ``generations[i]`` is 0 for immigrants and parent generation + 1
    otherwise.  ``rejected_count`` is only populated by the thinning
    sampler.
    """

    events: tuple[Event, ...]
    generations: tuple[int, ...]
    observation_end: float
    rejected_count: Optional[int] = None

    @property
    def sequence(self) -> EventSequence:
        return EventSequence(self.events, self.observation_end)

    @property
    def times(self) -> np.ndarray:
        return self.sequence.times

    def __len__(self) -> int:
        return len(self.events)


def sample_poisson_interarrival(rate: float, u: float) -> float:
    """Inverse-transform waiting time -ln(u) / rate for u in (0, 1)."""
    if rate <= 0.0:
        raise ValueError("rate must be > 0")
    if not 0.0 < u < 1.0:
        raise ValueError("u must lie strictly inside (0, 1)")
    return -math.log(u) / rate


def _positive_uniform(rng: np.random.Generator) -> float:
    # rng.random() can return exactly 0.0; nudge so -log stays finite and
    # waiting times stay strictly positive.
    u = rng.random()
    return u if u > 0.0 else 1e-300


class _History:
    """Growable time/mark buffers so per-proposal slices never copy."""

    def __init__(self, times, marks):
        self.size = len(times)
        capacity = max(64, 2 * self.size)
        self._times = np.empty(capacity)
        self._marks = np.empty(capacity)
        self._times[: self.size] = times
        self._marks[: self.size] = marks

    def append(self, t: float, mark: float) -> None:
        if self.size == self._times.size:
            self._times = np.concatenate([self._times, np.empty(self._times.size)])
            self._marks = np.concatenate([self._marks, np.empty(self._marks.size)])
        self._times[self.size] = t
        self._marks[self.size] = mark
        self.size += 1

    @property
    def times(self) -> np.ndarray:
        return self._times[: self.size]

    @property
    def marks(self) -> np.ndarray:
        return self._marks[: self.size]


class _DecayingExcess:
    """O(1) kernel-sum tracker for exponential-family kernels (Markov)."""

    def __init__(self, kernel, history: _History, t: float):
        self.kernel = kernel
        self.decay = kernel.delta if isinstance(kernel, ExponentialKernel) else kernel.theta
        self.excess = 0.0
        if history.size:
            self.excess = float(
                np.sum(kernel.value(t - history.times, history.marks))
            )

    def advance(self, dt: float) -> None:
        self.excess *= math.exp(-self.decay * dt)

    def value(self) -> float:
        return self.excess

    def peek(self, dt: float) -> float:
        return self.excess * math.exp(-self.decay * dt)

    def add_event(self, mark: float) -> None:
        self.excess += self.kernel.value(0.0, mark)


class _RecomputedExcess:
    """Brute-force kernel-sum tracker for kernels without the Markov property."""

    def __init__(self, kernel, history: _History, t: float):
        self.kernel = kernel
        self.history = history
        self.t = t

    def _sum_at(self, t: float) -> float:
        if not self.history.size:
            return 0.0
        lags = t - self.history.times
        return float(np.sum(self.kernel.value(lags, self.history.marks)))

    def advance(self, dt: float) -> None:
        self.t += dt

    def value(self) -> float:
        return self._sum_at(self.t)

    def peek(self, dt: float) -> float:
        return self._sum_at(self.t + dt)

    def add_event(self, mark: float) -> None:
        pass  # the shared history already carries the new event


def _next_mark(source: MarkSource, rng: np.random.Generator, index: int) -> float:
    if isinstance(source, UnitMarks):
        return 1.0
    if isinstance(source, FixedMarks):
        if index >= len(source.values):
            raise ValueError("FixedMarks exhausted: more events than supplied marks")
        return float(source.values[index])
    return float(source.distribution.sample(rng))


def _thinning_run(
    model: HawkesModel,
    rng: np.random.Generator,
    stop: StopRule,
    marks: MarkSource,
    attribute_parents: bool,
    stall_budget: int,
    initial_events: tuple[Event, ...] = (),
    initial_generations: tuple[int, ...] = (),
    start_time: float = 0.0,
    stop_when: Optional[Callable[[float, list, list], bool]] = None,
):
    """Shared thinning loop; returns (events, generations, rejected)."""
    kernel = model.kernel
    background = model.background

    events = list(initial_events)
    generations = list(initial_generations)
    history = _History([e.time for e in events], [e.mark for e in events])
    if history.size and history.times[-1] > start_time:
        raise ValueError("initial history must not extend past the start time")

    t = float(start_time)
    if isinstance(kernel, (ExponentialKernel, MarkedExponentialKernel)):
        excess = _DecayingExcess(kernel, history, t)
    else:
        excess = _RecomputedExcess(kernel, history, t)

    horizon = stop.duration if isinstance(stop, Horizon) else math.inf
    target = stop.count if isinstance(stop, MaxEvents) else None

    new_index = 0
    rejected = 0
    consecutive_rejections = 0

    while True:
        if target is not None and len(events) >= target:
            break
        if stop_when is not None and stop_when(t, history.times, history.marks):
            break

        lam_star = background.rate(t) + excess.value()
        if lam_star <= 0.0:
            # the intensity is nonincreasing between events, so a dead
            # process stays dead: nothing more can ever be accepted
            if target is None:
                break
            raise StallError(
                "total intensity is zero; the requested event count is unreachable",
                partial=(events, generations, rejected),
            )

        wait = -math.log(_positive_uniform(rng)) / lam_star
        t_new = t + wait
        if t_new > horizon:
            break
        if not math.isfinite(t_new):
            if target is None:
                break
            raise StallError(
                "waiting time diverged; intensity effectively zero",
                partial=(events, generations, rejected),
            )

        s = rng.random()
        lam_new = background.rate(t_new) + excess.peek(wait)
        ratio = lam_new / lam_star
        assert ratio <= 1.0 + 1e-9, "thinning bound violated (kernel not monotone?)"

        t = t_new
        excess.advance(wait)

        if s <= ratio:
            mark = _next_mark(marks, rng, new_index)
            parent: Optional[int] = None
            generation = 0
            if attribute_parents and history.size:
                base = background.rate(t)
                contrib = np.atleast_1d(
                    kernel.value(t - history.times, history.marks)
                )
                total = base + float(np.sum(contrib))
                v = rng.random() * total
                if v >= base:
                    parent = int(
                        np.searchsorted(np.cumsum(contrib), v - base, side="right")
                    )
                    parent = min(parent, history.size - 1)
                    generation = generations[parent] + 1
            elif attribute_parents:
                rng.random()  # keep the draw order independent of history size
            events.append(Event(time=t, mark=mark, parent_index=parent))
            generations.append(generation)
            history.append(t, mark)
            excess.add_event(mark)
            new_index += 1
            consecutive_rejections = 0
        else:
            rejected += 1
            consecutive_rejections += 1
            if consecutive_rejections >= stall_budget:
                raise StallError(
                    f"{stall_budget} consecutive rejections; process appears stalled",
                    partial=(events, generations, rejected),
                )

    return events, generations, rejected


def _with_partial_sequence(err: StallError, stop: StopRule) -> StallError:
    """Repackage a raw stall so callers can still save what was generated."""
    events, generations, rejected = err.partial if err.partial else ([], [], 0)
    if isinstance(stop, Horizon):
        end = stop.duration
    else:
        end = events[-1].time if events else 0.0
    partial = SimulatedSequence(
        events=tuple(events),
        generations=tuple(generations),
        observation_end=end,
        rejected_count=rejected,
    )
    return StallError(str(err), partial=partial)


def simulate_thinning(model: HawkesModel, config: SimulationConfig) -> SimulatedSequence:
    """Sample a Hawkes realization by thinning.

    Requires a monotonically nonincreasing kernel and background so that
    the intensity immediately after the cursor bounds the intensity until
    the next event; all kernel families and background variants in this
    package qualify.

    With a :class:`Horizon` rule a process whose intensity hits zero simply
    stops (possibly empty); with :class:`MaxEvents` that situation raises
    :class:`StallError` because the count can never be reached.
    """
    rng = np.random.default_rng(config.seed)
    try:
        events, generations, rejected = _thinning_run(
            model,
            rng,
            stop=config.stop,
            marks=config.marks,
            attribute_parents=config.attribute_parents,
            stall_budget=config.stall_budget,
        )
    except StallError as err:
        raise _with_partial_sequence(err, config.stop) from None
    if isinstance(config.stop, Horizon):
        end = config.stop.duration
    else:
        end = events[-1].time if events else 0.0
    return SimulatedSequence(
        events=tuple(events),
        generations=tuple(generations),
        observation_end=end,
        rejected_count=rejected,
    )


def simulate_cluster(
    model: HawkesModel, immigrant: Event, config: SimulationConfig
) -> SimulatedSequence:
    """Sample the offspring cluster of one immigrant event.

    The model background must be zero (the immigrant is the only exogenous
    event) and the immigrant must sit at time 0.  The returned sequence
    contains the immigrant at index 0 with generation 0; every offspring
    carries a parent chosen proportionally to the per-event kernel
    contribution at its accepted time.  A :class:`MaxEvents` rule counts
    the immigrant itself.
    """
    if not isinstance(model.background, ZeroBackground):
        raise ValueError("cluster simulation requires a zero background")
    if immigrant.time != 0.0:
        raise ValueError("the immigrant must occur at time 0")
    root = Event(time=0.0, mark=immigrant.mark, parent_index=None)
    rng = np.random.default_rng(config.seed)
    try:
        events, generations, rejected = _thinning_run(
            model,
            rng,
            stop=config.stop,
            marks=config.marks,
            attribute_parents=config.attribute_parents,
            stall_budget=config.stall_budget,
            initial_events=(root,),
            initial_generations=(0,),
            start_time=0.0,
        )
    except StallError as err:
        raise _with_partial_sequence(err, config.stop) from None
    if isinstance(config.stop, Horizon):
        end = config.stop.duration
    else:
        end = events[-1].time
    return SimulatedSequence(
        events=tuple(events),
        generations=tuple(generations),
        observation_end=end,
        rejected_count=rejected,
    )


def simulate_exp_decomposition(
    a: float,
    lambda0: float,
    delta: float,
    gamma: float,
    n_events: Optional[int],
    seed: int,
    horizon: Optional[float] = None,
) -> SimulatedSequence:
    """Rejection-free sampler for the exponential-kernel Hawkes process.

    The intensity is ``a + (lambda0 - a) exp(-delta t) + sum of
    gamma * exp(-delta (t - T_i))``: a constant immigrant rate ``a``, an
    exponentially relaxing extra immigrant rate starting at ``lambda0``,
    and a jump of ``gamma`` per event.  The next inter-arrival is the
    minimum of two tractable pieces:

    * ``s0 = -ln(u0) / a``, the wait for a constant-rate immigrant
      (infinite when ``a == 0``; the draw is skipped);
    * ``s1 = -ln(d) / delta`` with ``d = 1 + delta ln(u1) / (lam - a)``,
      the wait attributable to all currently decaying mass, valid only
      when ``d > 0``.  ``d <= 0`` means that branch never fires: expected,
      since the decaying mass integrates to a finite total.

    When ``a == 0`` and ``d <= 0`` no finite arrival remains and the
    partial sequence is returned.  The intensity bookkeeping is O(1) per
    event, making the sampler linear in the number of events.

    Draw order: ``u0`` (only when a > 0) then ``u1``, for every event.
    The output carries no parent attribution: the decomposition identifies
    which branch fired, not which past event triggered the arrival.
    """
    if a < 0.0:
        raise ValueError("a must be >= 0")
    if lambda0 < a:
        raise ValueError("lambda0 must be >= a")
    if delta <= 0.0:
        raise ValueError("delta must be > 0")
    if gamma < 0.0:
        raise ValueError("gamma must be >= 0")
    if n_events is None and horizon is None:
        raise ValueError("need an event count, a horizon, or both")
    if n_events is not None and n_events < 1:
        raise ValueError("n_events must be >= 1")

    rng = np.random.default_rng(seed)
    lam_plus = lambda0  # intensity just after the previous event
    t = 0.0
    times: list[float] = []

    while n_events is None or len(times) < n_events:
        if a > 0.0:
            s0 = -math.log(_positive_uniform(rng)) / a
        else:
            s0 = math.inf
        u1 = _positive_uniform(rng)
        denom = lam_plus - a
        if denom > 0.0:
            d = 1.0 + delta * math.log(u1) / denom
        else:
            d = -math.inf  # no decaying mass (e.g. lambda0 == a at the start)
        if d > 0.0:
            tau = min(s0, -math.log(d) / delta)
        else:
            tau = s0
        if not math.isfinite(tau):
            break  # a == 0 and the decaying branch cannot fire again
        t_new = t + tau
        if horizon is not None and t_new > horizon:
            break
        lam_minus = (lam_plus - a) * math.exp(-delta * tau) + a
        lam_plus = lam_minus + gamma
        t = t_new
        times.append(t)

    events = tuple(Event(time=ti) for ti in times)
    if horizon is not None:
        end = horizon
    else:
        end = times[-1] if times else 0.0
    return SimulatedSequence(
        events=events,
        generations=tuple(0 for _ in events),
        observation_end=end,
        rejected_count=None,
    )
