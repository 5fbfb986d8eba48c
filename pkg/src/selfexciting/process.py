"""Core types and intensity machinery for Hawkes processes.

The conditional intensity of the process is

    lambda(t) = background(t) + sum over events with time < t of
                phi_mark(t - event time)

where ``phi`` is a memory kernel from :mod:`selfexciting.kernels`.  The sum
uses strict inequality: an event contributes only to queries strictly after
its own time, so the evaluated intensity at an event time is the left limit.

Everything here is immutable after construction; models and sequences may be
shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .kernels import KernelSpec, ParameterError, _require

__all__ = [
    "Event",
    "EventSequence",
    "ZeroBackground",
    "ConstantBackground",
    "ExponentialDecayBackground",
    "BackgroundSpec",
    "HawkesModel",
    "counting_process",
    "intensity_at",
    "intensity_right_limit",
    "compensator",
]


@dataclass(frozen=True)
class Event:
    """A single event: occurrence time, magnitude, and optional parent.

    ``mark`` is 1.0 for unmarked processes and the event magnitude (e.g. a
    follower count, hence >= 1) otherwise.  ``parent_index`` points at the
    triggering event within the owning sequence; ``None`` marks an
    immigrant that arrived from the background rate.
    """

    time: float
    mark: float = 1.0
    parent_index: Optional[int] = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.time) and self.time >= 0.0):
            raise ValueError(f"event time must be finite and >= 0, got {self.time}")
        if not (math.isfinite(self.mark) and self.mark >= 1.0):
            raise ValueError(f"event mark must be finite and >= 1, got {self.mark}")
        if self.parent_index is not None and self.parent_index < 0:
            raise ValueError("parent_index must be a nonnegative index")


@dataclass(frozen=True)
class EventSequence:
    """An ordered realization of events on the window [0, observation_end].

    Times are strictly increasing (ties must be resolved at ingestion) and
    never exceed the observation horizon.  Parents, when present, always
    point at earlier events.
    """

    events: tuple[Event, ...]
    observation_end: float

    _times: np.ndarray = field(init=False, repr=False, compare=False)
    _marks: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        events = tuple(self.events)
        object.__setattr__(self, "events", events)
        times = np.array([e.time for e in events], dtype=float)
        marks = np.array([e.mark for e in events], dtype=float)
        times.setflags(write=False)
        marks.setflags(write=False)
        object.__setattr__(self, "_times", times)
        object.__setattr__(self, "_marks", marks)

        if not (math.isfinite(self.observation_end) and self.observation_end >= 0.0):
            raise ValueError("observation_end must be finite and >= 0")
        if times.size:
            if np.any(np.diff(times) <= 0.0):
                raise ValueError("event times must be strictly increasing")
            if times[-1] > self.observation_end:
                raise ValueError(
                    "event beyond observation_end "
                    f"({times[-1]} > {self.observation_end})"
                )
        for i, e in enumerate(events):
            if e.parent_index is not None and e.parent_index >= i:
                raise ValueError(
                    f"event {i} has parent_index {e.parent_index}; "
                    "parents must occur strictly earlier"
                )

    @classmethod
    def from_arrays(cls, times, marks=None, observation_end=None) -> "EventSequence":
        times = np.asarray(times, dtype=float)
        if marks is None:
            marks = np.ones_like(times)
        else:
            marks = np.asarray(marks, dtype=float)
        if observation_end is None:
            observation_end = float(times[-1]) if times.size else 0.0
        events = tuple(Event(float(t), float(m)) for t, m in zip(times, marks))
        return cls(events, float(observation_end))

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def marks(self) -> np.ndarray:
        return self._marks

    def __len__(self) -> int:
        return len(self.events)


@dataclass(frozen=True)
class ZeroBackground:
    """No exogenous arrivals; the cascade setting (immigrant given)."""

    def rate(self, t: float) -> float:
        return 0.0

    def integral(self, t0: float, t1: float) -> float:
        return 0.0


@dataclass(frozen=True)
class ConstantBackground:
    """Homogeneous immigrant rate."""

    rate_value: float

    def __post_init__(self) -> None:
        _require(self.rate_value > 0.0, "constant background rate must be > 0")

    def rate(self, t: float) -> float:
        return self.rate_value

    def integral(self, t0: float, t1: float) -> float:
        return self.rate_value * (t1 - t0)


@dataclass(frozen=True)
class ExponentialDecayBackground:
    """Immigrant rate limit + (initial - limit) * exp(-decay * t).

    Starts at ``initial_rate`` and relaxes toward ``limit_rate``; requires
    initial_rate >= limit_rate so the rate never increases.
    """

    limit_rate: float
    initial_rate: float
    decay: float

    def __post_init__(self) -> None:
        _require(self.limit_rate >= 0.0, "limit rate must be >= 0")
        _require(self.initial_rate >= self.limit_rate, "initial rate must be >= limit")
        _require(self.decay > 0.0, "background decay must be > 0")

    def rate(self, t: float) -> float:
        return self.limit_rate + (self.initial_rate - self.limit_rate) * math.exp(
            -self.decay * t
        )

    def integral(self, t0: float, t1: float) -> float:
        transient = (self.initial_rate - self.limit_rate) / self.decay
        # guard 0 * inf when the limit rate is zero and t1 is infinite
        base = self.limit_rate * (t1 - t0) if self.limit_rate else 0.0
        return base + transient * (
            math.exp(-self.decay * t0) - math.exp(-self.decay * t1)
        )


BackgroundSpec = Union[ZeroBackground, ConstantBackground, ExponentialDecayBackground]


@dataclass(frozen=True)
class HawkesModel:
    """Background rate + memory kernel (+ mark-law exponent for prediction).

    ``mark_exponent`` is the Pareto exponent of the mark distribution; it is
    only needed when computing marked branching factors and may be left
    unset otherwise.
    """

    background: BackgroundSpec
    kernel: KernelSpec
    mark_exponent: Optional[float] = None

    def __post_init__(self) -> None:
        if self.mark_exponent is not None and self.mark_exponent <= 1.0:
            raise ParameterError("mark_exponent must be > 1")


def counting_process(seq: EventSequence, t: float) -> int:
    """Number of events with time <= t (right-continuous step function)."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    return int(np.searchsorted(seq.times, t, side="right"))


def intensity_at(model: HawkesModel, seq: EventSequence, t: float) -> float:
    """Conditional intensity lambda(t) given the strict history before t."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    k = int(np.searchsorted(seq.times, t, side="left"))
    total = model.background.rate(t)
    if k:
        lags = t - seq.times[:k]
        total += float(np.sum(model.kernel.value(lags, seq.marks[:k])))
    return total


def intensity_right_limit(model: HawkesModel, seq: EventSequence, t: float) -> float:
    """lambda(t+): like intensity_at but including an event exactly at t."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    k = int(np.searchsorted(seq.times, t, side="right"))
    total = model.background.rate(t)
    if k:
        lags = t - seq.times[:k]
        total += float(np.sum(model.kernel.value(lags, seq.marks[:k])))
    return total


def compensator(model: HawkesModel, seq: EventSequence, t0: float, t1: float) -> float:
    """Integral of the intensity over [t0, t1], in closed form.

    Uses the analytic antiderivative of the kernel family and of the
    background variant; ``t1`` may be ``inf`` for kernels with finite tail
    mass (all four families).
    """
    if t0 < 0.0 or t1 < t0:
        raise ValueError("need 0 <= t0 <= t1")
    if t1 == t0:
        return 0.0
    total = model.background.integral(t0, t1)
    k = int(np.searchsorted(seq.times, t1, side="left"))
    if k:
        times = seq.times[:k]
        lag1 = t1 - times
        lag0 = np.clip(t0 - times, 0.0, None)
        total += float(np.sum(model.kernel.integral(lag0, lag1, seq.marks[:k])))
    return total
