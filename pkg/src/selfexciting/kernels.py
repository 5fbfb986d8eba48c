"""Memory kernels for self-exciting point processes.

A kernel ``phi_m(lag)`` is the rate boost that an event with mark ``m`` adds
to the process intensity ``lag`` seconds after it occurred.  Four families
are provided: exponential and power-law decay, each in an unmarked and a
marked (mark-scaled) variant.  Every family carries its closed-form
integral, so compensators, likelihoods and branching factors never need
numerical quadrature.

All kernel objects are frozen dataclasses: immutable after construction and
safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ParameterError",
    "DivergentMarkMomentError",
    "MarkDistribution",
    "ExponentialKernel",
    "PowerLawKernel",
    "MarkedPowerLawKernel",
    "MarkedExponentialKernel",
    "KernelSpec",
    "MARKED_FAMILIES",
    "branching_factor",
    "marked_branching_factor",
]


class ParameterError(ValueError):
    """A kernel or model parameter is outside its admissible domain."""


class DivergentMarkMomentError(ParameterError):
    """The requested mark moment does not exist (tail too heavy)."""


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ParameterError(message)


def _check_lags(lag0, lag1):
    """Validate and broadcast an integration range. lag1 may be +inf."""
    a = np.asarray(lag0, dtype=float)
    b = np.asarray(lag1, dtype=float)
    if np.any(a < 0.0):
        raise ValueError("lower integration lag must be nonnegative")
    if np.any(b < a):
        raise ValueError("integration bounds are reversed (lag1 < lag0)")
    return a, b


def _check_lag(lag):
    arr = np.asarray(lag, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("lag must be nonnegative")
    return arr


def _scalarize(value, *inputs):
    if all(np.isscalar(x) or np.ndim(x) == 0 for x in inputs):
        return float(value)
    return value


@dataclass(frozen=True)
class MarkDistribution:
    """Pareto law of event marks on [1, inf): density (a - 1) * m**(-a).

    ``exponent`` (a) controls the heavy tail; it must exceed 1 for the
    density to normalize.  Marks model per-event magnitudes such as the
    follower count of a tweeting user.
    """

    exponent: float

    def __post_init__(self) -> None:
        _require(self.exponent > 1.0, "mark exponent must be > 1")

    def moment(self, power: float) -> float:
        """E[m**power]; exists only for power < exponent - 1."""
        if power >= self.exponent - 1.0:
            raise DivergentMarkMomentError(
                f"E[m^{power}] diverges for mark exponent {self.exponent}"
            )
        return (self.exponent - 1.0) / (self.exponent - 1.0 - power)

    def sample(self, rng: np.random.Generator, size=None):
        """Inverse-transform draws m = u**(-1/(a-1)) with u in (0, 1]."""
        u = 1.0 - rng.random(size)
        return u ** (-1.0 / (self.exponent - 1.0))


@dataclass(frozen=True)
class ExponentialKernel:
    """phi(x) = alpha * exp(-delta * x); marks are ignored."""

    alpha: float
    delta: float

    marked = False

    def __post_init__(self) -> None:
        _require(self.alpha >= 0.0, "alpha must be >= 0")
        _require(self.delta > 0.0, "delta must be > 0")

    def value(self, lag, mark=1.0):
        x = _check_lag(lag)
        return _scalarize(self.alpha * np.exp(-self.delta * x), lag)

    def integral(self, lag0, lag1, mark=1.0):
        a, b = _check_lags(lag0, lag1)
        out = (self.alpha / self.delta) * (
            np.exp(-self.delta * a) - np.exp(-self.delta * b)
        )
        return _scalarize(out, lag0, lag1)


@dataclass(frozen=True)
class PowerLawKernel:
    """phi(x) = alpha / (x + delta)**(eta + 1); marks are ignored."""

    alpha: float
    delta: float
    eta: float

    marked = False

    def __post_init__(self) -> None:
        _require(self.alpha >= 0.0, "alpha must be >= 0")
        _require(self.delta > 0.0, "delta must be > 0")
        _require(self.eta > 0.0, "eta must be > 0")

    def value(self, lag, mark=1.0):
        x = _check_lag(lag)
        return _scalarize(self.alpha * (x + self.delta) ** -(self.eta + 1.0), lag)

    def integral(self, lag0, lag1, mark=1.0):
        a, b = _check_lags(lag0, lag1)
        out = (self.alpha / self.eta) * (
            (a + self.delta) ** -self.eta - (b + self.delta) ** -self.eta
        )
        return _scalarize(out, lag0, lag1)


@dataclass(frozen=True)
class MarkedPowerLawKernel:
    """phi_m(x) = kappa * m**beta * (x + c)**-(1 + theta).

    The social-media power-law kernel: ``kappa`` scales content virality,
    ``beta`` warps the influence of the event mark, ``c`` shifts the law to
    keep phi bounded near zero lag, and ``1 + theta`` is the forgetting
    exponent.
    """

    kappa: float
    beta: float
    c: float
    theta: float

    marked = True

    def __post_init__(self) -> None:
        # kappa == 0 is the zero kernel: degenerate but useful (no excitation)
        _require(self.kappa >= 0.0, "kappa must be >= 0")
        _require(self.beta >= 0.0, "beta must be >= 0")
        _require(self.c > 0.0, "c must be > 0")
        _require(self.theta > 0.0, "theta must be > 0")

    def value(self, lag, mark=1.0):
        x = _check_lag(lag)
        m = np.asarray(mark, dtype=float)
        out = self.kappa * m**self.beta * (x + self.c) ** -(1.0 + self.theta)
        return _scalarize(out, lag, mark)

    def integral(self, lag0, lag1, mark=1.0):
        a, b = _check_lags(lag0, lag1)
        m = np.asarray(mark, dtype=float)
        out = (self.kappa * m**self.beta / self.theta) * (
            (a + self.c) ** -self.theta - (b + self.c) ** -self.theta
        )
        return _scalarize(out, lag0, lag1, mark)


@dataclass(frozen=True)
class MarkedExponentialKernel:
    """phi_m(x) = kappa * m**beta * theta * exp(-theta * x).

    Exponential analogue of the social-media kernel; the decay rate
    ``theta`` doubles as the normalization, so the lag integral over
    [0, inf) is exactly kappa * m**beta.
    """

    kappa: float
    beta: float
    theta: float

    marked = True

    def __post_init__(self) -> None:
        _require(self.kappa >= 0.0, "kappa must be >= 0")
        _require(self.beta >= 0.0, "beta must be >= 0")
        _require(self.theta > 0.0, "theta must be > 0")

    def value(self, lag, mark=1.0):
        x = _check_lag(lag)
        m = np.asarray(mark, dtype=float)
        out = self.kappa * m**self.beta * self.theta * np.exp(-self.theta * x)
        return _scalarize(out, lag, mark)

    def integral(self, lag0, lag1, mark=1.0):
        a, b = _check_lags(lag0, lag1)
        m = np.asarray(mark, dtype=float)
        out = (
            self.kappa
            * m**self.beta
            * (np.exp(-self.theta * a) - np.exp(-self.theta * b))
        )
        return _scalarize(out, lag0, lag1, mark)


KernelSpec = Union[
    ExponentialKernel, PowerLawKernel, MarkedPowerLawKernel, MarkedExponentialKernel
]

MARKED_FAMILIES = (MarkedPowerLawKernel, MarkedExponentialKernel)


def branching_factor(kernel: KernelSpec) -> float:
    """Expected direct offspring per event: the lag integral of phi.

    Only defined for the unmarked families; the marked families need a mark
    distribution to average over, see :func:`marked_branching_factor`.
    """
    if isinstance(kernel, ExponentialKernel):
        return kernel.alpha / kernel.delta
    if isinstance(kernel, PowerLawKernel):
        return kernel.alpha / (kernel.eta * kernel.delta**kernel.eta)
    if isinstance(kernel, MARKED_FAMILIES):
        raise TypeError(
            "marked kernel families need a mark distribution; "
            "use marked_branching_factor"
        )
    raise TypeError(f"not a kernel: {kernel!r}")


def marked_branching_factor(kernel: KernelSpec, marks: MarkDistribution) -> float:
    """Branching factor of a marked kernel under Pareto-distributed marks.

    Averages the per-event offspring count over both lag and mark:
    E[m**beta] * integral of the unit-mark kernel.  Requires
    beta < exponent - 1 for the mark moment to exist.
    """
    if not isinstance(kernel, MARKED_FAMILIES):
        raise TypeError(
            "unmarked kernel families have a mark-free branching factor; "
            "use branching_factor"
        )
    mean_mark_power = marks.moment(kernel.beta)  # raises if divergent
    if isinstance(kernel, MarkedPowerLawKernel):
        return kernel.kappa * mean_mark_power / (kernel.theta * kernel.c**kernel.theta)
    return kernel.kappa * mean_mark_power
