"""Wald sequential probability ratio test for a Gaussian mean.

Two simple hypotheses theta0 vs theta1 (theta0 < theta1) with known
variance sigma2.  The log-boundaries are a = log[(1-delta)/gamma] and
b = log[delta/(1-gamma)]; delta = 0 selects the one-sided test (b = -inf,
never accept the null).  Decisions compare the drift-centered sum

    sum(u) - n*(theta1+theta0)/2

against the boundaries rescaled by sigma2/(theta1-theta0).

Also provides the classical average-sample-number (ASN) approximations and
the small-error asymptotic ASN used as the optimality yardstick for the
multi-stream rules.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Literal

__all__ = [
    "SprtBoundaries",
    "SprtConfig",
    "SprtDecision",
    "SprtOutcome",
    "SprtTruncated",
    "asn_asymptotic",
    "asn_wald",
    "boundaries",
    "run_sprt",
    "sprt_step",
]


class SprtDecision(enum.Enum):
    CONTINUE = "continue"
    ACCEPT_H0 = "accept_h0"
    REJECT_H0 = "reject_h0"


@dataclass(frozen=True)
class SprtConfig:
    """Hypotheses, known variance, and target error levels gamma (type I),
    delta (type II).  delta = 0 selects the one-sided test."""

    theta0: float
    theta1: float
    sigma2: float = 1.0
    gamma: float = 0.05
    delta: float = 0.05

    def __post_init__(self) -> None:
        if not self.theta0 < self.theta1:
            raise ValueError(f"need theta0 < theta1, got {self.theta0} >= {self.theta1}")
        if not self.sigma2 > 0.0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")
        if not self.gamma + self.delta < 1.0:
            raise ValueError(f"need gamma + delta < 1, got {self.gamma + self.delta}")

    @property
    def kl_rate(self) -> float:
        """Per-observation information number (theta1-theta0)^2 / (2*sigma2)."""
        return (self.theta1 - self.theta0) ** 2 / (2.0 * self.sigma2)


@dataclass(frozen=True)
class SprtBoundaries:
    """Log-scale boundaries and the sum-scale conversion factors."""

    a: float
    b: float
    sum_scale: float  # sigma2 / (theta1 - theta0)
    drift: float  # (theta1 + theta0) / 2

    def upper_sum_bound(self, n: int) -> float:
        """Raw-sum threshold for rejecting the null at time n."""
        return n * self.drift + self.a * self.sum_scale

    def lower_sum_bound(self, n: int) -> float:
        """Raw-sum threshold for accepting the null at time n (-inf if one-sided)."""
        return n * self.drift + self.b * self.sum_scale


def boundaries(config: SprtConfig) -> SprtBoundaries:
    """a = log[(1-delta)/gamma], b = log[delta/(1-gamma)] (-inf when delta=0)."""
    a = math.log((1.0 - config.delta) / config.gamma)
    b = math.log(config.delta / (1.0 - config.gamma)) if config.delta > 0.0 else -math.inf
    return SprtBoundaries(
        a=a,
        b=b,
        sum_scale=config.sigma2 / (config.theta1 - config.theta0),
        drift=(config.theta1 + config.theta0) / 2.0,
    )


def sprt_step(bounds: SprtBoundaries, config: SprtConfig, n: int, cum_sum: float) -> SprtDecision:
    """Decision after n observations with raw cumulative sum ``cum_sum``.

    Rejection takes precedence when both boundaries are crossed at once,
    which can only happen in degenerate configurations with a <= b.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    statistic = cum_sum - n * bounds.drift
    if statistic >= bounds.a * bounds.sum_scale:
        return SprtDecision.REJECT_H0
    if statistic <= bounds.b * bounds.sum_scale:
        return SprtDecision.ACCEPT_H0
    return SprtDecision.CONTINUE


@dataclass(frozen=True)
class SprtOutcome:
    """Terminal decision and the time it was reached."""

    decision: SprtDecision
    stopping_time: int

    def __post_init__(self) -> None:
        if self.decision is SprtDecision.CONTINUE:
            raise ValueError("terminal outcome cannot be CONTINUE")
        if self.stopping_time < 1:
            raise ValueError(f"stopping_time must be >= 1, got {self.stopping_time}")


@dataclass(frozen=True)
class SprtTruncated:
    """No decision within the horizon; ``stopping_time`` observations consumed."""

    stopping_time: int


def run_sprt(
    config: SprtConfig,
    increments: Iterable[float],
    horizon_cap: int,
) -> SprtOutcome | SprtTruncated:
    """Feed increments through the test until a decision or the horizon.

    Returns :class:`SprtTruncated` if the horizon is reached or the source
    is exhausted while the test still wants more data.
    """
    if horizon_cap < 1:
        raise ValueError(f"horizon_cap must be >= 1, got {horizon_cap}")
    bounds = boundaries(config)
    n = 0
    cum_sum = 0.0
    for u in increments:
        n += 1
        cum_sum += u
        decision = sprt_step(bounds, config, n, cum_sum)
        if decision is not SprtDecision.CONTINUE:
            return SprtOutcome(decision, n)
        if n >= horizon_cap:
            return SprtTruncated(n)
    return SprtTruncated(n)


def asn_wald(config: SprtConfig, under: Literal["h0", "h1"]) -> float:
    """Classical ASN approximation under the null or the alternative.

    Under the null:  [(1-gamma)*b + gamma*a] / (-L),
    under the alternative: [delta*b + (1-delta)*a] / L,
    with a, b the log-boundaries and L the per-observation information
    number.  No overshoot correction is applied.

    delta = 0 is undefined under the null (b = -inf); the alternative-side
    value degenerates continuously to |log gamma| / L and is returned.
    """
    if under not in ("h0", "h1"):
        raise ValueError(f"under must be 'h0' or 'h1', got {under!r}")
    L = config.kl_rate
    a = math.log((1.0 - config.delta) / config.gamma)
    if config.delta == 0.0:
        if under == "h0":
            raise ValueError(
                "ASN under the null is undefined for the one-sided test (delta=0); "
                "use asn_asymptotic instead"
            )
        return a / L
    b = math.log(config.delta / (1.0 - config.gamma))
    if under == "h0":
        return ((1.0 - config.gamma) * b + config.gamma * a) / (-L)
    return (config.delta * b + (1.0 - config.delta) * a) / L


def asn_asymptotic(config: SprtConfig) -> float:
    """Small-error ASN: 2*sigma2/(theta1-theta0)^2 * |log(min(gamma, delta))|.

    For the one-sided test (delta=0) the minimum is read as gamma.
    """
    level = config.gamma if config.delta == 0.0 else min(config.gamma, config.delta)
    return abs(math.log(level)) / config.kl_rate
