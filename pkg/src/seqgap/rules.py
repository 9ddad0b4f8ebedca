"""Threshold calibration and stepping logic for the sequential rules.

Three procedures over the ordered cumulative sums (gaps are invariant to
the shared factor, so the observable sums stand in for the idiosyncratic
ones):

* gap rule -- the signal count m is known; stop when the gap between the
  m-th and (m+1)-th largest sums reaches a fixed threshold G, reject the
  top m.
* max-gap rule -- only strict bounds l < |signals| < u are known; stop
  when the largest eligible ordered-sum gap reaches a time-growing
  threshold e(n) = base + slope*n, reject the top p where p is the
  maximizing index.
* gap-intersection rule -- independent-streams baseline on the per-stream
  log-likelihood ratios, combining three stopping criteria with four
  thresholds.

Calibrations accept a ``c1_adjust`` factor (C1) that tightens the nominal
levels to alpha/C1, beta/C1, converting familywise-error control into
control of any error metric bounded by C1 times the familywise rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .model import ModelParams, SufficientStats, gap_statistic, ordered_sums

__all__ = [
    "GI_CORRELATED_UNSUPPORTED",
    "GapRuleConfig",
    "GIRuleConfig",
    "KlNumbers",
    "MAXGAP_VARIANTS",
    "MaxGapRuleConfig",
    "StopDecision",
    "VARIANT_SQRT2",
    "VARIANT_UNSCALED",
    "calibrate_gap",
    "calibrate_gi",
    "calibrate_maxgap",
    "gap_rule_step",
    "gi_rule_step",
    "kl_numbers",
    "maxgap_rule_step",
]

# The time-varying max-gap threshold admits two published forms differing
# by a factor of sqrt(2).  The union-bound error derivation carries the
# sqrt(2) through to the threshold; the displayed closed form drops it.
# "sqrt2" is the conservative default, "unscaled" the displayed form.
VARIANT_SQRT2 = "sqrt2"
VARIANT_UNSCALED = "unscaled"
MAXGAP_VARIANTS = (VARIANT_SQRT2, VARIANT_UNSCALED)

GI_CORRELATED_UNSUPPORTED = (
    "the gap-intersection baseline is calibrated for independent streams (rho=0); "
    "pass experimental_correlated=True to run it on correlated streams anyway"
)


@dataclass(frozen=True)
class StopDecision:
    """Continue, or stop with the 1-based set of rejected streams."""

    stopped: bool
    rejected: frozenset[int] | None = None

    def __post_init__(self) -> None:
        if self.stopped != (self.rejected is not None):
            raise ValueError("rejected must be present exactly when stopped")
        if self.rejected is not None:
            object.__setattr__(self, "rejected", frozenset(int(i) for i in self.rejected))


CONTINUE = StopDecision(False)


@dataclass(frozen=True)
class GapRuleConfig:
    """Known-m gap rule with log-scale threshold c and sum-scale threshold G."""

    m: int
    alpha: float
    beta: float
    c1_adjust: float
    c: float
    G: float

    def __post_init__(self) -> None:
        if self.G <= 0.0:
            raise ValueError(f"G must be > 0, got {self.G}")


def _check_levels(alpha: float, beta: float, c1_adjust: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    if not c1_adjust > 0.0:
        raise ValueError(f"c1_adjust must be > 0, got {c1_adjust}")
    if alpha / c1_adjust >= 1.0 or beta / c1_adjust >= 1.0:
        raise ValueError(
            f"adjusted levels alpha/C1={alpha / c1_adjust}, beta/C1={beta / c1_adjust} "
            "must be below 1"
        )


def calibrate_gap(
    m: int,
    K: int,
    alpha: float,
    beta: float,
    rho: float,
    mu: float,
    c1_adjust: float = 1.0,
) -> GapRuleConfig:
    """Threshold selection for the known-m gap rule.

    c = |log(min(alpha, beta)/C1)| + log(m*(K-m)) makes the union bound
    m*(K-m)*exp(-c) equal min(alpha, beta)/C1 exactly;
    G = (1-rho)*c/mu converts to the sum scale.
    """
    if not 1 <= m <= K - 1:
        raise ValueError(f"m must be in 1..{K - 1}, got {m}")
    _check_levels(alpha, beta, c1_adjust)
    c = abs(math.log(min(alpha / c1_adjust, beta / c1_adjust))) + math.log(m * (K - m))
    G = (1.0 - rho) / mu * c
    return GapRuleConfig(m=m, alpha=alpha, beta=beta, c1_adjust=c1_adjust, c=c, G=G)


def gap_rule_step(stats: SufficientStats, cfg: GapRuleConfig) -> StopDecision:
    """Stop when the m-th ordered-sum gap reaches G; reject the top m streams."""
    if stats.n < 1:
        raise ValueError("rule stepping starts at n >= 1")
    if gap_statistic(stats, cfg.m) >= cfg.G:
        top = ordered_sums(stats)[: cfg.m]
        return StopDecision(True, frozenset(i for i, _ in top))
    return CONTINUE


@dataclass(frozen=True)
class MaxGapRuleConfig:
    """Bounded-count max-gap rule with affine threshold e(n) = base + slope*n."""

    l: int
    u: int
    alpha: float
    beta: float
    c1_adjust: float
    variant: str
    base: float
    slope: float

    def __post_init__(self) -> None:
        if self.variant not in MAXGAP_VARIANTS:
            raise ValueError(f"variant must be one of {MAXGAP_VARIANTS}, got {self.variant!r}")
        if self.base <= 0.0:
            raise ValueError(f"base must be > 0, got {self.base}")

    def threshold_at(self, n: int) -> float:
        return self.base + self.slope * n


def calibrate_maxgap(
    l: int,
    u: int,
    K: int,
    alpha: float,
    beta: float,
    rho: float,
    mu: float,
    c1_adjust: float = 1.0,
    variant: str = VARIANT_SQRT2,
) -> MaxGapRuleConfig:
    """Threshold selection for the max-gap rule with strict bounds l < p < u.

    inner = max(|log((alpha/C1) / (2(K-l)(K-l-1)))|,
                |log((beta/C1) / (2u(u-1)))|)
    unscaled:  e(n) = (1-rho)/mu * inner + n*mu/2
    sqrt2:     e(n) = sqrt(2) * [(1-rho)/mu * inner + n*mu/2]
    """
    if not 1 <= l < u <= K - 1:
        raise ValueError(f"need 1 <= l < u <= {K - 1}, got l={l}, u={u}")
    if u < l + 2:
        raise ValueError(
            f"eligible gap indices l < i < u are empty for l={l}, u={u}; need u >= l + 2"
        )
    if variant not in MAXGAP_VARIANTS:
        raise ValueError(f"variant must be one of {MAXGAP_VARIANTS}, got {variant!r}")
    _check_levels(alpha, beta, c1_adjust)
    inner = max(
        abs(math.log((alpha / c1_adjust) / (2.0 * (K - l) * (K - l - 1)))),
        abs(math.log((beta / c1_adjust) / (2.0 * u * (u - 1)))),
    )
    base = (1.0 - rho) / mu * inner
    slope = mu / 2.0
    if variant == VARIANT_SQRT2:
        base *= math.sqrt(2.0)
        slope *= math.sqrt(2.0)
    return MaxGapRuleConfig(
        l=l, u=u, alpha=alpha, beta=beta, c1_adjust=c1_adjust,
        variant=variant, base=base, slope=slope,
    )


def maxgap_rule_step(stats: SufficientStats, cfg: MaxGapRuleConfig) -> StopDecision:
    """Stop when max_{l < i < u} gap(i) reaches e(n); reject the top p streams.

    p is the maximizing gap index, smallest index on ties (the conservative
    choice: fewer rejections).  On every stop l < p < u by construction.
    """
    if stats.n < 1:
        raise ValueError("rule stepping starts at n >= 1")
    best_i = -1
    best_gap = -math.inf
    for i in range(cfg.l + 1, cfg.u):
        g = gap_statistic(stats, i)
        if g > best_gap:
            best_i = i
            best_gap = g
    if best_gap >= cfg.threshold_at(stats.n):
        top = ordered_sums(stats)[:best_i]
        return StopDecision(True, frozenset(i for i, _ in top))
    return CONTINUE


@dataclass(frozen=True)
class GIRuleConfig:
    """Gap-intersection rule thresholds (all on the log-likelihood scale)."""

    l: int
    u: int
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"threshold {name} must be > 0, got {getattr(self, name)}")


def calibrate_gi(l: int, u: int, K: int, alpha: float, beta: float) -> GIRuleConfig:
    """Threshold selection for the gap-intersection baseline.

    a = |log beta| + log K        d = |log beta| + log(u*K)
    b = |log alpha| + log K       c = |log alpha| + log((K-l)*K)
    """
    if not 1 <= l < u <= K - 1:
        raise ValueError(f"need 1 <= l < u <= {K - 1}, got l={l}, u={u}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    log_a = abs(math.log(alpha))
    log_b = abs(math.log(beta))
    return GIRuleConfig(
        l=l,
        u=u,
        a=log_b + math.log(K),
        b=log_a + math.log(K),
        c=log_a + math.log((K - l) * K),
        d=log_b + math.log(u * K),
    )


def gi_rule_step(llrs: list[float], cfg: GIRuleConfig) -> StopDecision:
    """One step of the gap-intersection rule on per-stream log-likelihood ratios.

    With ordered statistics lam(1) >= ... >= lam(K) and p = #{positive llrs}:

    * undershoot criterion: lam(l+1) <= -a and lam(l) - lam(l+1) >= c
    * intersection criterion: l <= p <= u and no llr inside (-a, b)
    * overshoot criterion: lam(u) >= b and lam(u) - lam(u+1) >= d

    On stop the top p' streams are rejected, p' = p clamped into [l, u].
    """
    K = len(llrs)
    if cfg.u + 1 > K:
        raise ValueError(f"rule needs at least {cfg.u + 1} streams, got {K}")
    order = sorted(range(K), key=lambda i: (-llrs[i], i))
    lam = [llrs[i] for i in order]  # descending
    p = sum(1 for x in llrs if x > 0.0)

    tau1 = lam[cfg.l] <= -cfg.a and lam[cfg.l - 1] - lam[cfg.l] >= cfg.c
    tau2 = cfg.l <= p <= cfg.u and all(not (-cfg.a < x < cfg.b) for x in llrs)
    tau3 = lam[cfg.u - 1] >= cfg.b and lam[cfg.u - 1] - lam[cfg.u] >= cfg.d

    if not (tau1 or tau2 or tau3):
        return CONTINUE
    p_prime = min(max(p, cfg.l), cfg.u)
    return StopDecision(True, frozenset(order[i] + 1 for i in range(p_prime)))


class KlNumbers(NamedTuple):
    """Per-stream information numbers and their minima over noise/signal sets."""

    d0: float
    d1: float
    eta0: float
    eta1: float


def kl_numbers(params: ModelParams) -> KlNumbers:
    """Information numbers for the unit-variance mean-shift test: all mu^2/2.

    Streams are exchangeable, so the minima over any subset equal the
    per-stream values.
    """
    d = params.mu**2 / 2.0
    return KlNumbers(d0=d, d1=d, eta0=d, eta1=d)
