"""Closed-form error, overflow and accuracy-ratio calculators.

Collision noise model: an item's counter in one layer collects every other
item independently with probability ``1/w``, so its expected noise is
``(N - f) / w``. All Markov-style lower bounds are clamped to ``[0, 1]``.
``i`` always denotes how many of the item's mapped counters are saturated.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


@dataclass(frozen=True)
class AnalyticContext:
    """Parameters shared by the formulas.

    w: counters per layer; K: total layers (base plus extra); n: distinct
    items; N: total stream mass; beta: error-bound scale.
    """

    w: int
    K: int
    n: int
    N: int = 0
    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.w < 1 or self.K < 1 or self.n < 1:
            raise ValueError(f"need w, K, n >= 1, got w={self.w} K={self.K} n={self.n}")
        if self.N < 0:
            raise ValueError(f"N must be >= 0, got {self.N}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")

    @property
    def w_beta(self) -> float:
        return self.w * self.beta

    def with_layers(self, K: int) -> AnalyticContext:
        return AnalyticContext(self.w, K, self.n, self.N, self.beta)


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _check_level(ctx: AnalyticContext, i: int) -> None:
    if not 0 <= i <= ctx.K:
        raise ValueError(f"saturated layer count {i} outside [0, {ctx.K}]")


def collision_probability(w: int, n: int) -> float:
    """Probability that at least one of the other ``n - 1`` items shares a counter."""
    return 1.0 - (1.0 - 1.0 / w) ** (n - 1)


def rho(w: int, n: int, K: int, i: int) -> float:
    if not 0 <= i <= K:
        raise ValueError(f"saturated layer count {i} outside [0, {K}]")
    return collision_probability(w, n) ** (K - i)


def overflow_safety_bound(ctx: AnalyticContext, layer_size: int, f: int) -> float:
    """Lower bound on P(noise <= layer_size - f): the counter does not overflow."""
    if f >= layer_size:
        raise ValueError(
            f"frequency {f} >= layer size {layer_size}: the counter overflows with certainty"
        )
    return _clamp01(1.0 - (ctx.N - f) / (ctx.w * (layer_size - f)))


def error_probability(ctx: AnalyticContext, i: int) -> float:
    _check_level(ctx, i)
    return rho(ctx.w, ctx.n, ctx.K, i)


def error_bound(ctx: AnalyticContext, i: int) -> float:
    """Lower bound on P(f_hat - f <= beta * (N - f)) with ``i`` layers saturated."""
    _check_level(ctx, i)
    if i == ctx.K:
        return 0.0
    return _clamp01(1.0 - ctx.w_beta ** -(ctx.K - i))


def noise_factor(r: float) -> float:
    return 2.0 * r * (1.0 - r)


def corrected_error_bound(ctx: AnalyticContext, i: int) -> float:
    return _clamp01(1.0 - noise_factor(error_probability(ctx, i)) / ctx.w_beta)


def phi_ratio(ctx: AnalyticContext, i: int) -> float:
    """Corrected over uncorrected accuracy lower bound."""
    if ctx.w_beta <= 1:
        raise ValueError(f"phi needs w*beta > 1, got {ctx.w_beta}")
    return (ctx.w_beta - noise_factor(error_probability(ctx, i))) / (ctx.w_beta - 1)


class Ratio(enum.Enum):
    LESS_THAN_ONE = "<1"
    EQUAL_TO_ONE = "=1"
    GREATER_THAN_ONE = ">1"


_TIE = 1e-12


def _check_pair(rho1: float, rho2: float) -> None:
    if not (0 < rho2 < rho1 < 1):
        raise ValueError(f"need 0 < rho2 < rho1 < 1, got rho1={rho1} rho2={rho2}")


def phi_pair(rho1: float, rho2: float, w_beta: float) -> float:
    """Accuracy-bound ratio of a sketch with error probability ``rho1`` over one with ``rho2``."""
    _check_pair(rho1, rho2)
    if w_beta <= 1:
        raise ValueError(f"phi needs w*beta > 1, got {w_beta}")
    return (w_beta - noise_factor(rho1)) / (w_beta - noise_factor(rho2))


def mu_pair(rho1: float, rho2: float) -> float:
    _check_pair(rho1, rho2)
    return noise_factor(rho1) / noise_factor(rho2)


def phi_compare(rho1: float, rho2: float, w_beta: float | None = None) -> Ratio:
    """Classify phi by the case rules alone (no evaluation of phi).

    With ``rho1 > rho2``: both below one half gives phi < 1, both above gives
    phi > 1, and a straddling pair is decided by ``rho1 + rho2`` against 1.
    """
    _check_pair(rho1, rho2)
    if w_beta is not None and w_beta <= 1:
        raise ValueError(f"phi needs w*beta > 1, got {w_beta}")
    if rho1 < 0.5 and rho2 < 0.5:
        return Ratio.LESS_THAN_ONE
    if rho1 > 0.5 and rho2 > 0.5:
        return Ratio.GREATER_THAN_ONE
    total = rho1 + rho2
    if abs(total - 1.0) <= _TIE:
        return Ratio.EQUAL_TO_ONE
    return Ratio.GREATER_THAN_ONE if total > 1 else Ratio.LESS_THAN_ONE


def mu_compare(rho1: float, rho2: float) -> Ratio:
    """mu sits on the opposite side of 1 from phi."""
    flip = {
        Ratio.LESS_THAN_ONE: Ratio.GREATER_THAN_ONE,
        Ratio.GREATER_THAN_ONE: Ratio.LESS_THAN_ONE,
        Ratio.EQUAL_TO_ONE: Ratio.EQUAL_TO_ONE,
    }
    return flip[phi_compare(rho1, rho2)]


def mu_ratio(ctx: AnalyticContext, i: int, extra_layers: int) -> float:
    """Noise-bound ratio of the space-saving plan (``ctx.K`` layers) over the
    capacity-improvement plan (``ctx.K + extra_layers`` layers)."""
    rho1 = error_probability(ctx, i)
    rho2 = error_probability(ctx.with_layers(ctx.K + extra_layers), i)
    return noise_factor(rho1) / noise_factor(rho2)


def corrected_noise_mean(ctx: AnalyticContext, i: int, f: float) -> float:
    return noise_factor(error_probability(ctx, i)) * (ctx.N - f) / ctx.w


def corrected_beta(ctx: AnalyticContext, i: int) -> float:
    """Error scale at which the corrected estimator matches the plain bound at ``beta``."""
    return noise_factor(error_probability(ctx, i)) * ctx.beta
