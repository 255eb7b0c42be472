"""Layer plans for the space-saving and capacity-improvement variants.

Counter sizes form a geometric series with ratio ``d`` ending at ``B`` for
the base layers, so bit widths form an arithmetic series with step
``log2(d)``. The capacity-improvement plan reinvests the bits saved by the
narrow layers into extra layers above ``B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .sketch import (
    GeometryError,
    SketchGeometry,
    Variant,
    extra_layer_bits,
    log2_exact,
    saved_row_bits,
)


@dataclass(frozen=True)
class SpaceReport:
    """Bit accounting against the rectangular sketch of the same ``B``, ``k``, ``w``."""

    T_r: int
    T_trap: int
    saved_bits: int
    reduction_ratio: float
    residual_bits: int = 0


@dataclass(frozen=True)
class CapacityPlan:
    k: int
    d: int
    s_exact: float
    s_tilde: int
    capacity: int
    principle: int


def _check_feasible(B: int, k: int, d: int) -> tuple[int, int]:
    if k < 1:
        raise GeometryError(f"k must be >= 1, got {k}")
    if d < 2:
        raise GeometryError(f"d must be >= 2, got {d}")
    if k > 1 and d ** (k - 1) >= B:
        raise GeometryError(f"infeasible plan: d^(k-1) = {d ** (k - 1)} >= B = {B}")
    return log2_exact(B, "B"), log2_exact(d, "d")


def gamma_closed_form(B: int, k: int, d: int) -> float:
    return (k - 1) * math.log2(d) / (2 * math.log2(B))


def space_saving_geometry(B: int, k: int, w: int, d: int) -> tuple[SketchGeometry, SpaceReport]:
    M, L = _check_feasible(B, k, d)
    bits = [M - (k - i) * L for i in range(1, k + 1)]
    geometry = SketchGeometry(Variant.SPACE_SAVING, w, tuple(bits), d, M)
    T_r = k * w * M
    T_trap = geometry.total_bits
    saved = T_r - T_trap
    return geometry, SpaceReport(T_r, T_trap, saved, saved / T_r)


def solve_extra_layers(B: int, k: int, d: int) -> float:
    """Real number of extra layers the saved bits could pay for.

    Positive root of ``L s^2 + (L + 2M) s - k(k-1) L = 0`` with
    ``L = log2 d`` and ``M = log2 B``.
    """
    M, L = _check_feasible(B, k, d)
    lin = L + 2 * M
    return (math.sqrt(lin * lin + 4 * k * (k - 1) * L * L) - lin) / (2 * L)


def _whole_extra_layers(M: int, L: int, k: int) -> int:
    # integer solve avoids float floor drift at exact roots
    saved = saved_row_bits(k, L)
    s = 0
    while extra_layer_bits(M, L, s + 1) <= saved:
        s += 1
    return s


def feasible_pairs(B: int) -> list[tuple[int, int]]:
    """Every ``(d, k)`` with ``d`` a power of two, ``k >= 2`` and ``d^(k-1) < B``."""
    M = log2_exact(B, "B")
    pairs = []
    for L in range(1, M):
        d = 1 << L
        k = 2
        while d ** (k - 1) < B:
            pairs.append((d, k))
            k += 1
    return pairs


def optimize_capacity(B: int, w: int | None = None) -> CapacityPlan:
    """Pick ``(d, k)`` maximizing the number of extra layers.

    Ties on the whole number of layers go to the larger fractional part,
    which is the same as taking the largest real root overall.
    """
    M = log2_exact(B, "B")
    pairs = feasible_pairs(B)
    if not pairs:
        raise GeometryError(f"no feasible (d, k) for B = {B}; need B >= 4")
    scored = [(solve_extra_layers(B, k, d), d, k) for d, k in pairs]
    s_best, d, k = max(scored, key=lambda t: (_whole_extra_layers(M, log2_exact(t[1], "d"), t[2]), t[0]))
    s_tilde = _whole_extra_layers(M, log2_exact(d, "d"), k)

    first = [t for t in scored if t[1] == 2 and t[2] == M]
    others = [t for t in scored if not (t[1] == 2 and t[2] == M)]
    if first and others:
        s1 = first[0][0]
        s2 = max(t[0] for t in others)
        principle = 3 if math.floor(s1) == math.floor(s2) else (1 if s1 > s2 else 2)
    else:
        principle = 1 if (d, k) == (2, M) else 2
    return CapacityPlan(k, d, s_best, s_tilde, d**s_tilde * B, principle)


def capacity_plan(B: int, k: int, d: int) -> CapacityPlan:
    """Plan for a fixed ``(k, d)`` instead of the optimizer's choice."""
    M, L = _check_feasible(B, k, d)
    s_tilde = _whole_extra_layers(M, L, k)
    principle = 1 if (d, k) == (2, M) else 2
    return CapacityPlan(k, d, solve_extra_layers(B, k, d), s_tilde, d**s_tilde * B, principle)


def capacity_improvement_geometry(
    B: int, w: int, k: int | None = None, d: int | None = None
) -> tuple[SketchGeometry, SpaceReport, CapacityPlan]:
    """Space-saving base layers plus the extra layers their saved bits buy.

    ``k`` and ``d`` default to the optimizer's choice.
    """
    if (k is None) != (d is None):
        raise ValueError("give both k and d, or neither")
    plan = optimize_capacity(B, w) if k is None else capacity_plan(B, k, d)
    M, L = log2_exact(B, "B"), log2_exact(plan.d, "d")
    base_bits = [M - (plan.k - i) * L for i in range(1, plan.k + 1)]
    extra_bits = [M + j * L for j in range(1, plan.s_tilde + 1)]
    geometry = SketchGeometry(
        Variant.CAPACITY_IMPROVEMENT, w, tuple(base_bits + extra_bits), plan.d, M
    )
    T_r = plan.k * w * M
    saved = T_r - w * sum(base_bits)
    residual = saved - w * sum(extra_bits)
    T_trap = geometry.total_bits
    assert T_trap <= T_r and residual >= 0
    report = SpaceReport(T_r, T_trap, saved, saved / T_r, residual)
    return geometry, report, plan


def rectangular_geometry(B: int, k: int, w: int) -> SketchGeometry:
    M = log2_exact(B, "B")
    return SketchGeometry(Variant.R_STRUCTURE, w, (M,) * k, 1, M)


def width_for_budget(row_bits: int, budget_bits: int) -> int:
    """Largest ``w`` whose ``w * row_bits`` fits in the budget."""
    w = budget_bits // row_bits
    if w < 1:
        raise GeometryError(f"budget of {budget_bits} bits cannot hold one row of {row_bits} bits")
    return w
