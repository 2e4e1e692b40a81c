"""Cost algebra for allocations.

Machining cost of a part at a Tier1 supplier is (unit + transport) times
the ordered units in that proportion.  Forging demand at a Tier1 supplier
is induced by the parts machined there through per-part yields; forging
cost is (unit + transport) times that demand times the proportion share,
with LLV unit prices scaled by the supplier's penalty factor when its
blue-chip order book runs short.

:func:`evaluate` is the single source of truth for what an allocation
costs; the exact models and every meta-heuristic fitness call agree with
it by construction.  It is pure and reentrant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import (
    MONEY_TOL,
    ItemId,
    SourcingMode,
    SsoaError,
    SupplyChainInstance,
)


class AllocationError(SsoaError):
    """An allocation is structurally incomplete or out of range."""


@dataclass
class Allocation:
    """A complete assignment of work to suppliers.

    tier1[p, prop] is the Tier1 supplier machining proportion ``prop`` of
    part ``p``; tier2[f, j, prop] is the Tier2 supplier delivering that
    share of forging ``f`` to Tier1 supplier ``j``; tier2_level holds the
    penalty level (1 or 2) the assignment is priced at, meaningful only
    for LLV forgings.  ``tier2`` may be ``None`` for machinist-tier-only
    solutions.
    """

    tier1: np.ndarray | None
    tier2: np.ndarray | None = None
    tier2_level: np.ndarray | None = None

    def copy(self) -> "Allocation":
        return Allocation(
            None if self.tier1 is None else self.tier1.copy(),
            None if self.tier2 is None else self.tier2.copy(),
            None if self.tier2_level is None else self.tier2_level.copy(),
        )

    def same_as(self, other: "Allocation") -> bool:
        def eq(a, b):
            return (a is None and b is None) or (
                a is not None and b is not None and np.array_equal(a, b))
        return eq(self.tier1, other.tier1) and eq(self.tier2, other.tier2) \
            and eq(self.tier2_level, other.tier2_level)

    def to_doc(self) -> dict:
        return {
            "tier1": None if self.tier1 is None else self.tier1.tolist(),
            "tier2": None if self.tier2 is None else self.tier2.tolist(),
            "tier2_level": None if self.tier2_level is None else self.tier2_level.tolist(),
        }

    @staticmethod
    def from_doc(doc: dict) -> "Allocation":
        def arr(key):
            value = doc.get(key)
            return None if value is None else np.asarray(value, dtype=np.int64)
        return Allocation(arr("tier1"), arr("tier2"), arr("tier2_level"))


@dataclass
class CostBreakdown:
    """Component costs of one allocation plus the per-supplier views the
    negotiation screens need."""

    machining_blue: float
    machining_llv: float
    forging_blue: float
    forging_llv: float
    total: float
    per_supplier_spend_tier1: np.ndarray        # money [J]
    per_supplier_spend_tier2: np.ndarray        # money [L], blue + LLV
    per_supplier_blue_forging_spend_tier2: np.ndarray  # money [L]
    penalty_flags: np.ndarray                   # bool [L], short of threshold
    level_violations: list = field(default_factory=list)   # (f, j, prop) priced at wrong level
    forbidden_selected: list = field(default_factory=list)  # assignments hitting prohibitive costs

    def to_doc(self) -> dict:
        return {
            "machining_blue": self.machining_blue,
            "machining_llv": self.machining_llv,
            "forging_blue": self.forging_blue,
            "forging_llv": self.forging_llv,
            "total": self.total,
            "per_supplier_spend_tier1": self.per_supplier_spend_tier1.tolist(),
            "per_supplier_spend_tier2": self.per_supplier_spend_tier2.tolist(),
            "per_supplier_blue_forging_spend_tier2":
                self.per_supplier_blue_forging_spend_tier2.tolist(),
            "penalty_flags": [bool(v) for v in self.penalty_flags],
            "level_violations": [list(v) for v in self.level_violations],
            "forbidden_selected": [list(v) for v in self.forbidden_selected],
        }


def machining_cost(inst: SupplyChainInstance, part: ItemId, j: int, proportion: int = 1) -> float:
    """Total machining cost of one part at one supplier for one proportion."""
    p = inst.part_flat(part)
    _check_supplier(j, inst.tier1_count, "tier1")
    qty = inst.part_quantities()[p, _prop_index(inst, proportion)]
    unit = inst.effective_machining_unit_cost()[p, j] + inst.machining_transport_cost[p, j]
    return float(unit * qty)


def forging_requirement(
    inst: SupplyChainInstance, tier1: np.ndarray, forging: ItemId, j: int
) -> float:
    """Units of one forging a Tier1 supplier needs under a machinist allocation."""
    f = inst.forging_flat(forging)
    _check_supplier(j, inst.tier1_count, "tier1")
    return float(forging_requirement_table(inst, tier1)[f, j])


def forging_requirement_table(inst: SupplyChainInstance, tier1: np.ndarray) -> np.ndarray:
    """Forging demand [n_forgings, tier1_count] induced by a machinist allocation."""
    tier1 = _check_tier1(inst, tier1)
    demand = np.zeros((inst.tier1_count, inst.n_forgings))
    qty = inst.part_quantities()
    for prop in range(inst.n_proportions):
        contrib = inst.yields.astype(np.float64) * qty[:, prop][:, None]
        np.add.at(demand, tier1[:, prop], contrib)
    return demand.T


def forging_cost(
    inst: SupplyChainInstance,
    tier1: np.ndarray,
    forging: ItemId,
    j: int,
    l: int,
    level: int = 1,
    proportion: int = 1,
) -> float:
    """Total cost of one forging flow (Tier2 supplier -> Tier1 supplier) for
    one proportion, priced at the given penalty level."""
    f = inst.forging_flat(forging)
    _check_supplier(j, inst.tier1_count, "tier1")
    _check_supplier(l, inst.tier2_count, "tier2")
    if level not in (1, 2):
        raise AllocationError(f"penalty level must be 1 or 2, got {level}")
    if level == 2 and forging.kind.is_blue:
        raise AllocationError("blue-chip forgings take no penalty level")
    z = forging_requirement_table(inst, tier1)[f, j]
    share = inst.forging_proportions()[f, _prop_index(inst, proportion)]
    unit = inst.effective_forging_unit_cost()[f, j, l]
    if not inst.forging_id(f).kind.is_blue and level == 2:
        unit = unit * inst.penalty.factor[l]
    unit = unit + inst.forging_transport_cost[f, j, l]
    return float(unit * z * share)


def evaluate(inst: SupplyChainInstance, alloc: Allocation) -> CostBreakdown:
    """Price an allocation.

    Penalty flags are computed from the realized blue-chip forging spend per
    Tier2 supplier; LLV assignments whose stored level disagrees with the
    flag are priced as stored and reported in ``level_violations`` rather
    than silently repaired.
    """
    J, L = inst.tier1_count, inst.tier2_count
    nPB, nFB = inst.n_parts_blue, inst.n_forgings_blue
    spend1 = np.zeros(J)
    spend2 = np.zeros(L)
    blue_spend2 = np.zeros(L)
    mach_blue = mach_llv = forge_blue = forge_llv = 0.0
    forbidden: list[tuple] = []
    violations: list[tuple] = []

    tier1 = None
    if alloc.tier1 is not None:
        tier1 = _check_tier1(inst, alloc.tier1)
        unit = inst.effective_machining_unit_cost() + inst.machining_transport_cost
        qty = inst.part_quantities()
        cannot = inst.cannot_make_tier1_mask()
        rows = np.arange(inst.n_parts)
        for prop in range(inst.n_proportions):
            sel = tier1[:, prop]
            cost = unit[rows, sel] * qty[:, prop]
            mach_blue += float(cost[:nPB].sum())
            mach_llv += float(cost[nPB:].sum())
            np.add.at(spend1, sel, cost)
            # zero-quantity picks never pay the prohibitive price, skip them
            for p in np.where(cannot[rows, sel] & (qty[:, prop] > MONEY_TOL))[0]:
                forbidden.append(("tier1", int(p), int(sel[p])))

    if alloc.tier2 is not None:
        if tier1 is None:
            raise AllocationError("tier2 assignments need the tier1 allocation for demand")
        tier2, level = _check_tier2(inst, alloc.tier2, alloc.tier2_level)
        demand = forging_requirement_table(inst, tier1)
        share = inst.forging_proportions()
        unit_base = inst.effective_forging_unit_cost()
        unit_tr = inst.forging_transport_cost
        cannot = inst.cannot_make_tier2_mask()
        f_idx = np.arange(inst.n_forgings)[:, None]
        j_idx = np.arange(J)[None, :]
        for prop in range(inst.n_proportions):
            sel = tier2[:, :, prop]
            base = unit_base[f_idx, j_idx, sel]
            tr = unit_tr[f_idx, j_idx, sel]
            flow = demand * share[:, prop][:, None]
            blue_cost = (base[:nFB] + tr[:nFB]) * flow[:nFB]
            forge_blue += float(blue_cost.sum())
            np.add.at(blue_spend2, sel[:nFB].ravel(), blue_cost.ravel())
            np.add.at(spend2, sel[:nFB].ravel(), blue_cost.ravel())
            for f, j in zip(*np.where(cannot[f_idx, j_idx, sel] & (flow > MONEY_TOL))):
                forbidden.append(("tier2", int(f), int(j), int(sel[f, j])))

        flags = blue_spend2 < inst.penalty.threshold - MONEY_TOL
        if inst.n_forgings > nFB:
            expected = np.where(flags, 2, 1)
            for prop in range(inst.n_proportions):
                sel = tier2[nFB:, :, prop]
                lev = level[nFB:, :, prop]
                base = unit_base[np.arange(nFB, inst.n_forgings)[:, None], j_idx, sel]
                tr = unit_tr[np.arange(nFB, inst.n_forgings)[:, None], j_idx, sel]
                gamma = np.where(lev == 2, inst.penalty.factor[sel], 1.0)
                flow = demand[nFB:] * share[nFB:, prop][:, None]
                llv_cost = (base * gamma + tr) * flow
                forge_llv += float(llv_cost.sum())
                np.add.at(spend2, sel.ravel(), llv_cost.ravel())
                # zero-flow slots price nothing, their level is meaningless
                wrong = (lev != expected[sel]) & (flow > MONEY_TOL)
                for f, j in zip(*np.where(wrong)):
                    violations.append((int(f) + nFB, int(j), prop))
    else:
        flags = blue_spend2 < inst.penalty.threshold - MONEY_TOL

    total = mach_blue + mach_llv + forge_blue + forge_llv
    return CostBreakdown(
        machining_blue=mach_blue,
        machining_llv=mach_llv,
        forging_blue=forge_blue,
        forging_llv=forge_llv,
        total=total,
        per_supplier_spend_tier1=spend1,
        per_supplier_spend_tier2=spend2,
        per_supplier_blue_forging_spend_tier2=blue_spend2,
        penalty_flags=flags,
        level_violations=violations,
        forbidden_selected=forbidden,
    )


def derive_levels(inst: SupplyChainInstance, tier1: np.ndarray, tier2: np.ndarray) -> np.ndarray:
    """Penalty levels consistent with the blue spend the tier2 choice realizes.

    Level 2 applies exactly to LLV assignments at suppliers whose blue-chip
    forging spend falls short of their threshold.
    """
    tier1 = _check_tier1(inst, tier1)
    tier2, _ = _check_tier2(inst, tier2, None)
    nFB = inst.n_forgings_blue
    demand = forging_requirement_table(inst, tier1)
    share = inst.forging_proportions()
    blue_spend = np.zeros(inst.tier2_count)
    f_idx = np.arange(inst.n_forgings)[:, None]
    j_idx = np.arange(inst.tier1_count)[None, :]
    unit_base = inst.effective_forging_unit_cost()
    unit_tr = inst.forging_transport_cost
    for prop in range(inst.n_proportions):
        sel = tier2[:nFB, :, prop]
        cost = (unit_base[f_idx[:nFB], j_idx, sel] + unit_tr[f_idx[:nFB], j_idx, sel]) \
            * demand[:nFB] * share[:nFB, prop][:, None]
        np.add.at(blue_spend, sel.ravel(), cost.ravel())
    flags = blue_spend < inst.penalty.threshold - MONEY_TOL
    levels = np.ones_like(tier2)
    if inst.n_forgings > nFB:
        levels[nFB:] = np.where(flags[tier2[nFB:]], 2, 1)
    return levels


def scoped_objective(kind: str, breakdown: CostBreakdown) -> float:
    """The part of a breakdown a given model kind optimizes."""
    if kind == "machinist":
        return breakdown.machining_blue + breakdown.machining_llv
    if kind == "forger":
        return breakdown.forging_blue + breakdown.forging_llv
    if kind in ("integrated", "integrated-linearized", "two-phase"):
        return breakdown.total
    raise ValueError(f"unknown model kind {kind!r}")


def _prop_index(inst: SupplyChainInstance, proportion: int) -> int:
    if proportion not in range(1, inst.n_proportions + 1):
        raise AllocationError(
            f"proportion {proportion} invalid for {inst.sourcing.mode.value} sourcing")
    return proportion - 1


def _check_supplier(idx: int, count: int, tier: str) -> None:
    if not (0 <= idx < count):
        raise AllocationError(f"unknown {tier} supplier {idx}")


def _check_tier1(inst: SupplyChainInstance, tier1: np.ndarray) -> np.ndarray:
    tier1 = np.asarray(tier1, dtype=np.int64)
    expected = (inst.n_parts, inst.n_proportions)
    if tier1.shape != expected:
        raise AllocationError(f"tier1 allocation must have shape {expected}, got {tier1.shape}")
    if tier1.size and (tier1.min() < 0 or tier1.max() >= inst.tier1_count):
        raise AllocationError("tier1 allocation references an unknown supplier")
    return tier1


def _check_tier2(
    inst: SupplyChainInstance, tier2: np.ndarray, level: np.ndarray | None
) -> tuple[np.ndarray, np.ndarray]:
    tier2 = np.asarray(tier2, dtype=np.int64)
    expected = (inst.n_forgings, inst.tier1_count, inst.n_proportions)
    if tier2.shape != expected:
        raise AllocationError(f"tier2 allocation must have shape {expected}, got {tier2.shape}")
    if tier2.size and (tier2.min() < 0 or tier2.max() >= inst.tier2_count):
        raise AllocationError("tier2 allocation references an unknown supplier")
    if level is None:
        level = np.ones(expected, dtype=np.int64)
    else:
        level = np.asarray(level, dtype=np.int64)
        if level.shape != expected:
            raise AllocationError(f"tier2 levels must have shape {expected}, got {level.shape}")
        if level.size and not np.all((level == 1) | (level == 2)):
            raise AllocationError("tier2 levels must be 1 or 2")
        if inst.n_forgings_blue and np.any(level[:inst.n_forgings_blue] != 1):
            raise AllocationError("blue-chip forgings take no penalty level")
    return tier2, level
