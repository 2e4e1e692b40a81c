"""Domain model for the two-tier sourcing problem.

An instance describes finished parts machined by Tier1 suppliers and the
forgings those suppliers buy from Tier2.  Parts and forgings each come in
two commercial classes: blue-chip (current engine programmes, high volume)
and LLV (legacy, low cost / low volume).  Tier2 suppliers quote penalty
factors on LLV prices that trigger when their blue-chip order book stays
below a threshold.

Internally all per-item tables are dense numpy arrays indexed blue-first
(blue items occupy indices ``0..n_blue-1``, LLV items follow).  The public
API addresses items through :class:`ItemId` so callers never deal in flat
offsets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

SCHEMA_VERSION = 1

#: Absolute tolerance for all money comparisons.
MONEY_TOL = 1e-6

#: Multiplier applied to the largest genuine cost of a table to price
#: forbidden (cannot-make) assignments out of any optimum.
PROHIBITIVE_FACTOR = 1e3


class SsoaError(Exception):
    """Base class for all package errors."""


class SchemaError(SsoaError):
    """A document failed schema validation; the message names the field."""


class GeneratorError(SsoaError):
    """A generator config cannot produce a valid instance."""


class BidDeltaError(SsoaError):
    """A bid-round override addresses an unknown entry or an invalid value."""


class ItemKind(str, Enum):
    PART_BLUE = "part_blue"
    PART_LLV = "part_llv"
    FORGING_BLUE = "forging_blue"
    FORGING_LLV = "forging_llv"

    @property
    def is_part(self) -> bool:
        return self in (ItemKind.PART_BLUE, ItemKind.PART_LLV)

    @property
    def is_blue(self) -> bool:
        return self in (ItemKind.PART_BLUE, ItemKind.FORGING_BLUE)


@dataclass(frozen=True, order=True)
class ItemId:
    """A part or forging, addressed by class and per-class index."""

    kind: ItemKind
    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"negative item index: {self}")

    def label(self) -> str:
        prefix = {
            ItemKind.PART_BLUE: "pB",
            ItemKind.PART_LLV: "pL",
            ItemKind.FORGING_BLUE: "fB",
            ItemKind.FORGING_LLV: "fL",
        }[self.kind]
        return f"{prefix}{self.index}"


class SourcingMode(str, Enum):
    SINGLE = "single"
    DUAL = "dual"

    @property
    def proportions(self) -> int:
        return 2 if self is SourcingMode.DUAL else 1


@dataclass(frozen=True)
class SourcingPolicy:
    """Single vs dual sourcing, with per-item first-proportion shares.

    Splits are stored for every item regardless of mode so a policy can be
    switched between modes (e.g. by a sourcing-ratio sweep) without
    re-deriving data; they are only consulted in dual mode.
    """

    mode: SourcingMode
    part_split: np.ndarray    # float [n_parts], first-proportion share s
    forging_split: np.ndarray  # float [n_forgings]

    def __post_init__(self) -> None:
        for name, arr in (("part_split", self.part_split), ("forging_split", self.forging_split)):
            if self.mode is SourcingMode.DUAL and arr.size:
                if np.any(arr <= 0.0) or np.any(arr >= 1.0):
                    raise ValueError(f"{name}: dual-sourcing shares must lie strictly in (0, 1)")

    def with_mode(self, mode: SourcingMode) -> "SourcingPolicy":
        return SourcingPolicy(mode, self.part_split, self.forging_split)

    def with_uniform_split(self, share: float) -> "SourcingPolicy":
        return SourcingPolicy(
            self.mode,
            np.full_like(self.part_split, share),
            np.full_like(self.forging_split, share),
        )


@dataclass(frozen=True)
class PenaltyPolicy:
    """Tier2 penalty terms: threshold, LLV escalation factor, and the
    indicator-row constants used when the policy is compiled to a model."""

    threshold: np.ndarray  # float [tier2_count], blue-spend threshold per supplier
    factor: np.ndarray     # float [tier2_count], LLV price multiplier when short (> 1)
    big_m: float = 1e12
    epsilon: float = 1e-3


@dataclass(frozen=True)
class RoundRecord:
    """Provenance entry for one applied bid round (audit only)."""

    label: str
    entries: tuple


class SupplyChainInstance:
    """Immutable problem data for one sourcing conference.

    Bulk tables are dense ndarrays with parts/forgings laid out blue-first;
    ``part_id``/``forging_id`` translate flat offsets back to :class:`ItemId`.
    Arrays are marked read-only so instances can be shared across threads.
    """

    def __init__(
        self,
        *,
        n_parts_blue: int,
        n_parts_llv: int,
        n_forgings_blue: int,
        n_forgings_llv: int,
        tier1_count: int,
        tier2_count: int,
        part_orders: np.ndarray,
        yields: np.ndarray,
        machining_unit_cost: np.ndarray,
        machining_transport_cost: np.ndarray,
        forging_unit_cost: np.ndarray,
        forging_transport_cost: np.ndarray,
        tier1_budget_min: np.ndarray,
        tier1_budget_max: np.ndarray,
        tier2_budget_min: np.ndarray,
        tier2_budget_max: np.ndarray,
        must_make_tier1: Iterable[tuple[int, int]] = (),
        must_make_tier2: Iterable[tuple[int, int, int]] = (),
        cannot_make_tier1: Iterable[tuple[int, int]] = (),
        cannot_make_tier2: Iterable[tuple[int, int, int]] = (),
        penalty: PenaltyPolicy,
        sourcing: SourcingPolicy,
        provenance: tuple[RoundRecord, ...] = (),
    ) -> None:
        self.n_parts_blue = int(n_parts_blue)
        self.n_parts_llv = int(n_parts_llv)
        self.n_forgings_blue = int(n_forgings_blue)
        self.n_forgings_llv = int(n_forgings_llv)
        self.tier1_count = int(tier1_count)
        self.tier2_count = int(tier2_count)

        nP, nF, J, L = self.n_parts, self.n_forgings, self.tier1_count, self.tier2_count
        self.part_orders = _own(part_orders, (nP,), np.int64, "part_orders")
        self.yields = _own(yields, (nP, nF), np.int64, "yields")
        self.machining_unit_cost = _own(machining_unit_cost, (nP, J), np.float64, "machining_unit_cost")
        self.machining_transport_cost = _own(
            machining_transport_cost, (nP, J), np.float64, "machining_transport_cost")
        self.forging_unit_cost = _own(forging_unit_cost, (nF, J, L), np.float64, "forging_unit_cost")
        self.forging_transport_cost = _own(
            forging_transport_cost, (nF, J, L), np.float64, "forging_transport_cost")
        self.tier1_budget_min = _own(tier1_budget_min, (J,), np.float64, "tier1_budget_min")
        self.tier1_budget_max = _own(tier1_budget_max, (J,), np.float64, "tier1_budget_max")
        self.tier2_budget_min = _own(tier2_budget_min, (L,), np.float64, "tier2_budget_min")
        self.tier2_budget_max = _own(tier2_budget_max, (L,), np.float64, "tier2_budget_max")

        self.must_make_tier1 = tuple(sorted((int(p), int(j)) for p, j in must_make_tier1))
        self.must_make_tier2 = tuple(sorted((int(f), int(j), int(l)) for f, j, l in must_make_tier2))
        self.cannot_make_tier1 = tuple(sorted((int(p), int(j)) for p, j in cannot_make_tier1))
        self.cannot_make_tier2 = tuple(sorted((int(f), int(j), int(l)) for f, j, l in cannot_make_tier2))

        if penalty.threshold.shape != (L,) or penalty.factor.shape != (L,):
            raise ValueError("penalty arrays must have one entry per Tier2 supplier")
        self.penalty = PenaltyPolicy(
            _own(penalty.threshold, (L,), np.float64, "penalty.threshold"),
            _own(penalty.factor, (L,), np.float64, "penalty.factor"),
            float(penalty.big_m),
            float(penalty.epsilon),
        )
        if sourcing.part_split.shape != (nP,) or sourcing.forging_split.shape != (nF,):
            raise ValueError("sourcing split arrays must match item counts")
        self.sourcing = SourcingPolicy(
            sourcing.mode,
            _own(sourcing.part_split, (nP,), np.float64, "part_split"),
            _own(sourcing.forging_split, (nF,), np.float64, "forging_split"),
        )
        self.provenance = tuple(provenance)

        for p, j in self.must_make_tier1 + self.cannot_make_tier1:
            if not (0 <= p < nP and 0 <= j < J):
                raise ValueError(f"tier1 pair out of range: ({p}, {j})")
        for f, j, l in self.must_make_tier2 + self.cannot_make_tier2:
            if not (0 <= f < nF and 0 <= j < J and 0 <= l < L):
                raise ValueError(f"tier2 triple out of range: ({f}, {j}, {l})")

        # Forbidden assignments are priced, not removed: a prohibitive unit
        # cost makes them strictly dominated while keeping model shape fixed.
        self.prohibitive_machining_cost = _prohibitive(self.machining_unit_cost)
        self.prohibitive_forging_cost = _prohibitive(self.forging_unit_cost)

    # -- index helpers -------------------------------------------------

    @property
    def n_parts(self) -> int:
        return self.n_parts_blue + self.n_parts_llv

    @property
    def n_forgings(self) -> int:
        return self.n_forgings_blue + self.n_forgings_llv

    @property
    def n_proportions(self) -> int:
        return self.sourcing.mode.proportions

    def part_flat(self, item: ItemId) -> int:
        if item.kind is ItemKind.PART_BLUE:
            if item.index >= self.n_parts_blue:
                raise KeyError(f"unknown part {item.label()}")
            return item.index
        if item.kind is ItemKind.PART_LLV:
            if item.index >= self.n_parts_llv:
                raise KeyError(f"unknown part {item.label()}")
            return self.n_parts_blue + item.index
        raise KeyError(f"{item.label()} is not a part")

    def forging_flat(self, item: ItemId) -> int:
        if item.kind is ItemKind.FORGING_BLUE:
            if item.index >= self.n_forgings_blue:
                raise KeyError(f"unknown forging {item.label()}")
            return item.index
        if item.kind is ItemKind.FORGING_LLV:
            if item.index >= self.n_forgings_llv:
                raise KeyError(f"unknown forging {item.label()}")
            return self.n_forgings_blue + item.index
        raise KeyError(f"{item.label()} is not a forging")

    def part_id(self, flat: int) -> ItemId:
        if flat < self.n_parts_blue:
            return ItemId(ItemKind.PART_BLUE, flat)
        return ItemId(ItemKind.PART_LLV, flat - self.n_parts_blue)

    def forging_id(self, flat: int) -> ItemId:
        if flat < self.n_forgings_blue:
            return ItemId(ItemKind.FORGING_BLUE, flat)
        return ItemId(ItemKind.FORGING_LLV, flat - self.n_forgings_blue)

    # -- derived tables -------------------------------------------------

    def cannot_make_tier1_mask(self) -> np.ndarray:
        mask = getattr(self, "_cannot1", None)
        if mask is None:
            mask = np.zeros((self.n_parts, self.tier1_count), dtype=bool)
            for p, j in self.cannot_make_tier1:
                mask[p, j] = True
            mask.setflags(write=False)
            self._cannot1 = mask
        return mask

    def cannot_make_tier2_mask(self) -> np.ndarray:
        mask = getattr(self, "_cannot2", None)
        if mask is None:
            mask = np.zeros((self.n_forgings, self.tier1_count, self.tier2_count), dtype=bool)
            for f, j, l in self.cannot_make_tier2:
                mask[f, j, l] = True
            mask.setflags(write=False)
            self._cannot2 = mask
        return mask

    def effective_machining_unit_cost(self) -> np.ndarray:
        """Unit machining cost with forbidden pairs priced prohibitively."""
        eff = getattr(self, "_mach_eff", None)
        if eff is None:
            eff = self.machining_unit_cost.copy()
            eff[self.cannot_make_tier1_mask()] = self.prohibitive_machining_cost
            eff.setflags(write=False)
            self._mach_eff = eff
        return eff

    def effective_forging_unit_cost(self) -> np.ndarray:
        """Unit forging cost with forbidden triples priced prohibitively."""
        eff = getattr(self, "_forge_eff", None)
        if eff is None:
            eff = self.forging_unit_cost.copy()
            eff[self.cannot_make_tier2_mask()] = self.prohibitive_forging_cost
            eff.setflags(write=False)
            self._forge_eff = eff
        return eff

    def part_quantities(self) -> np.ndarray:
        """Ordered units per (part, proportion): s*Np and (1-s)*Np in dual
        mode, the full order in single mode.  Fractional values are kept."""
        orders = self.part_orders.astype(np.float64)
        if self.sourcing.mode is SourcingMode.DUAL:
            s = self.sourcing.part_split
            return np.stack([s * orders, (1.0 - s) * orders], axis=1)
        return orders[:, None]

    def forging_proportions(self) -> np.ndarray:
        """Share of each forging's requirement per proportion, [n_forgings, props]."""
        if self.sourcing.mode is SourcingMode.DUAL:
            s = self.sourcing.forging_split
            return np.stack([s, 1.0 - s], axis=1)
        return np.ones((self.n_forgings, 1))

    def fingerprint(self) -> str:
        import hashlib

        digest = hashlib.sha256(canonical_json(save_instance(self)).encode()).hexdigest()
        return digest[:16]

    # -- equality (provenance is audit metadata, excluded) ---------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SupplyChainInstance):
            return NotImplemented
        scalar = ("n_parts_blue", "n_parts_llv", "n_forgings_blue", "n_forgings_llv",
                  "tier1_count", "tier2_count",
                  "must_make_tier1", "must_make_tier2",
                  "cannot_make_tier1", "cannot_make_tier2")
        if any(getattr(self, a) != getattr(other, a) for a in scalar):
            return False
        arrays = ("part_orders", "yields", "machining_unit_cost", "machining_transport_cost",
                  "forging_unit_cost", "forging_transport_cost",
                  "tier1_budget_min", "tier1_budget_max", "tier2_budget_min", "tier2_budget_max")
        if any(not np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays):
            return False
        if self.sourcing.mode is not other.sourcing.mode:
            return False
        if not (np.array_equal(self.sourcing.part_split, other.sourcing.part_split)
                and np.array_equal(self.sourcing.forging_split, other.sourcing.forging_split)):
            return False
        return (np.array_equal(self.penalty.threshold, other.penalty.threshold)
                and np.array_equal(self.penalty.factor, other.penalty.factor)
                and self.penalty.big_m == other.penalty.big_m
                and self.penalty.epsilon == other.penalty.epsilon)

    def __repr__(self) -> str:
        return (f"SupplyChainInstance(parts={self.n_parts_blue}+{self.n_parts_llv}, "
                f"forgings={self.n_forgings_blue}+{self.n_forgings_llv}, "
                f"tier1={self.tier1_count}, tier2={self.tier2_count}, "
                f"mode={self.sourcing.mode.value})")


def _own(arr: np.ndarray, shape: tuple, dtype, name: str) -> np.ndarray:
    out = np.asarray(arr, dtype=dtype)
    if out.shape != shape:
        raise ValueError(f"{name}: expected shape {shape}, got {out.shape}")
    out = out.copy()
    out.setflags(write=False)
    return out


def _prohibitive(table: np.ndarray) -> float:
    if table.size == 0:
        return 0.0
    return PROHIBITIVE_FACTOR * float(table.max())


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    """One broken instance invariant; ``entity`` names the offender."""

    code: str
    entity: str
    message: str

    def __str__(self) -> str:
        return f"[{self.code}] {self.entity}: {self.message}"


def validate_instance(inst: SupplyChainInstance) -> list[Violation]:
    """Check every instance invariant; an empty list means the instance is sound."""
    out: list[Violation] = []
    props = inst.n_proportions

    def bad_values(name: str, arr: np.ndarray, allow_zero: bool = True) -> None:
        if arr.size == 0:
            return
        if not np.all(np.isfinite(arr)):
            out.append(Violation("non_finite", name, "contains non-finite values"))
        low = arr.min() if arr.size else 0
        if low < 0:
            out.append(Violation("negative", name, f"contains negative value {low}"))

    bad_values("part_orders", inst.part_orders)
    bad_values("yields", inst.yields)
    for name in ("machining_unit_cost", "machining_transport_cost",
                 "forging_unit_cost", "forging_transport_cost"):
        bad_values(name, getattr(inst, name))
    for name in ("tier1_budget_min", "tier1_budget_max", "tier2_budget_min", "tier2_budget_max"):
        bad_values(name, getattr(inst, name))

    for j in range(inst.tier1_count):
        if inst.tier1_budget_min[j] > inst.tier1_budget_max[j] + MONEY_TOL:
            out.append(Violation("budget_order", f"tier1 supplier {j}", "min budget exceeds max"))
    for l in range(inst.tier2_count):
        if inst.tier2_budget_min[l] > inst.tier2_budget_max[l] + MONEY_TOL:
            out.append(Violation("budget_order", f"tier2 supplier {l}", "min budget exceeds max"))

    overlap1 = set(inst.must_make_tier1) & set(inst.cannot_make_tier1)
    for p, j in sorted(overlap1):
        out.append(Violation("must_cannot_overlap",
                             f"part {inst.part_id(p).label()} / tier1 {j}",
                             "pair is in both must-make and cannot-make"))
    overlap2 = set(inst.must_make_tier2) & set(inst.cannot_make_tier2)
    for f, j, l in sorted(overlap2):
        out.append(Violation("must_cannot_overlap",
                             f"forging {inst.forging_id(f).label()} / tier1 {j} / tier2 {l}",
                             "triple is in both must-make and cannot-make"))

    eligible1 = (~inst.cannot_make_tier1_mask()).sum(axis=1)
    for p in range(inst.n_parts):
        if eligible1[p] < props:
            out.append(Violation("eligibility", f"part {inst.part_id(p).label()}",
                                 f"only {eligible1[p]} eligible tier1 suppliers, need {props}"))
    eligible2 = (~inst.cannot_make_tier2_mask()).sum(axis=2)
    for f in range(inst.n_forgings):
        for j in range(inst.tier1_count):
            if eligible2[f, j] < props:
                out.append(Violation(
                    "eligibility", f"forging {inst.forging_id(f).label()} for tier1 {j}",
                    f"only {eligible2[f, j]} eligible tier2 suppliers, need {props}"))

    # each item may be forced on at most one supplier per proportion
    must_per_part: dict[int, int] = {}
    for p, j in inst.must_make_tier1:
        must_per_part[p] = must_per_part.get(p, 0) + 1
    for p, count in sorted(must_per_part.items()):
        if count > props:
            out.append(Violation("must_make_overload", f"part {inst.part_id(p).label()}",
                                 f"{count} must-make suppliers but only {props} proportions"))
    must_per_slot: dict[tuple[int, int], int] = {}
    for f, j, l in inst.must_make_tier2:
        must_per_slot[(f, j)] = must_per_slot.get((f, j), 0) + 1
    for (f, j), count in sorted(must_per_slot.items()):
        if count > props:
            out.append(Violation("must_make_overload",
                                 f"forging {inst.forging_id(f).label()} for tier1 {j}",
                                 f"{count} must-make suppliers but only {props} proportions"))

    if inst.n_parts and inst.n_forgings:
        no_forging = np.where((inst.yields >= 1).sum(axis=1) == 0)[0]
        for p in no_forging:
            out.append(Violation("no_forging", f"part {inst.part_id(int(p)).label()}",
                                 "no forging with yield >= 1"))
    elif inst.n_parts and not inst.n_forgings:
        out.append(Violation("no_forging", "instance", "parts declared but no forgings exist"))

    if np.any(inst.penalty.factor <= 1.0):
        bad = int(np.argmax(inst.penalty.factor <= 1.0))
        out.append(Violation("penalty_factor", f"tier2 supplier {bad}",
                             f"penalty factor {inst.penalty.factor[bad]} must exceed 1"))
    if inst.penalty.epsilon <= 0:
        out.append(Violation("penalty_epsilon", "penalty", "epsilon must be positive"))
    if inst.penalty.big_m < cost_upper_bound(inst):
        out.append(Violation("big_m", "penalty",
                             f"big_m {inst.penalty.big_m:g} below the feasible cost bound "
                             f"{cost_upper_bound(inst):g}"))
    return out


def cost_upper_bound(inst: SupplyChainInstance) -> float:
    """Loose upper bound on any allocation's total cost, from genuine costs."""
    total = 0.0
    if inst.n_parts and inst.tier1_count:
        unit = inst.machining_unit_cost + inst.machining_transport_cost
        total += float((inst.part_orders * unit.max(axis=1)).sum())
    if inst.n_forgings and inst.tier1_count and inst.tier2_count:
        demand = inst.yields.T.astype(np.float64) @ inst.part_orders.astype(np.float64)
        unit = inst.forging_unit_cost.max(axis=(1, 2)) * inst.penalty.factor.max(initial=1.0) \
            + inst.forging_transport_cost.max(axis=(1, 2))
        total += float((demand * unit).sum())
    return total


# ---------------------------------------------------------------------------
# Serialization

_KIND_ORDER = [ItemKind.PART_BLUE, ItemKind.PART_LLV, ItemKind.FORGING_BLUE, ItemKind.FORGING_LLV]


def save_instance(inst: SupplyChainInstance) -> dict:
    """Render the instance as a self-describing, schema-versioned document."""
    return {
        "schema_version": SCHEMA_VERSION,
        "counts": {
            "part_blue": inst.n_parts_blue,
            "part_llv": inst.n_parts_llv,
            "forging_blue": inst.n_forgings_blue,
            "forging_llv": inst.n_forgings_llv,
            "tier1": inst.tier1_count,
            "tier2": inst.tier2_count,
        },
        "part_orders": inst.part_orders.tolist(),
        "yield": inst.yields.tolist(),
        "machining_unit_cost": inst.machining_unit_cost.tolist(),
        "machining_transport_cost": inst.machining_transport_cost.tolist(),
        "forging_unit_cost": inst.forging_unit_cost.tolist(),
        "forging_transport_cost": inst.forging_transport_cost.tolist(),
        "tier1_budget": {"min": inst.tier1_budget_min.tolist(),
                         "max": inst.tier1_budget_max.tolist()},
        "tier2_budget": {"min": inst.tier2_budget_min.tolist(),
                         "max": inst.tier2_budget_max.tolist()},
        "must_make_tier1": [_pair_doc(inst, p, j) for p, j in inst.must_make_tier1],
        "must_make_tier2": [_triple_doc(inst, f, j, l) for f, j, l in inst.must_make_tier2],
        "cannot_make_tier1": [_pair_doc(inst, p, j) for p, j in inst.cannot_make_tier1],
        "cannot_make_tier2": [_triple_doc(inst, f, j, l) for f, j, l in inst.cannot_make_tier2],
        "penalty": {
            "threshold": inst.penalty.threshold.tolist(),
            "factor": inst.penalty.factor.tolist(),
            "big_m": inst.penalty.big_m,
            "epsilon": inst.penalty.epsilon,
        },
        "sourcing": {
            "mode": inst.sourcing.mode.value,
            "part_split": inst.sourcing.part_split.tolist(),
            "forging_split": inst.sourcing.forging_split.tolist(),
        },
        "provenance": [
            {"label": r.label, "entries": [dict(e) for e in r.entries]} for r in inst.provenance
        ],
    }


def _pair_doc(inst: SupplyChainInstance, p: int, j: int) -> dict:
    item = inst.part_id(p)
    return {"kind": item.kind.value, "index": item.index, "tier1": j}


def _triple_doc(inst: SupplyChainInstance, f: int, j: int, l: int) -> dict:
    item = inst.forging_id(f)
    return {"kind": item.kind.value, "index": item.index, "tier1": j, "tier2": l}


def canonical_json(doc: dict) -> str:
    """Deterministic text rendering used for fingerprints and byte-identity."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def instance_to_json(inst: SupplyChainInstance) -> str:
    return canonical_json(save_instance(inst))


def load_instance(doc: dict | str) -> SupplyChainInstance:
    """Parse an instance document; raises :class:`SchemaError` naming the
    first missing or malformed field."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("document root must be an object")

    version = _need(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(f"schema_version: unsupported version {version!r}")
    counts = _need(doc, "counts")
    for key in ("part_blue", "part_llv", "forging_blue", "forging_llv", "tier1", "tier2"):
        _need(counts, key, f"counts.{key}")

    n_pb, n_pl = int(counts["part_blue"]), int(counts["part_llv"])
    n_fb, n_fl = int(counts["forging_blue"]), int(counts["forging_llv"])
    J, L = int(counts["tier1"]), int(counts["tier2"])
    nP, nF = n_pb + n_pl, n_fb + n_fl

    budget1 = _need(doc, "tier1_budget")
    budget2 = _need(doc, "tier2_budget")
    penalty_doc = _need(doc, "penalty")
    sourcing_doc = _need(doc, "sourcing")
    for key in ("threshold", "factor", "big_m", "epsilon"):
        _need(penalty_doc, key, f"penalty.{key}")
    for key in ("mode", "part_split", "forging_split"):
        _need(sourcing_doc, key, f"sourcing.{key}")
    try:
        mode = SourcingMode(sourcing_doc["mode"])
    except ValueError as exc:
        raise SchemaError(f"sourcing.mode: unknown mode {sourcing_doc['mode']!r}") from exc

    def load_pairs(key: str) -> list[tuple[int, int]]:
        pairs = []
        for i, entry in enumerate(_need(doc, key)):
            for k in ("kind", "index", "tier1"):
                _need(entry, k, f"{key}[{i}].{k}")
            item = ItemId(ItemKind(entry["kind"]), int(entry["index"]))
            pairs.append((_flat_part(item, n_pb, n_pl, f"{key}[{i}]"), int(entry["tier1"])))
        return pairs

    def load_triples(key: str) -> list[tuple[int, int, int]]:
        triples = []
        for i, entry in enumerate(_need(doc, key)):
            for k in ("kind", "index", "tier1", "tier2"):
                _need(entry, k, f"{key}[{i}].{k}")
            item = ItemId(ItemKind(entry["kind"]), int(entry["index"]))
            triples.append((_flat_forging(item, n_fb, n_fl, f"{key}[{i}]"),
                            int(entry["tier1"]), int(entry["tier2"])))
        return triples

    try:
        inst = SupplyChainInstance(
            n_parts_blue=n_pb, n_parts_llv=n_pl,
            n_forgings_blue=n_fb, n_forgings_llv=n_fl,
            tier1_count=J, tier2_count=L,
            part_orders=np.asarray(_need(doc, "part_orders"), dtype=np.int64).reshape(nP),
            yields=np.asarray(_need(doc, "yield"), dtype=np.int64).reshape(nP, nF),
            machining_unit_cost=np.asarray(
                _need(doc, "machining_unit_cost"), dtype=np.float64).reshape(nP, J),
            machining_transport_cost=np.asarray(
                _need(doc, "machining_transport_cost"), dtype=np.float64).reshape(nP, J),
            forging_unit_cost=np.asarray(
                _need(doc, "forging_unit_cost"), dtype=np.float64).reshape(nF, J, L),
            forging_transport_cost=np.asarray(
                _need(doc, "forging_transport_cost"), dtype=np.float64).reshape(nF, J, L),
            tier1_budget_min=np.asarray(_need(budget1, "min", "tier1_budget.min"), dtype=np.float64),
            tier1_budget_max=np.asarray(_need(budget1, "max", "tier1_budget.max"), dtype=np.float64),
            tier2_budget_min=np.asarray(_need(budget2, "min", "tier2_budget.min"), dtype=np.float64),
            tier2_budget_max=np.asarray(_need(budget2, "max", "tier2_budget.max"), dtype=np.float64),
            must_make_tier1=load_pairs("must_make_tier1"),
            must_make_tier2=load_triples("must_make_tier2"),
            cannot_make_tier1=load_pairs("cannot_make_tier1"),
            cannot_make_tier2=load_triples("cannot_make_tier2"),
            penalty=PenaltyPolicy(
                np.asarray(penalty_doc["threshold"], dtype=np.float64),
                np.asarray(penalty_doc["factor"], dtype=np.float64),
                float(penalty_doc["big_m"]),
                float(penalty_doc["epsilon"]),
            ),
            sourcing=SourcingPolicy(
                mode,
                np.asarray(sourcing_doc["part_split"], dtype=np.float64),
                np.asarray(sourcing_doc["forging_split"], dtype=np.float64),
            ),
            provenance=tuple(
                RoundRecord(r.get("label", ""), tuple(tuple(sorted(e.items())) for e in r.get("entries", [])))
                for r in doc.get("provenance", [])
            ),
        )
    except (ValueError, TypeError) as exc:
        raise SchemaError(str(exc)) from exc
    return inst


def _need(mapping, key: str, path: str | None = None):
    path = path or key
    if not isinstance(mapping, dict) or key not in mapping:
        raise SchemaError(f"{path}: required field missing")
    return mapping[key]


def _flat_part(item: ItemId, n_pb: int, n_pl: int, where: str) -> int:
    if item.kind is ItemKind.PART_BLUE and item.index < n_pb:
        return item.index
    if item.kind is ItemKind.PART_LLV and item.index < n_pl:
        return n_pb + item.index
    raise SchemaError(f"{where}: unknown part {item.label()}")


def _flat_forging(item: ItemId, n_fb: int, n_fl: int, where: str) -> int:
    if item.kind is ItemKind.FORGING_BLUE and item.index < n_fb:
        return item.index
    if item.kind is ItemKind.FORGING_LLV and item.index < n_fl:
        return n_fb + item.index
    raise SchemaError(f"{where}: unknown forging {item.label()}")


# ---------------------------------------------------------------------------
# Bid rounds


@dataclass(frozen=True)
class CostOverride:
    """One bid: a new unit value for a single cost-table entry."""

    table: str          # machining_unit_cost | machining_transport_cost |
                        # forging_unit_cost | forging_transport_cost
    item: ItemId
    tier1: int
    value: float
    tier2: int | None = None  # required for forging tables

    def key_doc(self) -> dict:
        doc = {"table": self.table, "kind": self.item.kind.value,
               "index": self.item.index, "tier1": self.tier1, "value": self.value}
        if self.tier2 is not None:
            doc["tier2"] = self.tier2
        return doc


_MACHINING_TABLES = ("machining_unit_cost", "machining_transport_cost")
_FORGING_TABLES = ("forging_unit_cost", "forging_transport_cost")


def apply_bid_round(
    inst: SupplyChainInstance,
    overrides: Sequence[CostOverride],
    label: str = "",
) -> SupplyChainInstance:
    """Return a new instance with the given cost entries replaced.

    The input instance is untouched; the round is appended to provenance.
    Every override must address an existing entry and carry a non-negative
    finite value, otherwise :class:`BidDeltaError` is raised and nothing is
    applied.
    """
    tables: dict[str, np.ndarray] = {}
    entries = []
    for i, ov in enumerate(overrides):
        if not np.isfinite(ov.value) or ov.value < 0:
            raise BidDeltaError(f"override {i}: value {ov.value!r} must be non-negative and finite")
        if ov.table in _MACHINING_TABLES:
            if not ov.item.kind.is_part:
                raise BidDeltaError(f"override {i}: {ov.item.label()} is not a part")
            try:
                p = inst.part_flat(ov.item)
            except KeyError as exc:
                raise BidDeltaError(f"override {i}: {exc.args[0]}") from exc
            if not (0 <= ov.tier1 < inst.tier1_count):
                raise BidDeltaError(f"override {i}: unknown tier1 supplier {ov.tier1}")
            if ov.tier2 is not None:
                raise BidDeltaError(f"override {i}: machining entries take no tier2 supplier")
            if ov.table not in tables:
                tables[ov.table] = getattr(inst, ov.table).copy()
            tables[ov.table][p, ov.tier1] = ov.value
        elif ov.table in _FORGING_TABLES:
            if ov.item.kind.is_part:
                raise BidDeltaError(f"override {i}: {ov.item.label()} is not a forging")
            try:
                f = inst.forging_flat(ov.item)
            except KeyError as exc:
                raise BidDeltaError(f"override {i}: {exc.args[0]}") from exc
            if not (0 <= ov.tier1 < inst.tier1_count):
                raise BidDeltaError(f"override {i}: unknown tier1 supplier {ov.tier1}")
            if ov.tier2 is None or not (0 <= ov.tier2 < inst.tier2_count):
                raise BidDeltaError(f"override {i}: unknown tier2 supplier {ov.tier2}")
            if ov.table not in tables:
                tables[ov.table] = getattr(inst, ov.table).copy()
            tables[ov.table][f, ov.tier1, ov.tier2] = ov.value
        else:
            raise BidDeltaError(f"override {i}: unknown cost table {ov.table!r}")
        entries.append(tuple(sorted(ov.key_doc().items())))

    record = RoundRecord(label, tuple(entries))
    return SupplyChainInstance(
        n_parts_blue=inst.n_parts_blue, n_parts_llv=inst.n_parts_llv,
        n_forgings_blue=inst.n_forgings_blue, n_forgings_llv=inst.n_forgings_llv,
        tier1_count=inst.tier1_count, tier2_count=inst.tier2_count,
        part_orders=inst.part_orders,
        yields=inst.yields,
        machining_unit_cost=tables.get("machining_unit_cost", inst.machining_unit_cost),
        machining_transport_cost=tables.get("machining_transport_cost", inst.machining_transport_cost),
        forging_unit_cost=tables.get("forging_unit_cost", inst.forging_unit_cost),
        forging_transport_cost=tables.get("forging_transport_cost", inst.forging_transport_cost),
        tier1_budget_min=inst.tier1_budget_min, tier1_budget_max=inst.tier1_budget_max,
        tier2_budget_min=inst.tier2_budget_min, tier2_budget_max=inst.tier2_budget_max,
        must_make_tier1=inst.must_make_tier1, must_make_tier2=inst.must_make_tier2,
        cannot_make_tier1=inst.cannot_make_tier1, cannot_make_tier2=inst.cannot_make_tier2,
        penalty=inst.penalty, sourcing=inst.sourcing,
        provenance=inst.provenance + (record,),
    )


def override_from_doc(doc: dict) -> CostOverride:
    """Build a :class:`CostOverride` from its document form."""
    for key in ("table", "kind", "index", "tier1", "value"):
        if key not in doc:
            raise BidDeltaError(f"override document: missing field {key!r}")
    try:
        kind = ItemKind(doc["kind"])
    except ValueError as exc:
        raise BidDeltaError(f"override document: unknown item kind {doc['kind']!r}") from exc
    return CostOverride(
        table=doc["table"],
        item=ItemId(kind, int(doc["index"])),
        tier1=int(doc["tier1"]),
        value=float(doc["value"]),
        tier2=int(doc["tier2"]) if "tier2" in doc and doc["tier2"] is not None else None,
    )


# ---------------------------------------------------------------------------
# Random generation


@dataclass(frozen=True)
class GeneratorConfig:
    """Recipe for a synthetic instance.

    Defaults reproduce the reference data recipe: orders uniform in
    [100, 500], yields in [1, 3], machining unit cost in [5000, 10000] with
    transport in [2, 100], forging unit cost in [1, 10] with transport in
    [1, 5], loose budgets (0, 1e12), five must-make picks per tier per item
    class, penalty factor 5 against a threshold of 1000.
    """

    n_parts_blue: int = 4
    n_parts_llv: int = 2
    n_forgings_blue: int = 4
    n_forgings_llv: int = 2
    tier1_count: int = 3
    tier2_count: int = 2
    order_range: tuple[int, int] = (100, 500)
    yield_range: tuple[int, int] = (1, 3)
    machining_cost_range: tuple[float, float] = (5000.0, 10000.0)
    machining_transport_range: tuple[float, float] = (2.0, 100.0)
    forging_cost_range: tuple[float, float] = (1.0, 10.0)
    forging_transport_range: tuple[float, float] = (1.0, 5.0)
    tier1_budget: tuple[float, float] = (0.0, 1e12)
    tier2_budget: tuple[float, float] = (0.0, 1e12)
    must_make_per_kind: int = 5
    cannot_make_per_kind: int = 0
    penalty_factor: float = 5.0
    penalty_threshold: float = 1000.0
    big_m: float = 1e12
    epsilon: float = 1e-3
    mode: SourcingMode = SourcingMode.DUAL
    split: float = 0.7
    seed: int = 0

    def paper_scale(self) -> "GeneratorConfig":
        """The full conference-scale configuration (used for variable
        accounting; generating its cost tables takes a few hundred MB)."""
        return replace(self, n_parts_blue=1500, n_parts_llv=500,
                       n_forgings_blue=2500, n_forgings_llv=500,
                       tier1_count=50, tier2_count=20)


_RETRY_LIMIT = 1000


def generate_instance(config: GeneratorConfig, seed: int | None = None) -> SupplyChainInstance:
    """Sample an instance from the config, deterministically per seed.

    The PRNG is numpy's PCG64; the draw order is fixed (orders, yields,
    machining costs, forging costs, cannot-make picks, must-make picks) so
    a (config, seed) pair always yields the same instance, bit for bit.
    """
    if seed is None:
        seed = config.seed
    _check_config(config)
    rng = np.random.Generator(np.random.PCG64(seed))

    nP = config.n_parts_blue + config.n_parts_llv
    nF = config.n_forgings_blue + config.n_forgings_llv
    J, L = config.tier1_count, config.tier2_count
    props = config.mode.proportions

    orders = rng.integers(config.order_range[0], config.order_range[1] + 1, size=nP)
    yields = rng.integers(config.yield_range[0], config.yield_range[1] + 1, size=(nP, nF))
    mach = rng.uniform(*config.machining_cost_range, size=(nP, J))
    mach_tr = rng.uniform(*config.machining_transport_range, size=(nP, J))
    forge = rng.uniform(*config.forging_cost_range, size=(nF, J, L))
    forge_tr = rng.uniform(*config.forging_transport_range, size=(nF, J, L))

    cannot1 = _sample_cannot_tier1(config, rng, props)
    cannot2 = _sample_cannot_tier2(config, rng, props)
    must1 = _sample_must_tier1(config, rng, props, cannot1)
    must2 = _sample_must_tier2(config, rng, props, cannot2)

    inst = SupplyChainInstance(
        n_parts_blue=config.n_parts_blue, n_parts_llv=config.n_parts_llv,
        n_forgings_blue=config.n_forgings_blue, n_forgings_llv=config.n_forgings_llv,
        tier1_count=J, tier2_count=L,
        part_orders=orders, yields=yields,
        machining_unit_cost=mach, machining_transport_cost=mach_tr,
        forging_unit_cost=forge, forging_transport_cost=forge_tr,
        tier1_budget_min=np.full(J, config.tier1_budget[0]),
        tier1_budget_max=np.full(J, config.tier1_budget[1]),
        tier2_budget_min=np.full(L, config.tier2_budget[0]),
        tier2_budget_max=np.full(L, config.tier2_budget[1]),
        must_make_tier1=must1, must_make_tier2=must2,
        cannot_make_tier1=cannot1, cannot_make_tier2=cannot2,
        penalty=PenaltyPolicy(
            np.full(L, config.penalty_threshold),
            np.full(L, config.penalty_factor),
            config.big_m, config.epsilon,
        ),
        sourcing=SourcingPolicy(
            config.mode,
            np.full(nP, config.split),
            np.full(nF, config.split),
        ),
    )
    return inst


def _check_config(config: GeneratorConfig) -> None:
    counts = (config.n_parts_blue, config.n_parts_llv, config.n_forgings_blue,
              config.n_forgings_llv, config.tier1_count, config.tier2_count)
    if any(c < 0 for c in counts):
        raise GeneratorError("counts must be non-negative")
    props = config.mode.proportions
    nP = config.n_parts_blue + config.n_parts_llv
    nF = config.n_forgings_blue + config.n_forgings_llv
    if nP and config.tier1_count < props:
        raise GeneratorError(
            f"{props}-proportion sourcing needs at least {props} tier1 suppliers")
    if nF and config.tier2_count < props:
        raise GeneratorError(
            f"{props}-proportion sourcing needs at least {props} tier2 suppliers")
    for name in ("order_range", "yield_range", "machining_cost_range",
                 "machining_transport_range", "forging_cost_range",
                 "forging_transport_range"):
        lo, hi = getattr(config, name)
        if hi < lo:
            raise GeneratorError(f"{name}: empty range ({lo}, {hi})")
    if nP and config.yield_range[1] < 1:
        raise GeneratorError("yield_range must allow a yield of at least 1")
    if not 0.0 < config.split < 1.0:
        raise GeneratorError("split must lie strictly in (0, 1)")
    if config.penalty_factor <= 1.0:
        raise GeneratorError("penalty_factor must exceed 1")


def _kind_ranges_parts(config: GeneratorConfig) -> list[tuple[int, int]]:
    return [(0, config.n_parts_blue),
            (config.n_parts_blue, config.n_parts_blue + config.n_parts_llv)]


def _kind_ranges_forgings(config: GeneratorConfig) -> list[tuple[int, int]]:
    return [(0, config.n_forgings_blue),
            (config.n_forgings_blue, config.n_forgings_blue + config.n_forgings_llv)]


def _sample_cannot_tier1(config, rng, props) -> list[tuple[int, int]]:
    picks: list[tuple[int, int]] = []
    per_part: dict[int, int] = {}
    for lo, hi in _kind_ranges_parts(config):
        if hi == lo:
            continue
        want, tries = config.cannot_make_per_kind, 0
        while want > 0:
            tries += 1
            if tries > _RETRY_LIMIT:
                raise GeneratorError("cannot-make sampling (tier1) exhausted retries; "
                                     "would break dual-sourcing eligibility")
            p = int(rng.integers(lo, hi))
            j = int(rng.integers(0, config.tier1_count))
            if (p, j) in picks:
                continue
            if config.tier1_count - (per_part.get(p, 0) + 1) < props:
                continue
            picks.append((p, j))
            per_part[p] = per_part.get(p, 0) + 1
            want -= 1
    return picks


def _sample_cannot_tier2(config, rng, props) -> list[tuple[int, int, int]]:
    picks: list[tuple[int, int, int]] = []
    per_slot: dict[tuple[int, int], int] = {}
    for lo, hi in _kind_ranges_forgings(config):
        if hi == lo:
            continue
        want, tries = config.cannot_make_per_kind, 0
        while want > 0:
            tries += 1
            if tries > _RETRY_LIMIT:
                raise GeneratorError("cannot-make sampling (tier2) exhausted retries; "
                                     "would break dual-sourcing eligibility")
            f = int(rng.integers(lo, hi))
            j = int(rng.integers(0, config.tier1_count))
            l = int(rng.integers(0, config.tier2_count))
            if (f, j, l) in picks:
                continue
            if config.tier2_count - (per_slot.get((f, j), 0) + 1) < props:
                continue
            picks.append((f, j, l))
            per_slot[(f, j)] = per_slot.get((f, j), 0) + 1
            want -= 1
    return picks


def _sample_must_tier1(config, rng, props, cannot) -> list[tuple[int, int]]:
    cannot_set = set(cannot)
    picks: list[tuple[int, int]] = []
    per_part: dict[int, int] = {}
    for lo, hi in _kind_ranges_parts(config):
        if hi == lo or config.tier1_count == 0:
            continue
        # each part hosts at most one must-make supplier per proportion
        want = min(config.must_make_per_kind, (hi - lo) * min(config.tier1_count, props))
        tries = 0
        while want > 0:
            tries += 1
            if tries > _RETRY_LIMIT:
                raise GeneratorError("must-make sampling (tier1) exhausted retries")
            p = int(rng.integers(lo, hi))
            j = int(rng.integers(0, config.tier1_count))
            if (p, j) in picks or (p, j) in cannot_set:
                continue
            if per_part.get(p, 0) + 1 > props:
                continue
            picks.append((p, j))
            per_part[p] = per_part.get(p, 0) + 1
            want -= 1
    return picks


def _sample_must_tier2(config, rng, props, cannot) -> list[tuple[int, int, int]]:
    cannot_set = set(cannot)
    picks: list[tuple[int, int, int]] = []
    per_slot: dict[tuple[int, int], int] = {}
    for lo, hi in _kind_ranges_forgings(config):
        if hi == lo or config.tier1_count == 0 or config.tier2_count == 0:
            continue
        want = min(config.must_make_per_kind,
                   (hi - lo) * config.tier1_count * min(config.tier2_count, props))
        tries = 0
        while want > 0:
            tries += 1
            if tries > _RETRY_LIMIT:
                raise GeneratorError("must-make sampling (tier2) exhausted retries")
            f = int(rng.integers(lo, hi))
            j = int(rng.integers(0, config.tier1_count))
            l = int(rng.integers(0, config.tier2_count))
            if (f, j, l) in picks or (f, j, l) in cannot_set:
                continue
            if per_slot.get((f, j), 0) + 1 > props:
                continue
            picks.append((f, j, l))
            per_slot[(f, j)] = per_slot.get((f, j), 0) + 1
            want -= 1
    return picks


def config_from_doc(doc: dict) -> GeneratorConfig:
    """Parse a generator config document (all fields optional)."""
    kwargs = {}
    fields = {f.name for f in GeneratorConfig.__dataclass_fields__.values()}
    for key, value in doc.items():
        if key not in fields:
            raise SchemaError(f"generator config: unknown field {key!r}")
        if key == "mode":
            value = SourcingMode(value)
        elif isinstance(getattr(GeneratorConfig, key), tuple):
            value = tuple(value)
        kwargs[key] = value
    return GeneratorConfig(**kwargs)
