"""Exact solving at desk scale.

``solve_bb`` runs best-bound branch-and-bound over a compiled model with
the in-package LP relaxation; with a thread budget of one it is fully
deterministic.  ``brute_force`` enumerates allocation space directly and
exists as the independent oracle the model route is checked against: it
never touches the model compiler.  ``solve_two_phase`` chains the two
single-tier solves the way large conferences are actually run, which is
feasible but not guaranteed optimal.

Paper-scale forger/integrated models are out of reach here by design;
export them via the model compiler for an industrial solver instead.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from . import costs as costs_mod
from . import milp
from .costs import Allocation
from .instance import MONEY_TOL, SourcingMode, SsoaError, SupplyChainInstance
from .simplex import solve_lp

OPTIMAL = "Optimal"
FEASIBLE = "Feasible"
INFEASIBLE = "Infeasible"
TIME_LIMIT = "TimeLimit"

_INT_TOL = 1e-6


class SearchSpaceError(SsoaError):
    """Brute force refused: the enumeration space exceeds the cap."""


class SolveError(SsoaError):
    pass


@dataclass
class SolveLimits:
    time_limit: float = 300.0
    node_limit: int = 2_000_000
    gap_target: float = 1e-6
    threads: int = 1

    def __post_init__(self) -> None:
        if self.time_limit <= 0 or self.node_limit <= 0 or self.gap_target <= 0 \
                or self.threads <= 0:
            raise ValueError("all solve limits must be positive")


@dataclass
class SolveReport:
    status: str
    objective: float | None
    allocation: Allocation | None
    relative_gap: float
    nodes: int
    wall_time: float
    trace: list[tuple[float, float]] = field(default_factory=list)
    infeasible_rows: list[str] | None = None
    solver: str = "bb"
    model_kind: str = ""

    def to_doc(self) -> dict:
        gap = self.relative_gap
        return {
            "status": self.status,
            "objective": self.objective,
            "allocation": None if self.allocation is None else self.allocation.to_doc(),
            # JSON has no NaN/inf: unknown or unbounded gaps serialize as null
            "relative_gap": gap if gap is not None and np.isfinite(gap) else None,
            "nodes": self.nodes,
            "wall_time": self.wall_time,
            "trace": [[t, v] for t, v in self.trace],
            "infeasible_rows": self.infeasible_rows,
            "solver": self.solver,
            "model_kind": self.model_kind,
        }

    @staticmethod
    def from_doc(doc: dict) -> "SolveReport":
        gap = doc.get("relative_gap")
        return SolveReport(
            status=doc["status"],
            objective=doc["objective"],
            allocation=None if doc.get("allocation") is None
            else Allocation.from_doc(doc["allocation"]),
            relative_gap=float("nan") if gap is None else gap,
            nodes=doc.get("nodes", 0),
            wall_time=doc.get("wall_time", 0.0),
            trace=[(t, v) for t, v in doc.get("trace", [])],
            infeasible_rows=doc.get("infeasible_rows"),
            solver=doc.get("solver", "bb"),
            model_kind=doc.get("model_kind", ""),
        )


def solve_bb(
    model: milp.LinearModel,
    limits: SolveLimits | None = None,
    inst: SupplyChainInstance | None = None,
    tier1_base: np.ndarray | None = None,
) -> SolveReport:
    """Branch-and-bound with best-bound node selection and depth-first
    tie-breaking; branches on the most fractional binary."""
    limits = limits or SolveLimits()
    start = time.perf_counter()
    c, A, rel, b, lb, ub = model.to_arrays()
    binary = np.array([v.integrality == milp.BINARY for v in model.variables])
    n = c.size
    # branching priority: penalty indicators first (fixing one collapses a
    # big-M block), then assignments, product auxiliaries last
    priority = np.array([
        0 if v.name.startswith("pen_") else (2 if v.name.startswith("u_") else 1)
        for v in model.variables])
    # a penalty indicator at (D - eps)/M slips under a cost-scale integrality
    # tolerance while buying M worth of slack, so indicators get a far
    # tighter one
    int_tol = np.where(priority == 0, 1e-10, _INT_TOL)

    def decoded(x: np.ndarray) -> Allocation | None:
        if inst is None:
            return None
        return milp.decode_allocation(model, np.round(x), inst, tier1_base)

    root = solve_lp(c, A, rel, b, lb, ub)
    nodes = 1
    if root.status == "infeasible":
        labels = [model.constraints[i].label for i in (root.infeasible_rows or [])]
        return SolveReport(INFEASIBLE, None, None, float("inf"), nodes,
                           time.perf_counter() - start, [], labels,
                           model_kind=model.kind)
    if root.status in ("unbounded", "iteration_limit"):
        raise SolveError(f"LP relaxation failed at the root: {root.status}")

    incumbent_x: np.ndarray | None = None
    incumbent_obj = float("inf")
    trace: list[tuple[float, float]] = []

    counter = itertools.count()
    heap: list[tuple[float, int, np.ndarray, np.ndarray]] = []

    def push(bound: float, node_lb: np.ndarray, node_ub: np.ndarray) -> None:
        # min-heap on (bound, -order): best bound first, newest among ties
        heapq.heappush(heap, (bound, -next(counter), node_lb, node_ub))

    def integral(x: np.ndarray) -> bool:
        frac = np.abs(x - np.round(x))
        return bool(not binary.any() or np.all(frac[binary] <= int_tol[binary]))

    def accept(x: np.ndarray, obj: float) -> None:
        nonlocal incumbent_x, incumbent_obj
        if obj < incumbent_obj - 1e-12:
            incumbent_x = x.copy()
            incumbent_obj = obj
            trace.append((time.perf_counter() - start, obj))

    if integral(root.x):
        accept(root.x, root.objective)
    else:
        push(root.objective, lb, ub)

    status = OPTIMAL
    best_bound = root.objective
    while heap:
        if time.perf_counter() - start > limits.time_limit:
            status = TIME_LIMIT
            break
        if nodes >= limits.node_limit:
            status = TIME_LIMIT
            break
        bound, _, node_lb, node_ub = heapq.heappop(heap)
        best_bound = bound
        if incumbent_obj < float("inf"):
            gap = (incumbent_obj - bound) / max(1.0, abs(incumbent_obj))
            if gap <= limits.gap_target:
                status = OPTIMAL
                break
        res = solve_lp(c, A, rel, b, node_lb, node_ub)
        nodes += 1
        if res.status == "infeasible":
            continue
        if res.status in ("unbounded", "iteration_limit"):
            raise SolveError(f"LP relaxation failed in the tree: {res.status}")
        if res.objective >= incumbent_obj - limits.gap_target * max(1.0, abs(incumbent_obj)):
            continue
        if integral(res.x):
            accept(res.x, res.objective)
            continue
        frac = np.where(binary, np.abs(res.x - np.round(res.x)), 0.0)
        cand = np.where(frac > int_tol)[0]
        order = np.lexsort((cand, -frac[cand], priority[cand]))
        var = int(cand[order[0]])
        down_ub = node_ub.copy()
        down_ub[var] = 0.0
        up_lb = node_lb.copy()
        up_lb[var] = 1.0
        push(res.objective, node_lb, down_ub)
        push(res.objective, up_lb, node_ub)

    wall = time.perf_counter() - start
    if incumbent_x is None:
        # a limit stop with no incumbent is the one true TimeLimit outcome
        final = TIME_LIMIT if status == TIME_LIMIT else INFEASIBLE
        return SolveReport(final, None, None, float("inf"), nodes, wall, trace,
                           model_kind=model.kind)

    open_bounds = [entry[0] for entry in heap]
    if status != OPTIMAL or heap:
        open_bounds.append(best_bound)
    gap = 0.0 if not open_bounds else \
        max(0.0, (incumbent_obj - min(open_bounds)) / max(1.0, abs(incumbent_obj)))
    final = OPTIMAL if gap <= limits.gap_target else FEASIBLE
    return SolveReport(
        status=final,
        objective=incumbent_obj,
        allocation=decoded(incumbent_x),
        relative_gap=gap,
        nodes=nodes,
        wall_time=wall,
        trace=trace,
        model_kind=model.kind,
    )


# ---------------------------------------------------------------------------
# exhaustive oracle


def brute_force(
    inst: SupplyChainInstance,
    kind: str,
    tier1_base: np.ndarray | None = None,
    space_limit: float = 1e7,
) -> SolveReport:
    """Enumerate allocation space and return the cheapest feasible candidate.

    Independent of the model compiler: structural rules (coverage, distinct
    dual suppliers) shape the enumeration, must-make and budget constraints
    are filtered explicitly, penalty levels are derived per candidate, and
    costs come from :func:`ssoa.costs.evaluate`.  Forbidden pairs stay in
    the space at their prohibitive price, mirroring how models treat them.
    """
    if kind not in ("machinist", "forger", "integrated"):
        raise ValueError(f"unknown model kind {kind!r}")
    start = time.perf_counter()
    props = inst.n_proportions

    part_opts = _assignment_options(inst.tier1_count, props)
    slot_opts = _assignment_options(inst.tier2_count, props)

    t1_space = float(len(part_opts)) ** inst.n_parts if kind != "forger" else 1.0
    free_slots, fixed_slots = _split_slots(inst, kind, tier1_base)
    t2_space = float(len(slot_opts)) ** len(free_slots) if kind != "machinist" else 1.0
    space = t1_space * t2_space
    if space > space_limit:
        raise SearchSpaceError(
            f"enumeration space {space:.3g} exceeds the cap {space_limit:.3g}")

    must1 = inst.must_make_tier1
    must2 = inst.must_make_tier2

    def tier1_candidates():
        if kind == "forger":
            yield np.asarray(tier1_base, dtype=np.int64)
            return
        for combo in itertools.product(range(len(part_opts)), repeat=inst.n_parts):
            tier1 = np.array([part_opts[i] for i in combo], dtype=np.int64) \
                if inst.n_parts else np.zeros((0, props), dtype=np.int64)
            if all(j in tier1[p] for p, j in must1):
                yield tier1

    def tier2_candidates():
        if kind == "machinist":
            yield None
            return
        base = np.zeros((inst.n_forgings, inst.tier1_count, props), dtype=np.int64)
        for (f, j), choice in fixed_slots.items():
            base[f, j] = choice
        for combo in itertools.product(range(len(slot_opts)), repeat=len(free_slots)):
            tier2 = base.copy()
            ok = True
            for (f, j), i in zip(free_slots, combo):
                tier2[f, j] = slot_opts[i]
            for f, j, l in must2:
                if l not in tier2[f, j]:
                    ok = False
                    break
            if ok:
                yield tier2

    best: tuple[float, Allocation] | None = None
    evaluated = 0
    for tier1 in tier1_candidates():
        for tier2 in tier2_candidates():
            levels = None
            if tier2 is not None:
                levels = costs_mod.derive_levels(inst, tier1, tier2)
            alloc = Allocation(tier1, tier2, levels)
            bd = costs_mod.evaluate(inst, alloc)
            evaluated += 1
            if not _within_budgets(inst, bd, kind):
                continue
            obj = costs_mod.scoped_objective(kind, bd)
            if best is None or obj < best[0] - 1e-12:
                best = (obj, alloc)

    wall = time.perf_counter() - start
    if best is None:
        return SolveReport(INFEASIBLE, None, None, float("inf"), evaluated, wall,
                           solver="brute_force", model_kind=kind)
    return SolveReport(OPTIMAL, best[0], best[1], 0.0, evaluated, wall,
                       trace=[(wall, best[0])], solver="brute_force", model_kind=kind)


def _assignment_options(count: int, props: int) -> list[tuple[int, ...]]:
    if props == 1:
        return [(j,) for j in range(count)]
    return [(a, b) for a in range(count) for b in range(count) if a != b]


def _split_slots(inst, kind, tier1_base):
    """Free vs pinned (forging, consumer) slots.

    Slots whose demand is zero under every machinist allocation cannot
    affect cost, budgets, or penalties; pin them to a deterministic valid
    choice so the space stays small.
    """
    if kind == "machinist":
        return [], {}
    props = inst.n_proportions
    total_demand = inst.yields.T.astype(np.float64) @ inst.part_orders.astype(np.float64)
    if kind == "forger":
        demand = costs_mod.forging_requirement_table(
            inst, np.asarray(tier1_base, dtype=np.int64))
    else:
        demand = np.broadcast_to(total_demand[:, None],
                                 (inst.n_forgings, inst.tier1_count))
    must_by_slot: dict[tuple[int, int], list[int]] = {}
    for f, j, l in inst.must_make_tier2:
        must_by_slot.setdefault((f, j), []).append(l)
    free: list[tuple[int, int]] = []
    fixed: dict[tuple[int, int], tuple[int, ...]] = {}
    for f in range(inst.n_forgings):
        for j in range(inst.tier1_count):
            if demand[f, j] > MONEY_TOL:
                free.append((f, j))
            else:
                forced = must_by_slot.get((f, j), [])
                rest = [l for l in range(inst.tier2_count) if l not in forced]
                choice = tuple((forced + rest)[:props])
                fixed[(f, j)] = choice
    return free, fixed


def _within_budgets(inst, bd, kind) -> bool:
    if kind != "forger":
        s1 = bd.per_supplier_spend_tier1
        if np.any(s1 > inst.tier1_budget_max + MONEY_TOL):
            return False
        if np.any(s1 < inst.tier1_budget_min - MONEY_TOL):
            return False
    if kind != "machinist":
        s2 = bd.per_supplier_spend_tier2
        if np.any(s2 > inst.tier2_budget_max + MONEY_TOL):
            return False
        if np.any(s2 < inst.tier2_budget_min - MONEY_TOL):
            return False
    return True


# ---------------------------------------------------------------------------
# two-phase decomposition


@dataclass
class TwoPhaseResult:
    machinist: SolveReport
    forger: SolveReport | None
    combined: costs_mod.CostBreakdown | None

    @property
    def total(self) -> float | None:
        return None if self.combined is None else self.combined.total

    def merged_allocation(self) -> Allocation | None:
        if self.machinist.allocation is None or self.forger is None \
                or self.forger.allocation is None:
            return None
        return Allocation(
            self.machinist.allocation.tier1,
            self.forger.allocation.tier2,
            self.forger.allocation.tier2_level,
        )


def solve_two_phase(
    inst: SupplyChainInstance,
    limits: SolveLimits | None = None,
) -> TwoPhaseResult:
    """Sequential machinist-then-forger solve.

    Feasible whenever both phases are, and its combined cost can exceed the
    integrated optimum because phase one never sees forging prices.
    """
    machinist_model = milp.build_machinist(inst)
    rep1 = solve_bb(machinist_model, limits, inst)
    if rep1.status not in (OPTIMAL, FEASIBLE) or rep1.allocation is None:
        return TwoPhaseResult(rep1, None, None)
    tier1 = rep1.allocation.tier1
    forger_model = milp.build_forger(inst, tier1)
    rep2 = solve_bb(forger_model, limits, inst, tier1_base=tier1)
    if rep2.status not in (OPTIMAL, FEASIBLE) or rep2.allocation is None:
        # phase-2 failure still reports the phase-1 allocation
        return TwoPhaseResult(rep1, rep2, None)
    merged = Allocation(tier1, rep2.allocation.tier2, rep2.allocation.tier2_level)
    combined = costs_mod.evaluate(inst, merged)
    return TwoPhaseResult(rep1, rep2, combined)
