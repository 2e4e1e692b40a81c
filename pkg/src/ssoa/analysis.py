"""Desk-scale experiment drivers: sourcing-ratio sweeps, penalty
sensitivity, and solver comparisons.

Each sweep point re-solves exactly and records both the cost and whether
the optimum avoided or absorbed the penalty; trend claims over a corpus
are reported as counts, not asserted, because they are data-dependent.
Plot-ready output is CSV only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import costs as costs_mod
from . import exact, milp
from .costs import Allocation
from .instance import PenaltyPolicy, SourcingMode, SsoaError, SupplyChainInstance
from .metaheuristics import AcoParams, GaParams, PsoParams, aco_solve, ga_solve, pso_solve


class AnalysisError(SsoaError):
    pass


@dataclass
class SweepPoint:
    value: float
    total_cost: float | None
    status: str
    penalty_flags: list[bool] = field(default_factory=list)
    penalized: bool | None = None  # designated supplier absorbed the penalty
    error: str | None = None


@dataclass
class SweepResult:
    axis: str
    points: list[SweepPoint]

    def to_csv(self) -> str:
        lines = [f"{self.axis},total_cost,status,penalized,penalty_flags"]
        for p in self.points:
            flags = ";".join("1" if f else "0" for f in p.penalty_flags)
            pen = "" if p.penalized is None else ("1" if p.penalized else "0")
            cost = "" if p.total_cost is None else repr(p.total_cost)
            lines.append(f"{p.value!r},{cost},{p.status},{pen},{flags}")
        return "\n".join(lines) + "\n"


def solve_exact(inst: SupplyChainInstance, kind: str,
                 limits: exact.SolveLimits | None) -> tuple[exact.SolveReport, Allocation | None]:
    """One exact desk-scale solve of the given kind, returning the full
    allocation (for forger kind, phase one is solved first)."""
    if kind == "machinist":
        report = exact.solve_bb(milp.build_machinist(inst), limits, inst)
        return report, report.allocation
    if kind == "forger":
        phase1 = exact.solve_bb(milp.build_machinist(inst), limits, inst)
        if phase1.status not in (exact.OPTIMAL, exact.FEASIBLE):
            return phase1, None
        tier1 = phase1.allocation.tier1
        report = exact.solve_bb(milp.build_forger(inst, tier1), limits, inst,
                                tier1_base=tier1)
        return report, report.allocation
    if kind == "integrated":
        report = exact.solve_bb(milp.build_integrated_linearized(inst), limits, inst)
        return report, report.allocation
    if kind == "two-phase":
        result = exact.solve_two_phase(inst, limits)
        if result.combined is None:
            failed = result.forger or result.machinist
            return failed, None
        merged = result.merged_allocation()
        report = exact.SolveReport(
            status=exact.OPTIMAL if result.machinist.status == exact.OPTIMAL
            and result.forger.status == exact.OPTIMAL else exact.FEASIBLE,
            objective=result.total,
            allocation=merged,
            relative_gap=float("nan"),
            nodes=result.machinist.nodes + result.forger.nodes,
            wall_time=result.machinist.wall_time + result.forger.wall_time,
            solver="two-phase",
            model_kind="two-phase",
        )
        return report, merged
    raise ValueError(f"unknown model kind {kind!r}")


def sweep_sourcing(
    inst: SupplyChainInstance,
    ratios: list[tuple[float, float]],
    kind: str = "machinist",
    limits: exact.SolveLimits | None = None,
) -> SweepResult:
    """Re-solve per first:second sourcing ratio; 100:0 runs the
    single-sourcing model."""
    points: list[SweepPoint] = []
    for first, second in ratios:
        if first + second != 100:
            raise AnalysisError(f"ratio {first}:{second} does not sum to 100")
        if not 0 < first <= 100 or second < 0:
            raise AnalysisError(f"ratio {first}:{second} out of range")
        if second == 0:
            variant = milp.with_sourcing(inst, SourcingMode.SINGLE)
        else:
            variant = milp.with_sourcing(inst, SourcingMode.DUAL, split=first / 100.0)
        try:
            report, alloc = solve_exact(variant, kind, limits)
        except SsoaError as error:
            points.append(SweepPoint(first, None, "Error", error=str(error)))
            continue
        if report.status not in (exact.OPTIMAL, exact.FEASIBLE) or alloc is None:
            points.append(SweepPoint(first, None, report.status))
            continue
        bd = costs_mod.evaluate(variant, alloc)
        points.append(SweepPoint(
            first, costs_mod.scoped_objective(kind, bd), report.status,
            penalty_flags=[bool(v) for v in bd.penalty_flags]))
    return SweepResult("first_proportion_percent", points)


def sweep_penalty(
    inst: SupplyChainInstance,
    which: str,
    values: list[float],
    supplier: int = 0,
    kind: str = "integrated",
    limits: exact.SolveLimits | None = None,
) -> SweepResult:
    """Vary one supplier's penalty factor or threshold and re-solve exactly.

    Records whether the optimum absorbed the penalty (flag set on the
    designated supplier) or paid to avoid it.
    """
    if which not in ("factor", "threshold"):
        raise AnalysisError(f"penalty sweep axis must be factor or threshold, got {which!r}")
    if not 0 <= supplier < inst.tier2_count:
        raise AnalysisError(f"unknown tier2 supplier {supplier}")
    points: list[SweepPoint] = []
    for value in values:
        if which == "factor" and value < 1.0:
            raise AnalysisError(f"penalty factor {value} below 1")
        if which == "threshold" and value < 0.0:
            raise AnalysisError(f"penalty threshold {value} below 0")
        variant = _with_penalty(inst, which, supplier, value)
        try:
            report, alloc = solve_exact(variant, kind, limits)
        except SsoaError as error:
            points.append(SweepPoint(value, None, "Error", error=str(error)))
            continue
        if report.status not in (exact.OPTIMAL, exact.FEASIBLE) or alloc is None:
            points.append(SweepPoint(value, None, report.status))
            continue
        bd = costs_mod.evaluate(variant, alloc)
        points.append(SweepPoint(
            value, costs_mod.scoped_objective(kind, bd), report.status,
            penalty_flags=[bool(v) for v in bd.penalty_flags],
            penalized=bool(bd.penalty_flags[supplier])))
    return SweepResult(f"penalty_{which}", points)


def _with_penalty(inst: SupplyChainInstance, which: str, supplier: int,
                  value: float) -> SupplyChainInstance:
    threshold = inst.penalty.threshold.copy()
    factor = inst.penalty.factor.copy()
    if which == "factor":
        # gamma must stay strictly above 1; a value of exactly 1 means the
        # penalty is inert, realized as a factor epsilon above neutral
        factor[supplier] = max(value, 1.0 + 1e-12)
    else:
        threshold[supplier] = value
    return SupplyChainInstance(
        n_parts_blue=inst.n_parts_blue, n_parts_llv=inst.n_parts_llv,
        n_forgings_blue=inst.n_forgings_blue, n_forgings_llv=inst.n_forgings_llv,
        tier1_count=inst.tier1_count, tier2_count=inst.tier2_count,
        part_orders=inst.part_orders, yields=inst.yields,
        machining_unit_cost=inst.machining_unit_cost,
        machining_transport_cost=inst.machining_transport_cost,
        forging_unit_cost=inst.forging_unit_cost,
        forging_transport_cost=inst.forging_transport_cost,
        tier1_budget_min=inst.tier1_budget_min, tier1_budget_max=inst.tier1_budget_max,
        tier2_budget_min=inst.tier2_budget_min, tier2_budget_max=inst.tier2_budget_max,
        must_make_tier1=inst.must_make_tier1, must_make_tier2=inst.must_make_tier2,
        cannot_make_tier1=inst.cannot_make_tier1, cannot_make_tier2=inst.cannot_make_tier2,
        penalty=PenaltyPolicy(threshold, factor, inst.penalty.big_m, inst.penalty.epsilon),
        sourcing=inst.sourcing,
    )


# ---------------------------------------------------------------------------
# solver comparison


@dataclass
class CompareCell:
    solver: str
    mean_cost: float | None
    cost_over_best: float | None
    mean_time: float
    statuses: list[str]
    error: str | None = None


@dataclass
class CompareResult:
    kind: str
    cells: list[CompareCell]

    def to_csv(self) -> str:
        lines = ["solver,mean_cost,cost_over_best,mean_time_s,statuses"]
        for cell in self.cells:
            cost = "" if cell.mean_cost is None else repr(cell.mean_cost)
            ratio = "" if cell.cost_over_best is None else repr(cell.cost_over_best)
            lines.append(f"{cell.solver},{cost},{ratio},{cell.mean_time!r},"
                         f"{';'.join(cell.statuses)}")
        return "\n".join(lines) + "\n"


_HEURISTICS = {
    "ga": (ga_solve, GaParams),
    "pso": (pso_solve, PsoParams),
    "aco": (aco_solve, AcoParams),
}


def run_solver(
    inst: SupplyChainInstance,
    kind: str,
    solver: str,
    limits: exact.SolveLimits | None = None,
    seed: int = 0,
    heuristic_params=None,
    tier1_base: np.ndarray | None = None,
) -> exact.SolveReport:
    """Single dispatch point shared by the comparison table, the CLI, and
    the bidding service: exact/two-phase via branch-and-bound, otherwise a
    meta-heuristic capped by the wall-clock limit."""
    if solver == "exact":
        report, _ = solve_exact(inst, kind, limits)
        return report
    if solver in _HEURISTICS:
        run, params_cls = _HEURISTICS[solver]
        params = heuristic_params if heuristic_params is not None else params_cls()
        if kind == "two-phase":
            kind = "integrated"  # the chromosome already spans both layers
        base = tier1_base
        if kind == "forger" and base is None:
            phase1, _ = solve_exact(inst, "machinist", limits)
            if phase1.allocation is None:
                return phase1
            base = phase1.allocation.tier1
        wall_cap = limits.time_limit if limits is not None else None
        report, _trace = run(inst, params, seed=seed, kind=kind, tier1_base=base,
                             wall_clock_limit=wall_cap)
        return report
    raise AnalysisError(f"unknown solver {solver!r}")


def compare_solvers(
    inst: SupplyChainInstance,
    solvers: list[str],
    kind: str = "machinist",
    seeds: list[int] = (0,),
    limits: exact.SolveLimits | None = None,
    heuristic_params: dict | None = None,
    tier1_base: np.ndarray | None = None,
) -> CompareResult:
    """Run each solver on the instance and report mean cost, time, and
    cost over the best mean (1.0 marks the winner)."""
    heuristic_params = heuristic_params or {}
    cells: list[CompareCell] = []
    for solver in solvers:
        costs: list[float] = []
        times: list[float] = []
        statuses: list[str] = []
        error = None
        try:
            if solver == "exact":
                t0 = time.perf_counter()
                report, _ = solve_exact(inst, kind, limits)
                times.append(time.perf_counter() - t0)
                statuses.append(report.status)
                if report.objective is not None:
                    costs.append(report.objective)
            elif solver in _HEURISTICS:
                run, params_cls = _HEURISTICS[solver]
                params = heuristic_params.get(solver) or params_cls()
                base = tier1_base
                if kind == "forger" and base is None:
                    phase1, _ = solve_exact(inst, "machinist", limits)
                    base = phase1.allocation.tier1
                for seed in seeds:
                    t0 = time.perf_counter()
                    report, _trace = run(inst, params, seed=seed, kind=kind,
                                         tier1_base=base)
                    times.append(time.perf_counter() - t0)
                    statuses.append(report.status)
                    costs.append(report.objective)
            else:
                raise AnalysisError(f"unknown solver {solver!r}")
        except SsoaError as exc:
            error = str(exc)
        cells.append(CompareCell(
            solver=solver,
            mean_cost=float(np.mean(costs)) if costs else None,
            cost_over_best=None,
            mean_time=float(np.mean(times)) if times else 0.0,
            statuses=statuses,
            error=error,
        ))
    best = min((c.mean_cost for c in cells if c.mean_cost is not None), default=None)
    if best is not None and best > 0:
        for cell in cells:
            if cell.mean_cost is not None:
                cell.cost_over_best = cell.mean_cost / best
    return CompareResult(kind, cells)
