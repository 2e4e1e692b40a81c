"""Population meta-heuristics over the two-layer integer encoding.

One gene per (item, proportion) slot names the supplier taking that share:
the first layer covers part assignments, the second covers forging flows
per Tier1 consumer.  Penalty levels are never encoded; they are derived
from realized blue-chip spend during decoding, so every decoded allocation
is penalty-consistent by construction and the search space stays at the
per-slot gene counts.

All three solvers draw per-individual RNG streams from (seed, iteration,
slot) spawn keys, so results are independent of evaluation order and a
fixed seed reproduces runs bit-for-bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import costs as costs_mod
from . import instance as instance_mod
from .costs import Allocation
from .exact import FEASIBLE, SolveReport
from .instance import MONEY_TOL, SsoaError, SupplyChainInstance


class RepairError(SsoaError):
    """A chromosome cannot be made feasible; the message names the stuck
    constraint."""


@dataclass
class GaParams:
    population: int = 100
    generations: int = 50_000
    crossover_prob: float = 1.0
    mutation_prob: float = 0.001
    replacement_percent: float = 90.0
    tournament_size: int = 5

    def __post_init__(self):
        if not 0 < self.crossover_prob <= 1:
            raise ValueError("crossover_prob must lie in (0, 1]")
        if not 0 <= self.mutation_prob < 1:
            raise ValueError("mutation_prob must lie in [0, 1)")
        if self.tournament_size < 2:
            raise ValueError("tournament_size must be at least 2")
        if not 0 <= self.replacement_percent <= 100:
            raise ValueError("replacement_percent must lie in [0, 100]")


@dataclass
class PsoParams:
    swarm: int = 200
    inertia: float = 0.4
    cognitive: float = 3.0
    social: float = 1.0
    iterations: int = 50_000


@dataclass
class AcoParams:
    ants: int = 100
    alpha: float = 1.0
    beta: float = 1.5
    evaporation: float = 0.2
    deposit: float = 1e7
    iterations: int = 5_000
    tau_init_high: float = 1e-3
    tau_min: float = 1e-12

    def __post_init__(self):
        # full evaporation is allowed: the pheromone floor keeps sampling alive
        if not 0 < self.evaporation <= 1:
            raise ValueError("evaporation must lie in (0, 1]")


@dataclass
class Chromosome:
    """Two-layer integer genome; either layer may be empty depending on the
    model kind being solved."""

    tier1_genes: np.ndarray
    tier2_genes: np.ndarray

    def copy(self) -> "Chromosome":
        return Chromosome(self.tier1_genes.copy(), self.tier2_genes.copy())

    def flat(self) -> np.ndarray:
        return np.concatenate([self.tier1_genes, self.tier2_genes])


@dataclass
class ConvergenceTrace:
    """Best cost per iteration; ``relative`` divides by a supplied reference
    optimum when one is known, else stays empty."""

    entries: list[tuple[int, float, float | None]] = field(default_factory=list)

    def record(self, iteration: int, best: float, reference: float | None) -> None:
        rel = best / reference if reference else None
        self.entries.append((iteration, best, rel))

    def best_values(self) -> list[float]:
        return [b for _, b, _ in self.entries]

    def to_csv(self) -> str:
        lines = ["iter,best,relative"]
        for it, best, rel in self.entries:
            lines.append(f"{it},{best!r},{'' if rel is None else repr(rel)}")
        return "\n".join(lines) + "\n"


class Encoding:
    """Gene layout for one (instance, model kind) pair plus decode/repair."""

    def __init__(
        self,
        inst: SupplyChainInstance,
        kind: str = "integrated",
        tier1_base: np.ndarray | None = None,
    ) -> None:
        if kind not in ("machinist", "forger", "integrated"):
            raise ValueError(f"unknown model kind {kind!r}")
        if kind == "forger":
            if tier1_base is None:
                raise ValueError("forger-tier search needs the fixed machinist allocation")
            self.tier1_base = np.asarray(tier1_base, dtype=np.int64)
        else:
            self.tier1_base = None
        self.inst = inst
        self.kind = kind
        self.props = inst.n_proportions
        self.n_tier1_genes = self.props * inst.n_parts if kind != "forger" else 0
        self.n_tier2_genes = (self.props * inst.n_forgings * inst.tier1_count
                              if kind != "machinist" else 0)
        self.n_genes = self.n_tier1_genes + self.n_tier2_genes
        self.gene_options = np.concatenate([
            np.full(self.n_tier1_genes, inst.tier1_count, dtype=np.int64),
            np.full(self.n_tier2_genes, inst.tier2_count, dtype=np.int64),
        ]) if self.n_genes else np.zeros(0, dtype=np.int64)
        self._eligible1 = ~inst.cannot_make_tier1_mask()
        self._eligible2 = ~inst.cannot_make_tier2_mask()
        self._must1: dict[int, list[int]] = {}
        for p, j in inst.must_make_tier1:
            self._must1.setdefault(p, []).append(j)
        self._must2: dict[tuple[int, int], list[int]] = {}
        for f, j, l in inst.must_make_tier2:
            self._must2.setdefault((f, j), []).append(l)

    # -- genome plumbing -------------------------------------------------

    def split(self, genes: np.ndarray) -> Chromosome:
        return Chromosome(
            np.asarray(genes[:self.n_tier1_genes], dtype=np.int64),
            np.asarray(genes[self.n_tier1_genes:], dtype=np.int64),
        )

    def random_genes(self, rng: np.random.Generator) -> np.ndarray:
        if self.n_genes == 0:
            return np.zeros(0, dtype=np.int64)
        return rng.integers(0, self.gene_options)

    def decode(self, chrom: Chromosome) -> Allocation:
        inst = self.inst
        props = self.props
        if self.kind == "forger":
            tier1 = self.tier1_base
        else:
            tier1 = chrom.tier1_genes.reshape(inst.n_parts, props)
        tier2 = None
        levels = None
        if self.kind != "machinist":
            tier2 = chrom.tier2_genes.reshape(inst.n_forgings, inst.tier1_count, props)
            levels = costs_mod.derive_levels(inst, tier1, tier2)
        return Allocation(tier1, tier2, levels)

    def cost(self, chrom: Chromosome) -> float:
        bd = costs_mod.evaluate(self.inst, self.decode(chrom))
        return costs_mod.scoped_objective(self.kind, bd)

    # -- repair ----------------------------------------------------------

    def repair(self, chrom: Chromosome, rng: np.random.Generator) -> Chromosome:
        """Make the genome feasible: range, eligibility, must-make,
        distinct dual suppliers, then budgets; already-feasible genomes come
        back unchanged."""
        out = chrom.copy()
        if self.n_tier1_genes:
            out.tier1_genes = np.mod(out.tier1_genes, self.inst.tier1_count)
            genes = out.tier1_genes.reshape(self.inst.n_parts, self.props)
            for p in range(self.inst.n_parts):
                self._repair_slot(
                    genes[p], self._must1.get(p, []),
                    np.where(self._eligible1[p])[0], rng,
                    what=f"part {self.inst.part_id(p).label()}")
        if self.n_tier2_genes:
            out.tier2_genes = np.mod(out.tier2_genes, self.inst.tier2_count)
            genes = out.tier2_genes.reshape(
                self.inst.n_forgings, self.inst.tier1_count, self.props)
            slots = self._must2.keys() if self._fast_tier2_ok(genes) else \
                [(f, j) for f in range(self.inst.n_forgings)
                 for j in range(self.inst.tier1_count)]
            for f, j in slots:
                self._repair_slot(
                    genes[f, j], self._must2.get((f, j), []),
                    np.where(self._eligible2[f, j])[0], rng,
                    what=f"forging {self.inst.forging_id(f).label()} for tier1 {j}")
        self._repair_budgets(out, rng)
        return out

    def _fast_tier2_ok(self, genes: np.ndarray) -> bool:
        """True when every tier2 slot is already eligible and distinct, so
        only must-make slots need a pass."""
        inst = self.inst
        f_idx = np.arange(inst.n_forgings)[:, None, None]
        j_idx = np.arange(inst.tier1_count)[None, :, None]
        if not bool(self._eligible2[f_idx, j_idx, genes].all()):
            return False
        if self.props == 2 and bool((genes[:, :, 0] == genes[:, :, 1]).any()):
            return False
        for (f, j), musts in self._must2.items():
            for l in musts:
                if l not in genes[f, j]:
                    return False
        return True

    def _repair_slot(self, slot: np.ndarray, musts: list[int],
                     eligible: np.ndarray, rng: np.random.Generator, what: str) -> None:
        props = self.props
        if len(musts) > props:
            raise RepairError(f"{what}: {len(musts)} must-make suppliers for "
                              f"{props} proportion(s)")
        if len(eligible) < props:
            raise RepairError(f"{what}: only {len(eligible)} eligible suppliers")
        eligible_set = set(int(e) for e in eligible)
        ok = (all(int(s) in eligible_set for s in slot)
              and (props == 1 or slot[0] != slot[1])
              and all(m in slot for m in musts))
        if ok:
            return
        missing = [m for m in musts if m not in slot]
        for m in missing:
            free = [i for i in range(props) if slot[i] not in musts or
                    list(slot).count(slot[i]) > 1]
            i = int(free[rng.integers(0, len(free))]) if free else int(rng.integers(0, props))
            slot[i] = m
        used: set[int] = set()
        for i in range(props):
            value = int(slot[i])
            if value in eligible_set and value not in used:
                used.add(value)
                continue
            pool = [e for e in eligible_set if e not in used]
            if not pool:
                raise RepairError(f"{what}: no distinct eligible supplier left")
            pool.sort()
            slot[i] = pool[int(rng.integers(0, len(pool)))]
            used.add(int(slot[i]))

    def _repair_budgets(self, chrom: Chromosome, rng: np.random.Generator,
                        max_rounds: int = 200) -> None:
        inst = self.inst
        bound = instance_mod.cost_upper_bound(inst)
        loose1 = (inst.tier1_budget_min.max(initial=0.0) <= 0.0
                  and bool((inst.tier1_budget_max >= bound).all()))
        loose2 = (inst.tier2_budget_min.max(initial=0.0) <= 0.0
                  and bool((inst.tier2_budget_max >= bound).all()))
        if loose1 and loose2:
            return
        for _ in range(max_rounds):
            bd = costs_mod.evaluate(inst, self.decode(chrom))
            moved = False
            if self.kind != "forger" and self.n_tier1_genes:
                moved = self._shift_tier1_spend(chrom, bd, rng)
            if not moved and self.kind != "machinist" and self.n_tier2_genes:
                moved = self._shift_tier2_spend(chrom, bd, rng)
            if not moved:
                break
        bd = costs_mod.evaluate(inst, self.decode(chrom))
        stuck = self._budget_violation(bd)
        if stuck:
            raise RepairError(f"budget cannot be repaired: {stuck}")

    def _budget_violation(self, bd) -> str | None:
        inst = self.inst
        if self.kind != "forger":
            s1 = bd.per_supplier_spend_tier1
            over = np.where(s1 > inst.tier1_budget_max + MONEY_TOL)[0]
            under = np.where(s1 < inst.tier1_budget_min - MONEY_TOL)[0]
            if over.size:
                return f"tier1 supplier {int(over[0])} over budget"
            if under.size:
                return f"tier1 supplier {int(under[0])} under minimum budget"
        if self.kind != "machinist":
            s2 = bd.per_supplier_spend_tier2
            over = np.where(s2 > inst.tier2_budget_max + MONEY_TOL)[0]
            under = np.where(s2 < inst.tier2_budget_min - MONEY_TOL)[0]
            if over.size:
                return f"tier2 supplier {int(over[0])} over budget"
            if under.size:
                return f"tier2 supplier {int(under[0])} under minimum budget"
        return None

    def _shift_tier1_spend(self, chrom: Chromosome, bd, rng) -> bool:
        inst = self.inst
        props = self.props
        genes = chrom.tier1_genes.reshape(inst.n_parts, props)
        s1 = bd.per_supplier_spend_tier1
        over = np.where(s1 > inst.tier1_budget_max + MONEY_TOL)[0]
        under = np.where(s1 < inst.tier1_budget_min - MONEY_TOL)[0]
        cx = (inst.effective_machining_unit_cost()
              + inst.machining_transport_cost)
        qty = inst.part_quantities()
        must = {(p, j) for p, j in inst.must_make_tier1}
        if over.size:
            j = int(over[0])
            holders = [(p, k) for p in range(inst.n_parts) for k in range(props)
                       if genes[p, k] == j and (p, j) not in must]
            if not holders:
                return False
            sample = [holders[int(i)] for i in
                      rng.choice(len(holders), size=min(8, len(holders)), replace=False)]
            # greedy: move the costliest sampled assignment to its cheapest
            # eligible alternative
            sample.sort(key=lambda pk: (-cx[pk[0], j] * qty[pk[0], pk[1]], pk))
            for p, k in sample:
                banned = {int(genes[p, 1 - k])} if props == 2 else set()
                options = [jj for jj in np.where(self._eligible1[p])[0]
                           if jj != j and int(jj) not in banned]
                if not options:
                    continue
                options.sort(key=lambda jj: (cx[p, jj], jj))
                genes[p, k] = int(options[0])
                return True
            return False
        if under.size:
            j = int(under[0])
            movable = [(p, k) for p in range(inst.n_parts) for k in range(props)
                       if genes[p, k] != j and self._eligible1[p, j]
                       and (p, int(genes[p, k])) not in must
                       and (props == 1 or genes[p, 1 - k] != j)]
            if not movable:
                return False
            sample = [movable[int(i)] for i in
                      rng.choice(len(movable), size=min(8, len(movable)), replace=False)]
            sample.sort(key=lambda pk: (cx[pk[0], j] * qty[pk[0], pk[1]], pk))
            p, k = sample[0]
            genes[p, k] = j
            return True
        return False

    def _shift_tier2_spend(self, chrom: Chromosome, bd, rng) -> bool:
        inst = self.inst
        props = self.props
        genes = chrom.tier2_genes.reshape(inst.n_forgings, inst.tier1_count, props)
        s2 = bd.per_supplier_spend_tier2
        over = np.where(s2 > inst.tier2_budget_max + MONEY_TOL)[0]
        under = np.where(s2 < inst.tier2_budget_min - MONEY_TOL)[0]
        must = {(f, j, l) for f, j, l in inst.must_make_tier2}
        unit = inst.effective_forging_unit_cost() + inst.forging_transport_cost
        if over.size:
            l = int(over[0])
            holders = [(f, j, k)
                       for f in range(inst.n_forgings)
                       for j in range(inst.tier1_count)
                       for k in range(props)
                       if genes[f, j, k] == l and (f, j, l) not in must]
            if not holders:
                return False
            sample = [holders[int(i)] for i in
                      rng.choice(len(holders), size=min(8, len(holders)), replace=False)]
            sample.sort(key=lambda fjk: (-unit[fjk[0], fjk[1], l], fjk))
            for f, j, k in sample:
                banned = {int(genes[f, j, 1 - k])} if props == 2 else set()
                options = [ll for ll in np.where(self._eligible2[f, j])[0]
                           if ll != l and int(ll) not in banned]
                if not options:
                    continue
                options.sort(key=lambda ll: (unit[f, j, ll], ll))
                genes[f, j, k] = int(options[0])
                return True
            return False
        if under.size:
            l = int(under[0])
            movable = [(f, j, k)
                       for f in range(inst.n_forgings)
                       for j in range(inst.tier1_count)
                       for k in range(props)
                       if genes[f, j, k] != l and self._eligible2[f, j, l]
                       and (f, j, int(genes[f, j, k])) not in must
                       and (props == 1 or genes[f, j, 1 - k] != l)]
            if not movable:
                return False
            sample = [movable[int(i)] for i in
                      rng.choice(len(movable), size=min(8, len(movable)), replace=False)]
            sample.sort(key=lambda fjk: (unit[fjk[0], fjk[1], l], fjk))
            f, j, k = sample[0]
            genes[f, j, k] = l
            return True
        return False


def repair(
    inst: SupplyChainInstance,
    chrom: Chromosome,
    rng: np.random.Generator,
    kind: str = "integrated",
    tier1_base: np.ndarray | None = None,
) -> Chromosome:
    """Standalone repair entry point (see :meth:`Encoding.repair`)."""
    return Encoding(inst, kind, tier1_base).repair(chrom, rng)


def _slot_rng(seed: int, iteration: int, slot: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=(iteration, slot))))


def _to_report(kind: str, solver: str, best_cost: float, alloc: Allocation,
               evaluations: int, wall: float, trace: ConvergenceTrace) -> SolveReport:
    return SolveReport(
        status=FEASIBLE,
        objective=best_cost,
        allocation=alloc,
        relative_gap=float("nan"),
        nodes=evaluations,
        wall_time=wall,
        trace=[(0.0, best) for _, best, _ in trace.entries[-1:]],
        solver=solver,
        model_kind=kind,
    )


# ---------------------------------------------------------------------------
# genetic algorithm


def ga_solve(
    inst: SupplyChainInstance,
    params: GaParams,
    seed: int,
    kind: str = "integrated",
    tier1_base: np.ndarray | None = None,
    reference: float | None = None,
    wall_clock_limit: float | None = None,
) -> tuple[SolveReport, ConvergenceTrace]:
    """Elitist GA: tournament selection, uniform crossover, per-gene uniform
    mutation, feasibility repair before every evaluation."""
    enc = Encoding(inst, kind, tier1_base)
    start = time.perf_counter()
    evaluations = 0

    population: list[Chromosome] = []
    fitness: list[float] = []
    for i in range(params.population):
        rng_i = _slot_rng(seed, 0, i)
        chrom = enc.repair(enc.split(enc.random_genes(rng_i)), rng_i)
        population.append(chrom)
        fitness.append(enc.cost(chrom))
        evaluations += 1

    trace = ConvergenceTrace()
    order = np.argsort(fitness, kind="stable")
    population = [population[i] for i in order]
    fitness = [fitness[i] for i in order]
    trace.record(0, fitness[0], reference)

    n_offspring = int(round(params.replacement_percent / 100.0 * params.population))
    select_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=(1,))))

    for gen in range(1, params.generations + 1):
        if wall_clock_limit is not None and time.perf_counter() - start > wall_clock_limit:
            break
        children: list[Chromosome] = []
        child_fit: list[float] = []
        slot = 0
        while len(children) < n_offspring:
            rng_s = _slot_rng(seed, gen, slot)
            slot += 1
            i1 = _tournament(select_rng, fitness, params.tournament_size)
            i2 = _tournament(select_rng, fitness, params.tournament_size)
            g1 = population[i1].flat()
            g2 = population[i2].flat()
            if enc.n_genes and rng_s.random() < params.crossover_prob:
                mask = rng_s.random(enc.n_genes) < 0.5
                c1 = np.where(mask, g1, g2)
                c2 = np.where(mask, g2, g1)
            else:
                c1, c2 = g1.copy(), g2.copy()
            for genes in (c1, c2):
                if len(children) >= n_offspring:
                    break
                if enc.n_genes:
                    mutate = rng_s.random(enc.n_genes) < params.mutation_prob
                    if mutate.any():
                        genes[mutate] = rng_s.integers(0, enc.gene_options[mutate])
                child = enc.repair(enc.split(genes), rng_s)
                children.append(child)
                child_fit.append(enc.cost(child))
                evaluations += 1
        merged = population + children
        merged_fit = fitness + child_fit
        order = np.argsort(merged_fit, kind="stable")[:params.population]
        population = [merged[i] for i in order]
        fitness = [merged_fit[i] for i in order]
        trace.record(gen, fitness[0], reference)

    wall = time.perf_counter() - start
    best_alloc = enc.decode(population[0])
    report = _to_report(kind, "ga", fitness[0], best_alloc, evaluations, wall, trace)
    return report, trace


def _tournament(rng: np.random.Generator, fitness: list[float], size: int) -> int:
    contenders = rng.integers(0, len(fitness), size=size)
    best = int(contenders[0])
    for idx in contenders[1:]:
        if fitness[int(idx)] < fitness[best]:
            best = int(idx)
    return best


# ---------------------------------------------------------------------------
# particle swarm


def pso_solve(
    inst: SupplyChainInstance,
    params: PsoParams,
    seed: int,
    kind: str = "integrated",
    tier1_base: np.ndarray | None = None,
    reference: float | None = None,
    wall_clock_limit: float | None = None,
) -> tuple[SolveReport, ConvergenceTrace]:
    """Swarm search over continuous positions rounded to genes.

    Rounded positions are wrapped into supplier range, repaired, and priced;
    personal and swarm bests keep the continuous positions that produced the
    best repaired costs.
    """
    enc = Encoding(inst, kind, tier1_base)
    start = time.perf_counter()
    n = enc.n_genes
    hi = np.maximum(enc.gene_options.astype(np.float64) - 1.0, 0.0)
    init_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=(0,))))
    x = init_rng.uniform(0.0, 1.0, size=(params.swarm, n)) * hi[None, :]
    v = init_rng.uniform(-1.0, 1.0, size=(params.swarm, n)) * np.maximum(hi[None, :], 1.0)

    best_personal = x.copy()
    best_personal_cost = np.full(params.swarm, np.inf)
    best_global: np.ndarray | None = None
    best_global_cost = float("inf")
    best_chrom: Chromosome | None = None
    trace = ConvergenceTrace()
    evaluations = 0

    for k in range(1, params.iterations + 1):
        if wall_clock_limit is not None and time.perf_counter() - start > wall_clock_limit:
            break
        for i in range(params.swarm):
            rng_i = _slot_rng(seed, k, i)
            genes = np.mod(np.rint(x[i]).astype(np.int64), np.maximum(enc.gene_options, 1))
            chrom = enc.repair(enc.split(genes), rng_i)
            cost = enc.cost(chrom)
            evaluations += 1
            if cost < best_personal_cost[i]:
                best_personal_cost[i] = cost
                best_personal[i] = x[i]
            if cost < best_global_cost:
                best_global_cost = cost
                best_global = x[i].copy()
                best_chrom = chrom
        move_rng = _slot_rng(seed, k, params.swarm)
        for i in range(params.swarm):
            r1 = move_rng.random()
            r2 = move_rng.random()
            v[i] = (params.inertia * v[i]
                    + params.cognitive * r1 * (best_personal[i] - x[i])
                    + params.social * r2 * (best_global - x[i]))
            x[i] = x[i] + v[i]
        trace.record(k, best_global_cost, reference)

    wall = time.perf_counter() - start
    if best_chrom is None:
        # zero-iteration runs still need one sweep to report something
        rng_i = _slot_rng(seed, 0, 0)
        genes = np.mod(np.rint(x[0]).astype(np.int64), np.maximum(enc.gene_options, 1))
        best_chrom = enc.repair(enc.split(genes), rng_i)
        best_global_cost = enc.cost(best_chrom)
        trace.record(0, best_global_cost, reference)
    report = _to_report(kind, "pso", best_global_cost, enc.decode(best_chrom),
                        evaluations, wall, trace)
    return report, trace


# ---------------------------------------------------------------------------
# ant colony


def aco_solve(
    inst: SupplyChainInstance,
    params: AcoParams,
    seed: int,
    kind: str = "integrated",
    tier1_base: np.ndarray | None = None,
    reference: float | None = None,
    wall_clock_limit: float | None = None,
) -> tuple[SolveReport, ConvergenceTrace]:
    """Pheromone-guided construction over (slot, supplier) edges with
    visibility 1/cost, evaporation, and cost-proportional deposits."""
    enc = Encoding(inst, kind, tier1_base)
    start = time.perf_counter()
    n = enc.n_genes
    width = int(enc.gene_options.max(initial=1))
    options = enc.gene_options

    visibility = _aco_visibility(enc, width)
    init_rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(entropy=seed, spawn_key=(0,))))
    tau = init_rng.uniform(0.0, params.tau_init_high, size=(n, width))
    valid = np.arange(width)[None, :] < options[:, None]
    tau[~valid] = 0.0

    best_cost = float("inf")
    best_chrom: Chromosome | None = None
    trace = ConvergenceTrace()
    evaluations = 0

    for it in range(1, params.iterations + 1):
        if wall_clock_limit is not None and time.perf_counter() - start > wall_clock_limit:
            break
        probs = _aco_probabilities(tau, visibility, valid, params)
        tours: list[tuple[Chromosome, float, np.ndarray]] = []
        for k in range(params.ants):
            rng_k = _slot_rng(seed, it, k)
            genes = _sample_categorical(probs, rng_k)
            chrom = enc.repair(enc.split(genes), rng_k)
            cost = enc.cost(chrom)
            evaluations += 1
            tours.append((chrom, cost, chrom.flat()))
            if cost < best_cost:
                best_cost = cost
                best_chrom = chrom
        tau *= (1.0 - params.evaporation)
        rows = np.arange(n)
        for _, cost, genes in tours:
            if n:
                tau[rows, genes] += params.deposit / max(cost, 1e-9)
        np.clip(tau, params.tau_min, None, out=tau)
        tau[~valid] = 0.0
        trace.record(it, best_cost, reference)

    wall = time.perf_counter() - start
    if best_chrom is None:
        rng_k = _slot_rng(seed, 0, 0)
        best_chrom = enc.repair(enc.split(enc.random_genes(rng_k)), rng_k)
        best_cost = enc.cost(best_chrom)
        trace.record(0, best_cost, reference)
    report = _to_report(kind, "aco", best_cost, enc.decode(best_chrom),
                        evaluations, wall, trace)
    return report, trace


def _aco_visibility(enc: Encoding, width: int) -> np.ndarray:
    """Static per-edge attractiveness 1/unit-cost; constant slot scaling
    cancels in the per-slot normalization."""
    inst = enc.inst
    vis = np.zeros((enc.n_genes, width))
    row = 0
    if enc.n_tier1_genes:
        unit = inst.effective_machining_unit_cost() + inst.machining_transport_cost
        for p in range(inst.n_parts):
            for _prop in range(enc.props):
                vis[row, :inst.tier1_count] = 1.0 / np.maximum(unit[p], 1e-12)
                row += 1
    if enc.n_tier2_genes:
        unit = inst.effective_forging_unit_cost() + inst.forging_transport_cost
        for f in range(inst.n_forgings):
            for j in range(inst.tier1_count):
                for _prop in range(enc.props):
                    vis[row, :inst.tier2_count] = 1.0 / np.maximum(unit[f, j], 1e-12)
                    row += 1
    return vis


def _aco_probabilities(tau, visibility, valid, params: AcoParams) -> np.ndarray:
    weight = np.where(valid,
                      np.maximum(tau, params.tau_min) ** params.alpha
                      * np.maximum(visibility, 1e-300) ** params.beta,
                      0.0)
    totals = weight.sum(axis=1, keepdims=True)
    fallback = valid / np.maximum(valid.sum(axis=1, keepdims=True), 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(totals > 0, weight / totals, fallback)
    return probs


def _sample_categorical(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n, width = probs.shape
    if n == 0 or width == 1:
        return np.zeros(n, dtype=np.int64)
    cumulative = np.cumsum(probs, axis=1)
    draws = rng.random(n)[:, None]
    picks = (draws > cumulative[:, :-1]).sum(axis=1)
    return np.minimum(picks, width - 1).astype(np.int64)


# ---------------------------------------------------------------------------
# random-search tuning


@dataclass
class TuneTrial:
    params: dict
    mean_cost: float
    costs: list[float]


@dataclass
class TuneResult:
    best_params: dict
    best_mean_cost: float
    leaderboard: list[TuneTrial]


_ALGORITHMS = {"ga": (GaParams, ga_solve), "pso": (PsoParams, pso_solve),
               "aco": (AcoParams, aco_solve)}

_INT_PARAMS = {"population", "generations", "tournament_size", "swarm",
               "iterations", "ants"}


def tune(
    inst: SupplyChainInstance,
    algorithm: str,
    ranges: dict[str, tuple[float, float]],
    trials: int,
    seed: int,
    seeds_per_trial: int = 5,
    base_params=None,
    kind: str = "integrated",
    tier1_base: np.ndarray | None = None,
) -> TuneResult:
    """Uniform random search over the given parameter ranges, each trial
    averaged over several solver seeds; returns the argmin configuration."""
    if algorithm not in _ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not ranges:
        raise ValueError("ranges must not be empty")
    params_cls, solver = _ALGORITHMS[algorithm]
    base = base_params or params_cls()
    for name in ranges:
        if name not in base.__dataclass_fields__:
            raise ValueError(f"unknown {algorithm} parameter {name!r}")

    rng = np.random.Generator(np.random.PCG64(seed))
    leaderboard: list[TuneTrial] = []
    for t in range(trials):
        sampled = {}
        for name, (lo, hi) in sorted(ranges.items()):
            value = float(rng.uniform(lo, hi))
            if name in _INT_PARAMS:
                value = int(round(value))
            sampled[name] = value
        params = replace(base, **sampled)
        costs = []
        for s in range(seeds_per_trial):
            report, _ = solver(inst, params, seed=seed * 10_000 + t * 100 + s,
                               kind=kind, tier1_base=tier1_base)
            costs.append(report.objective)
        leaderboard.append(TuneTrial(sampled, float(np.mean(costs)), costs))
    best_idx = min(range(len(leaderboard)), key=lambda i: (leaderboard[i].mean_cost, i))
    best = leaderboard[best_idx]
    return TuneResult(best.params, best.mean_cost, leaderboard)
