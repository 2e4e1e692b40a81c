"""Shared fixture builders: hand instances and the tiny oracle corpus."""

from dataclasses import dataclass

import numpy as np

from ssoa.costs import Allocation, evaluate, forging_requirement_table
from ssoa.exact import brute_force
from ssoa.instance import (
    GeneratorConfig,
    PenaltyPolicy,
    SourcingMode,
    SourcingPolicy,
    SupplyChainInstance,
    generate_instance,
    validate_instance,
)


def build_instance(
    *,
    mode=SourcingMode.DUAL,
    n_parts_blue=1,
    n_parts_llv=0,
    n_forgings_blue=1,
    n_forgings_llv=0,
    tier1_count=2,
    tier2_count=2,
    orders=(100,),
    yields=None,
    mach_unit=None,
    mach_tr=None,
    forge_unit=None,
    forge_tr=None,
    split=0.7,
    threshold=0.0,
    factor=5.0,
    must1=(), must2=(), cannot1=(), cannot2=(),
    budget1=(0.0, 1e12), budget2=(0.0, 1e12),
    epsilon=1e-3,
):
    """Small hand-specified instance with convenient defaults."""
    nP = n_parts_blue + n_parts_llv
    nF = n_forgings_blue + n_forgings_llv
    J, L = tier1_count, tier2_count
    return SupplyChainInstance(
        n_parts_blue=n_parts_blue, n_parts_llv=n_parts_llv,
        n_forgings_blue=n_forgings_blue, n_forgings_llv=n_forgings_llv,
        tier1_count=J, tier2_count=L,
        part_orders=np.array(orders, dtype=np.int64),
        yields=np.full((nP, nF), 2, dtype=np.int64) if yields is None else np.asarray(yields),
        machining_unit_cost=np.full((nP, J), 10.0) if mach_unit is None
        else np.asarray(mach_unit, dtype=float),
        machining_transport_cost=np.full((nP, J), 2.0) if mach_tr is None
        else np.asarray(mach_tr, dtype=float),
        forging_unit_cost=np.full((nF, J, L), 4.0) if forge_unit is None
        else np.asarray(forge_unit, dtype=float),
        forging_transport_cost=np.full((nF, J, L), 1.0) if forge_tr is None
        else np.asarray(forge_tr, dtype=float),
        tier1_budget_min=np.broadcast_to(np.asarray(budget1[0], dtype=float), (J,)),
        tier1_budget_max=np.broadcast_to(np.asarray(budget1[1], dtype=float), (J,)),
        tier2_budget_min=np.broadcast_to(np.asarray(budget2[0], dtype=float), (L,)),
        tier2_budget_max=np.broadcast_to(np.asarray(budget2[1], dtype=float), (L,)),
        must_make_tier1=must1, must_make_tier2=must2,
        cannot_make_tier1=cannot1, cannot_make_tier2=cannot2,
        penalty=PenaltyPolicy(
            np.broadcast_to(np.asarray(threshold, dtype=float), (L,)),
            np.broadcast_to(np.asarray(factor, dtype=float), (L,)),
            epsilon=epsilon),
        sourcing=SourcingPolicy(mode, np.full(nP, split), np.full(nF, split)),
    )


@dataclass
class CorpusCase:
    name: str
    instance: SupplyChainInstance
    run_integrated: bool = True
    has_penalty: bool = False
    has_must_make: bool = False


def two_phase_gap_instance() -> SupplyChainInstance:
    """Machinist costs nearly tied, forging costs wildly consumer-dependent:
    phase one picks the hair-cheaper machinist and pays dearly downstream,
    so the decomposition is strictly worse than the integrated optimum."""
    return build_instance(
        mode=SourcingMode.SINGLE,
        n_parts_blue=1, n_forgings_blue=1,
        tier1_count=2, tier2_count=2,
        orders=(100,), yields=[[1]],
        mach_unit=[[10.0, 10.1]], mach_tr=[[0.0, 0.0]],
        forge_unit=[[[100.0, 100.0], [1.0, 1.0]]],
        forge_tr=np.zeros((1, 2, 2)),
    )


def must_make_sweep_instance() -> SupplyChainInstance:
    """Single sourcing is forced onto the expensive must-make supplier, so
    splitting the order beats 100:0."""
    return build_instance(
        mode=SourcingMode.SINGLE,
        tier1_count=2, orders=(100,),
        mach_unit=[[10.0, 100.0]], mach_tr=[[0.0, 0.0]],
        yields=[[1]],
        must1=[(0, 1)],
    )


def achievable_blue_spends(inst: SupplyChainInstance, supplier: int = 0,
                           cap: int = 2_000_000) -> np.ndarray:
    """Every blue-chip forging spend the supplier can realize, exactly.

    Enumerates machinist allocations and, per blue (forging, consumer)
    slot, the supplier's possible contribution (nothing, or the slot's
    first/second-proportion flow).  Only usable on tiny instances; refuses
    past ``cap`` combinations.
    """
    from ssoa.exact import _assignment_options

    props = inst.n_proportions
    part_opts = _assignment_options(inst.tier1_count, props)
    t1_space = len(part_opts) ** inst.n_parts
    nFB = inst.n_forgings_blue
    blue_slots = nFB * inst.tier1_count
    per_slot = props + 1  # stay out, or take one proportion
    if t1_space * (per_slot ** blue_slots) > cap:
        raise ValueError("instance too large for exact spend enumeration")

    import itertools

    unit = inst.effective_forging_unit_cost() + inst.forging_transport_cost
    share = inst.forging_proportions()
    spends: set[float] = set()
    for combo in itertools.product(range(len(part_opts)), repeat=inst.n_parts):
        tier1 = np.array([part_opts[i] for i in combo], dtype=np.int64) \
            if inst.n_parts else np.zeros((0, props), dtype=np.int64)
        demand = forging_requirement_table(inst, tier1)
        contributions = []
        for f in range(nFB):
            for j in range(inst.tier1_count):
                options = [0.0]
                for prop in range(props):
                    options.append(float(unit[f, j, supplier] * demand[f, j]
                                         * share[f, prop]))
                contributions.append(options)
        for picks in itertools.product(*contributions):
            spends.add(round(sum(picks), 9))
    return np.array(sorted(spends))


def threshold_between_spends(inst: SupplyChainInstance, percentile: float,
                             supplier: int = 0) -> float:
    """A threshold placed mid-gap between achievable spend levels, so the
    model's epsilon rule and the strict comparison agree on every
    candidate allocation."""
    spends = achievable_blue_spends(inst, supplier)
    if spends.size < 2:
        return float(spends[0] + 1.0) if spends.size else 1.0
    gaps = np.diff(spends)
    wide = np.where(gaps > 0.5)[0]
    if wide.size == 0:
        wide = np.array([int(np.argmax(gaps))])
    target = percentile * (spends.size - 1)
    pick = int(wide[np.argmin(np.abs(wide - target))])
    return float((spends[pick] + spends[pick + 1]) / 2.0)


def _with_penalty_threshold(inst: SupplyChainInstance, percentile: float) -> SupplyChainInstance:
    """Re-threshold one supplier between achievable blue-spend levels."""
    new_threshold = inst.penalty.threshold.copy()
    new_threshold[0] = threshold_between_spends(inst, percentile)
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
        penalty=PenaltyPolicy(new_threshold, inst.penalty.factor,
                              inst.penalty.big_m, inst.penalty.epsilon),
        sourcing=inst.sourcing,
    )


def _random_tier1(inst, rng):
    props = inst.n_proportions
    tier1 = np.zeros((inst.n_parts, props), dtype=np.int64)
    for p in range(inst.n_parts):
        choice = rng.choice(inst.tier1_count, size=props, replace=False)
        tier1[p] = choice
    return tier1


def _random_tier2(inst, rng):
    props = inst.n_proportions
    tier2 = np.zeros((inst.n_forgings, inst.tier1_count, props), dtype=np.int64)
    for f in range(inst.n_forgings):
        for j in range(inst.tier1_count):
            tier2[f, j] = rng.choice(inst.tier2_count, size=props, replace=False)
    return tier2


_CORPUS: list[CorpusCase] | None = None


def corpus() -> list[CorpusCase]:
    """Deterministic oracle corpus: >= 25 tiny instances mixing modes,
    penalties, must-make sets, and supplier counts, all small enough for
    exhaustive enumeration."""
    global _CORPUS
    if _CORPUS is not None:
        return _CORPUS
    cases: list[CorpusCase] = []

    def gen(name, *, seed, mode, n_pb=2, n_pl=1, n_fb=2, n_fl=1, j=2, l=2,
            must=0, cannot=0, threshold_pct=None, factor=5.0,
            run_integrated=True):
        cfg = GeneratorConfig(
            n_parts_blue=n_pb, n_parts_llv=n_pl,
            n_forgings_blue=n_fb, n_forgings_llv=n_fl,
            tier1_count=j, tier2_count=l,
            must_make_per_kind=must, cannot_make_per_kind=cannot,
            penalty_threshold=0.0 if threshold_pct is None else 1.0,
            penalty_factor=factor,
            mode=mode, seed=seed,
        )
        inst = generate_instance(cfg)
        if threshold_pct is not None:
            inst = _with_penalty_threshold(inst, threshold_pct)
        assert validate_instance(inst) == [], f"corpus case {name} invalid"
        cases.append(CorpusCase(
            name, inst,
            run_integrated=run_integrated,
            has_penalty=threshold_pct is not None,
            has_must_make=must > 0,
        ))

    S, D = SourcingMode.SINGLE, SourcingMode.DUAL
    # plain instances, both modes, 2 suppliers per tier
    gen("s_plain_a", seed=101, mode=S)
    gen("s_plain_b", seed=102, mode=S, n_pb=3, n_fb=3, n_fl=0)
    gen("d_plain_a", seed=103, mode=D)
    gen("d_plain_b", seed=104, mode=D, n_pb=3, n_pl=0, n_fb=2)
    # penalty active around the median achievable spend (dual cases stay
    # small: the linearized integrated model grows multiplicatively)
    gen("s_pen_mid", seed=105, mode=S, threshold_pct=0.5)
    gen("d_pen_mid", seed=106, mode=D, n_pb=2, n_pl=0, n_fb=1, threshold_pct=0.5)
    gen("s_pen_low", seed=107, mode=S, threshold_pct=0.25)
    gen("d_pen_high", seed=108, mode=D, n_pb=1, n_fb=1, threshold_pct=0.75, factor=3.0)
    gen("s_pen_llv2", seed=109, mode=S, n_fl=2, n_fb=1, threshold_pct=0.5)
    gen("d_pen_llv2", seed=110, mode=D, n_pb=1, n_fl=1, n_fb=1, threshold_pct=0.6)
    # must-make constraints
    gen("s_must", seed=111, mode=S, must=1)
    gen("d_must", seed=112, mode=D, must=1)
    gen("s_must2", seed=113, mode=S, must=2)
    gen("d_must2", seed=114, mode=D, must=2)
    # cannot-make pairs (need 3 suppliers per tier in dual mode; dual cases
    # keep few forging slots so ordered-pair enumeration stays in bounds)
    gen("s_cannot", seed=115, mode=S, j=3, l=3, cannot=1, run_integrated=False)
    gen("d_cannot", seed=116, mode=D, j=3, l=3, n_fb=1, cannot=1,
        run_integrated=False)
    # three suppliers, machinist/forger only (integrated space too large)
    gen("s_three", seed=117, mode=S, j=3, l=3, n_pb=3, run_integrated=False)
    gen("d_three", seed=118, mode=D, j=3, l=3, n_fb=1, run_integrated=False)
    gen("s_three_pen", seed=119, mode=S, j=3, l=3, threshold_pct=0.5,
        run_integrated=False)
    gen("d_three_must", seed=120, mode=D, j=3, l=3, n_fb=1, must=1,
        run_integrated=False)
    # four parts / four forgings at two suppliers
    gen("s_four", seed=121, mode=S, n_pb=3, n_pl=1, n_fb=3, n_fl=1,
        run_integrated=False)
    gen("d_four", seed=122, mode=D, n_pb=3, n_pl=1, n_fb=3, n_fl=1,
        run_integrated=False)
    # penalty + must-make together
    gen("s_pen_must", seed=123, mode=S, must=1, threshold_pct=0.5)
    gen("d_pen_must", seed=124, mode=D, n_pb=2, n_pl=0, n_fb=1, must=1,
        threshold_pct=0.5)
    # minimal items
    gen("s_mini", seed=125, mode=S, n_pb=1, n_pl=1, n_fb=1, n_fl=1)
    gen("d_mini", seed=126, mode=D, n_pb=1, n_pl=1, n_fb=1, n_fl=1)
    gen("s_blue_only", seed=127, mode=S, n_pl=0, n_fl=0)
    gen("d_blue_only", seed=128, mode=D, n_pl=0, n_fl=0)
    # constructed: the decomposition's blind spot
    gap_inst = two_phase_gap_instance()
    assert validate_instance(gap_inst) == []
    cases.append(CorpusCase("c_two_phase_gap", gap_inst))

    _CORPUS = cases
    return cases
