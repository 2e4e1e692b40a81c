"""Model compiler checks: variable accounting, row schemas, plug-in
consistency between built models and the cost evaluator."""

import numpy as np
import pytest

from ssoa.costs import Allocation, derive_levels, evaluate, scoped_objective
from ssoa.instance import GeneratorConfig, SourcingMode, generate_instance
from ssoa.milp import (
    IntractableModelError,
    ModelBuildError,
    allocation_vector,
    build_forger,
    build_integrated_linearized,
    build_machinist,
    count_variables,
    decode_allocation,
    with_sourcing,
)

from .helpers import _random_tier1, _random_tier2, build_instance


PAPER_SCALE = GeneratorConfig().paper_scale()


class TestCountVariables:
    @pytest.mark.parametrize("kind,mode,expected", [
        ("machinist", "single", 100_000),
        ("machinist", "dual", 200_000),
        ("forger", "single", 3_500_020),
        ("forger", "dual", 7_000_020),
        ("integrated", "single", 3_600_020),
        ("integrated", "dual", 7_200_020),
    ])
    def test_model_totals_at_conference_scale(self, kind, mode, expected):
        count = count_variables(PAPER_SCALE, kind, mode)
        assert count.total == expected

    @pytest.mark.parametrize("kind,mode,expected", [
        ("machinist", "single", 2_000),
        ("machinist", "dual", 4_000),
        ("forger", "single", 150_000),
        ("forger", "dual", 300_000),
        ("integrated", "single", 152_000),
        ("integrated", "dual", 304_000),
    ])
    def test_chromosome_totals_at_conference_scale(self, kind, mode, expected):
        count = count_variables(PAPER_SCALE, kind, mode)
        assert count.ga_total == expected

    def test_zero_item_instance(self):
        cfg = GeneratorConfig(n_parts_blue=0, n_parts_llv=0,
                              n_forgings_blue=0, n_forgings_llv=0,
                              tier1_count=3, tier2_count=4,
                              must_make_per_kind=0)
        count = count_variables(cfg, "integrated")
        assert count.part_assign == 0
        assert count.forging_assign == 0
        assert count.penalty_indicators == 4
        assert count.total == 4

    def test_counts_match_built_models(self):
        inst = generate_instance(GeneratorConfig(
            n_parts_blue=2, n_parts_llv=1, n_forgings_blue=2, n_forgings_llv=1,
            tier1_count=2, tier2_count=2, must_make_per_kind=1, seed=9))
        m = build_machinist(inst)
        assert m.n_variables == count_variables(inst, "machinist").total
        tier1 = _random_tier1(inst, np.random.default_rng(0))
        f = build_forger(inst, tier1)
        assert f.n_variables == count_variables(inst, "forger").total
        count_i = count_variables(inst, "integrated")
        integrated = build_integrated_linearized(inst)
        assert integrated.n_variables == count_i.total + count_i.u_products


class TestMachinistModel:
    def test_one_part_two_suppliers_dual_shape(self):
        inst = build_instance()
        model = build_machinist(inst)
        assert model.n_variables == 4
        equalities = [r for r in model.constraints if r.relation == "="]
        pairwise = [r for r in model.constraints if r.label.startswith("one_prop")]
        assert len(equalities) == 2
        assert len(pairwise) == 2

    def test_must_make_row_emitted(self):
        inst = build_instance(tier1_count=3, must1=[(0, 2)])
        model = build_machinist(inst)
        must = [r for r in model.constraints if r.label == "must_pB0_j2"]
        assert len(must) == 1
        assert must[0].relation == "="

    def test_overloaded_must_make_rejected(self):
        inst = build_instance(tier1_count=3, must1=[(0, 0), (0, 1), (0, 2)])
        with pytest.raises(ModelBuildError):
            build_machinist(inst)
        single = build_instance(mode=SourcingMode.SINGLE, tier1_count=3,
                                must1=[(0, 0), (0, 1)])
        with pytest.raises(ModelBuildError):
            build_machinist(single)

    def test_budget_rows_skip_zero_lower(self):
        inst = build_instance()
        model = build_machinist(inst)
        assert not any(r.label.endswith("_min") for r in model.constraints)
        bounded = build_instance(budget1=(10.0, 500.0))
        model = build_machinist(bounded)
        assert any(r.label == "budget_t1_j0_min" for r in model.constraints)
        assert any(r.label == "budget_t1_j0_max" for r in model.constraints)


class TestForgerModel:
    def test_llv_variable_layout(self):
        # 1 LLV forging, 1 consumer, 2 suppliers, dual: 8 flow vars + 2 flags
        inst = build_instance(n_parts_blue=1, n_forgings_blue=0, n_forgings_llv=1,
                              tier1_count=1, tier2_count=2, yields=[[1]])
        model = build_forger(inst, np.array([[0, 0]]))  # note: 1 consumer
        assert model.n_variables == 8 + 2

    def test_penalty_rows_present(self):
        inst = build_instance(n_forgings_llv=1, yields=[[2, 1]], threshold=100.0)
        tier1 = np.array([[0, 1]])
        model = build_forger(inst, tier1)
        labels = {r.label for r in model.constraints}
        for l in range(2):
            assert f"pen_lo_l{l}" in labels
            assert f"pen_hi_l{l}" in labels
            assert f"pen_d1_l{l}" in labels
            assert f"pen_d2_l{l}" in labels

    def test_big_m_recorded_and_dominates(self):
        inst = build_instance(threshold=1000.0)
        model = build_forger(inst, np.array([[0, 1]]))
        big_m = model.metadata["big_m"]
        assert big_m > sum(v for v in model.objective.values() if v > 0)
        assert big_m > 1000.0


class TestIntegratedModel:
    def test_tiny_single_u_count(self):
        # 2 consumers, 2 suppliers, 1 blue part, 1 blue forging, single mode
        inst = build_instance(mode=SourcingMode.SINGLE, yields=[[1]])
        model = build_integrated_linearized(inst)
        u_vars = [v for v in model.variables if v.name.startswith("u_")]
        assert len(u_vars) == 4
        lin_rows = [r for r in model.constraints if r.label.startswith("lin_")]
        assert len(lin_rows) == 12

    def test_u_semantics_binary_corners(self):
        inst = build_instance(mode=SourcingMode.SINGLE, yields=[[1]])
        model = build_integrated_linearized(inst)
        # pick one u row set and check the three rows force the product
        (key, u_idx) = sorted(model.u_index.items())[0]
        f, j, l, d, py, p, px = key
        x_idx = model.x_index[(p, j, px)]
        y_idx = model.y_index[(f, j, l, d, py)]
        vec = np.zeros(model.n_variables)
        vec[x_idx] = 1.0
        vec[y_idx] = 1.0
        vec[u_idx] = 0.0  # x=1, y=1 forces u=1: lin_b row must fail
        assert any(lbl.startswith("lin_b") for lbl in model.constraint_violations(vec))
        vec[u_idx] = 1.0
        assert not any(lbl.startswith("lin_") and str(u_idx) in ""  # no lin violation
                       for lbl in model.constraint_violations(vec))
        vec[x_idx] = 0.0  # x=0 forces u=0
        assert any(lbl.startswith("lin_x") for lbl in model.constraint_violations(vec))

    def test_oversized_build_refused_before_allocation(self):
        inst = generate_instance(GeneratorConfig(
            n_parts_blue=3, n_parts_llv=1, n_forgings_blue=3, n_forgings_llv=1,
            tier1_count=3, tier2_count=2, must_make_per_kind=0, seed=4))
        with pytest.raises(IntractableModelError, match="cap"):
            build_integrated_linearized(inst, max_variables=50)

    def test_conference_scale_estimate_over_default_cap(self):
        # the closed-form estimate alone must trigger the refusal
        count = count_variables(PAPER_SCALE, "integrated", "dual")
        assert count.total + count.u_products > 200_000


class TestPlugInConsistency:
    """Random feasible allocations must satisfy every built row and price
    identically through the model objective and the evaluator."""

    @pytest.mark.parametrize("mode", [SourcingMode.SINGLE, SourcingMode.DUAL])
    @pytest.mark.parametrize("kind", ["machinist", "forger", "integrated"])
    def test_random_allocations(self, mode, kind):
        cfg = GeneratorConfig(
            n_parts_blue=2, n_parts_llv=1, n_forgings_blue=2, n_forgings_llv=1,
            tier1_count=2, tier2_count=2, must_make_per_kind=0,
            penalty_threshold=0.0, mode=mode, seed=21)
        inst = generate_instance(cfg)
        rng = np.random.default_rng(5)
        tier1_fixed = _random_tier1(inst, rng)
        if kind == "machinist":
            model = build_machinist(inst)
        elif kind == "forger":
            model = build_forger(inst, tier1_fixed)
        else:
            model = build_integrated_linearized(inst)
        for _ in range(40):
            tier1 = tier1_fixed if kind == "forger" else _random_tier1(inst, rng)
            tier2 = None if kind == "machinist" else _random_tier2(inst, rng)
            levels = None if tier2 is None else derive_levels(inst, tier1, tier2)
            alloc = Allocation(tier1, tier2, levels)
            vec = allocation_vector(model, inst, alloc)
            assert model.constraint_violations(vec) == []
            bd = evaluate(inst, alloc)
            assert model.objective_value(vec) == pytest.approx(
                scoped_objective(kind, bd), abs=1e-6, rel=1e-9)

    def test_decode_round_trip(self):
        inst = generate_instance(GeneratorConfig(
            n_parts_blue=2, n_parts_llv=1, n_forgings_blue=1, n_forgings_llv=1,
            tier1_count=2, tier2_count=2, must_make_per_kind=0, seed=33))
        rng = np.random.default_rng(7)
        tier1 = _random_tier1(inst, rng)
        tier2 = _random_tier2(inst, rng)
        levels = derive_levels(inst, tier1, tier2)
        alloc = Allocation(tier1, tier2, levels)
        model = build_integrated_linearized(inst)
        vec = allocation_vector(model, inst, alloc)
        back = decode_allocation(model, vec, inst)
        assert back.same_as(alloc)


class TestWithSourcing:
    def test_mode_switch(self):
        inst = build_instance()
        single = with_sourcing(inst, "single")
        assert single.sourcing.mode is SourcingMode.SINGLE
        assert single.n_proportions == 1
        assert inst.sourcing.mode is SourcingMode.DUAL

    def test_split_change(self):
        inst = build_instance()
        swapped = with_sourcing(inst, split=0.5)
        assert float(swapped.sourcing.part_split[0]) == 0.5
