"""GA / PSO / ACO behavior: repair rules, degenerate operators, elitism,
determinism, and tuning."""

import numpy as np
import pytest

from ssoa.costs import evaluate, scoped_objective
from ssoa.exact import brute_force
from ssoa.instance import GeneratorConfig, SourcingMode, generate_instance
from ssoa.metaheuristics import (
    AcoParams,
    Chromosome,
    Encoding,
    GaParams,
    PsoParams,
    RepairError,
    _aco_probabilities,
    aco_solve,
    ga_solve,
    pso_solve,
    repair,
    tune,
)

from .helpers import build_instance


def tiny_dual(**kw):
    base = dict(n_parts_blue=2, n_parts_llv=0, n_forgings_blue=1, n_forgings_llv=0,
                tier1_count=3, tier2_count=2, yields=[[1], [1]], orders=(100, 100))
    base.update(kw)
    return build_instance(**base)


class TestRepair:
    def test_dual_distinctness_enforced(self):
        inst = tiny_dual()
        enc = Encoding(inst, "machinist")
        rng = np.random.default_rng(0)
        chrom = Chromosome(np.array([2, 2, 0, 1]), np.zeros(0, dtype=np.int64))
        fixed = enc.repair(chrom, rng)
        genes = fixed.tier1_genes.reshape(2, 2)
        assert genes[0, 0] != genes[0, 1]
        assert genes[0, 0] == 2 or genes[0, 1] == 2  # one kept

    def test_must_make_supplier_installed(self):
        inst = tiny_dual(must1=[(0, 1)])
        enc = Encoding(inst, "machinist")
        chrom = Chromosome(np.array([0, 2, 0, 2]), np.zeros(0, dtype=np.int64))
        fixed = enc.repair(chrom, np.random.default_rng(1))
        assert 1 in fixed.tier1_genes.reshape(2, 2)[0]

    def test_cannot_make_supplier_evicted(self):
        inst = tiny_dual(cannot1=[(0, 0)])
        enc = Encoding(inst, "machinist")
        chrom = Chromosome(np.array([0, 1, 0, 1]), np.zeros(0, dtype=np.int64))
        fixed = enc.repair(chrom, np.random.default_rng(2))
        assert 0 not in fixed.tier1_genes.reshape(2, 2)[0]

    def test_feasible_chromosome_is_fixed_point(self):
        inst = tiny_dual(must1=[(1, 0)])
        enc = Encoding(inst, "machinist")
        chrom = Chromosome(np.array([1, 2, 0, 1]), np.zeros(0, dtype=np.int64))
        fixed = enc.repair(chrom, np.random.default_rng(3))
        assert np.array_equal(fixed.tier1_genes, chrom.tier1_genes)

    def test_out_of_range_gene_wrapped(self):
        inst = tiny_dual()
        fixed = repair(inst, Chromosome(np.array([7, 1, 0, 4]), np.zeros(0, dtype=np.int64)),
                       np.random.default_rng(4), kind="machinist")
        assert fixed.tier1_genes.max() < 3

    def test_unrepairable_must_make_reported(self):
        inst = tiny_dual(must1=[(0, 0), (0, 1), (0, 2)])
        with pytest.raises(RepairError, match="must-make"):
            repair(inst, Chromosome(np.array([0, 1, 0, 1]), np.zeros(0, dtype=np.int64)),
                   np.random.default_rng(5), kind="machinist")

    def test_tier2_repair_and_decode_feasible(self):
        inst = generate_instance(GeneratorConfig(
            n_parts_blue=2, n_parts_llv=1, n_forgings_blue=2, n_forgings_llv=1,
            tier1_count=2, tier2_count=2, must_make_per_kind=1, seed=6))
        enc = Encoding(inst, "integrated")
        rng = np.random.default_rng(6)
        chrom = enc.repair(enc.split(enc.random_genes(rng)), rng)
        alloc = enc.decode(chrom)
        # dual distinctness everywhere
        assert (alloc.tier1[:, 0] != alloc.tier1[:, 1]).all()
        assert (alloc.tier2[:, :, 0] != alloc.tier2[:, :, 1]).all()
        for p, j in inst.must_make_tier1:
            assert j in alloc.tier1[p]
        for f, j, l in inst.must_make_tier2:
            assert l in alloc.tier2[f, j]
        # levels consistent with flags
        bd = evaluate(inst, alloc)
        assert bd.level_violations == []

    def test_budget_over_cap_repaired(self):
        # two suppliers, cap forces the second part away from the cheap one
        inst = build_instance(
            mode=SourcingMode.SINGLE,
            n_parts_blue=2, tier1_count=2, orders=(100, 100),
            mach_unit=[[10.0, 50.0], [10.0, 50.0]],
            mach_tr=np.zeros((2, 2)),
            yields=np.zeros((2, 1), dtype=int),
            budget1=(0.0, [1500.0, 1e12]),
        )
        enc = Encoding(inst, "machinist")
        chrom = Chromosome(np.array([0, 0]), np.zeros(0, dtype=np.int64))  # both at j0: 2000
        fixed = enc.repair(chrom, np.random.default_rng(7))
        bd = evaluate(inst, enc.decode(fixed))
        assert bd.per_supplier_spend_tier1[0] <= 1500.0 + 1e-6


class TestGa:
    def test_reaches_optimum_tiny_machinist_single(self):
        inst = generate_instance(GeneratorConfig(
            n_parts_blue=3, n_parts_llv=1, n_forgings_blue=1, n_forgings_llv=0,
            tier1_count=3, tier2_count=2, must_make_per_kind=1,
            mode=SourcingMode.SINGLE, seed=50))
        params = GaParams(generations=60)
        report, trace = ga_solve(inst, params, seed=1, kind="machinist")
        oracle = brute_force(inst, "machinist")
        assert report.objective == pytest.approx(oracle.objective, rel=1e-9)

    def test_degenerate_operators_keep_population_static(self):
        inst = tiny_dual()
        params = GaParams(population=10, generations=5, crossover_prob=1e-12,
                          mutation_prob=0.0, replacement_percent=0.0)
        report, trace = ga_solve(inst, params, seed=2, kind="machinist")
        bests = trace.best_values()
        assert all(b == bests[0] for b in bests)

    def test_trace_non_increasing(self):
        inst = generate_instance(GeneratorConfig(
            n_parts_blue=3, n_parts_llv=1, n_forgings_blue=2, n_forgings_llv=1,
            tier1_count=3, tier2_count=2, must_make_per_kind=0, seed=51))
        _, trace = ga_solve(inst, GaParams(population=20, generations=50),
                            seed=3, kind="integrated")
        bests = trace.best_values()
        assert all(b2 <= b1 + 1e-9 for b1, b2 in zip(bests, bests[1:]))
        assert len(bests) == 51

    def test_deterministic(self):
        inst = tiny_dual()
        params = GaParams(population=12, generations=10)
        a_report, a_trace = ga_solve(inst, params, seed=9, kind="machinist")
        b_report, b_trace = ga_solve(inst, params, seed=9, kind="machinist")
        assert a_trace.entries == b_trace.entries
        assert a_report.allocation.same_as(b_report.allocation)

    def test_relative_trace_uses_reference(self):
        inst = tiny_dual()
        _, trace = ga_solve(inst, GaParams(population=8, generations=3), seed=4,
                            kind="machinist", reference=100.0)
        assert trace.entries[0][2] == pytest.approx(trace.entries[0][1] / 100.0)


class TestPso:
    def test_zero_force_keeps_initial_best(self):
        inst = tiny_dual()
        params = PsoParams(swarm=6, inertia=0.0, cognitive=0.0, social=0.0,
                           iterations=8)
        report, trace = pso_solve(inst, params, seed=5, kind="machinist")
        bests = trace.best_values()
        assert all(b == bests[0] for b in bests)

    def test_finds_trivial_optimum(self):
        inst = build_instance(mode=SourcingMode.SINGLE, yields=[[0]],
                              mach_unit=[[10.0, 1000.0]])
        params = PsoParams(swarm=4, iterations=10)
        report, _ = pso_solve(inst, params, seed=6, kind="machinist")
        oracle = brute_force(inst, "machinist")
        assert report.objective == pytest.approx(oracle.objective)

    def test_deterministic(self):
        inst = tiny_dual()
        params = PsoParams(swarm=5, iterations=6)
        a, ta = pso_solve(inst, params, seed=7, kind="machinist")
        b, tb = pso_solve(inst, params, seed=7, kind="machinist")
        assert ta.entries == tb.entries
        assert a.allocation.same_as(b.allocation)

    def test_trace_non_increasing(self):
        inst = tiny_dual()
        _, trace = pso_solve(inst, PsoParams(swarm=6, iterations=12), seed=8,
                             kind="machinist")
        bests = trace.best_values()
        assert all(b2 <= b1 + 1e-9 for b1, b2 in zip(bests, bests[1:]))


class TestAco:
    def test_full_evaporation_reverts_to_visibility(self):
        inst = build_instance(mode=SourcingMode.SINGLE, yields=[[0]],
                              mach_unit=[[10.0, 1000.0]], mach_tr=[[0.0, 0.0]])
        params = AcoParams(ants=4, evaporation=1.0, deposit=1e-12, iterations=5)
        report, trace = aco_solve(inst, params, seed=9, kind="machinist")
        assert report.status == "Feasible"

    def test_probability_mass_concentrates_on_cheap_supplier(self):
        inst = build_instance(mode=SourcingMode.SINGLE, yields=[[0]],
                              mach_unit=[[10.0, 1000.0]], mach_tr=[[0.0, 0.0]])
        params = AcoParams(ants=10, iterations=50)
        report, _ = aco_solve(inst, params, seed=10, kind="machinist")
        # reconstruct the final probabilities by replaying tau updates is
        # internal; assert through the outcome instead: optimum found
        assert report.objective == pytest.approx(1000.0)  # 10 * 100 units
        assert report.allocation.tier1[0, 0] == 0

    def test_probabilities_normalized(self):
        rng = np.random.default_rng(11)
        tau = rng.uniform(0, 1e-3, size=(7, 4))
        vis = rng.uniform(0.1, 2.0, size=(7, 4))
        valid = np.ones((7, 4), dtype=bool)
        valid[2, 3] = False
        tau[~valid] = 0.0
        probs = _aco_probabilities(tau, vis, valid, AcoParams())
        sums = probs.sum(axis=1)
        assert np.all(np.abs(sums - 1.0) < 1e-9)
        assert probs[2, 3] == 0.0

    def test_deterministic(self):
        inst = tiny_dual()
        params = AcoParams(ants=5, iterations=6)
        a, ta = aco_solve(inst, params, seed=12, kind="machinist")
        b, tb = aco_solve(inst, params, seed=12, kind="machinist")
        assert ta.entries == tb.entries
        assert a.allocation.same_as(b.allocation)

    def test_trace_non_increasing(self):
        inst = tiny_dual()
        _, trace = aco_solve(inst, AcoParams(ants=5, iterations=10), seed=13,
                             kind="machinist")
        bests = trace.best_values()
        assert all(b2 <= b1 + 1e-9 for b1, b2 in zip(bests, bests[1:]))


class TestForgerKind:
    def test_needs_tier1_base(self):
        inst = tiny_dual()
        with pytest.raises(ValueError, match="machinist allocation"):
            Encoding(inst, "forger")

    def test_matches_brute_force_on_tiny(self):
        inst = generate_instance(GeneratorConfig(
            n_parts_blue=2, n_parts_llv=0, n_forgings_blue=1, n_forgings_llv=1,
            tier1_count=2, tier2_count=2, must_make_per_kind=0,
            mode=SourcingMode.SINGLE, seed=60))
        tier1 = np.array([[0], [1]])
        report, _ = ga_solve(inst, GaParams(population=20, generations=30),
                             seed=14, kind="forger", tier1_base=tier1)
        oracle = brute_force(inst, "forger", tier1_base=tier1)
        assert report.objective == pytest.approx(oracle.objective, rel=1e-9)


class TestTune:
    def test_single_trial_returns_sample(self):
        inst = tiny_dual()
        result = tune(inst, "ga", {"mutation_prob": (0.001, 0.1)}, trials=1, seed=1,
                      seeds_per_trial=1,
                      base_params=GaParams(population=6, generations=2),
                      kind="machinist")
        assert len(result.leaderboard) == 1
        assert result.best_params == result.leaderboard[0].params

    def test_point_interval(self):
        inst = tiny_dual()
        result = tune(inst, "pso", {"inertia": (0.4, 0.4)}, trials=2, seed=2,
                      seeds_per_trial=1,
                      base_params=PsoParams(swarm=4, iterations=2),
                      kind="machinist")
        assert all(t.params["inertia"] == pytest.approx(0.4) for t in result.leaderboard)

    def test_argmin_over_leaderboard(self):
        inst = tiny_dual()
        result = tune(inst, "ga", {"mutation_prob": (0.0, 0.2),
                                   "population": (4, 10)},
                      trials=8, seed=3, seeds_per_trial=2,
                      base_params=GaParams(population=6, generations=3),
                      kind="machinist")
        assert len(result.leaderboard) == 8
        assert result.best_mean_cost <= min(t.mean_cost for t in result.leaderboard) + 1e-12

    def test_unknown_parameter_rejected(self):
        inst = tiny_dual()
        with pytest.raises(ValueError, match="unknown ga parameter"):
            tune(inst, "ga", {"warp": (0, 1)}, trials=1, seed=1)
