"""Compile instances into solver-agnostic linear models.

Three model families share one variable vocabulary:

* machinist-tier: binary part assignments with coverage, pairwise
  dual-sourcing, budget, and must-make rows; forbidden pairs are priced
  prohibitively rather than removed, so model shape never depends on them.
* forger-tier (given a machinist allocation): binary forging-flow
  assignments, the same structural rows per (forging, consumer) slot, plus
  the penalty indicator triple per Tier2 supplier that links blue-chip
  spend to the LLV price level.
* integrated-linearized: both tiers at once with every forging-flow x
  part-assignment product replaced by an auxiliary binary and the three
  standard product rows, which is exact but multiplies variable counts;
  builds refuse to start past a configurable cap.

Variable ordering is deterministic (family, then item/supplier indices) so
exports and solver runs reproduce bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import costs as costs_mod
from .costs import Allocation
from .instance import (
    GeneratorConfig,
    SourcingMode,
    SourcingPolicy,
    SsoaError,
    SupplyChainInstance,
)

BINARY = "binary"
CONTINUOUS = "continuous"

MODEL_KINDS = ("machinist", "forger", "integrated")

#: Default ceiling on built variables for the linearized integrated model.
DEFAULT_VARIABLE_CAP = 200_000


class ModelBuildError(SsoaError):
    """The instance cannot produce a well-formed model (e.g. a part is
    forced onto more suppliers than it has proportions)."""


class IntractableModelError(SsoaError):
    """A linearized build was refused because its estimated size exceeds
    the configured cap."""


@dataclass
class Variable:
    name: str
    lower: float
    upper: float
    integrality: str


@dataclass
class Constraint:
    coeffs: dict[int, float]
    relation: str  # "<=", "=", ">="
    rhs: float
    label: str


@dataclass
class LinearModel:
    kind: str
    variables: list[Variable]
    objective: dict[int, float]
    objective_constant: float
    constraints: list[Constraint]
    metadata: dict
    # semantic index maps used to decode solutions; not part of exports
    x_index: dict = field(default_factory=dict)   # (p, prop) -> var
    y_index: dict = field(default_factory=dict)   # (f, j, l, d, prop) -> var
    v_index: dict = field(default_factory=dict)   # l -> var
    u_index: dict = field(default_factory=dict)   # (f, j, l, d, py, p, px) -> var

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def objective_value(self, x: np.ndarray) -> float:
        total = self.objective_constant
        for idx, coef in self.objective.items():
            total += coef * float(x[idx])
        return total

    def constraint_violations(self, x: np.ndarray, tol: float = 1e-6) -> list[str]:
        """Labels of rows the vector violates beyond ``tol`` (scaled by rhs)."""
        bad = []
        for row in self.constraints:
            lhs = sum(coef * float(x[idx]) for idx, coef in row.coeffs.items())
            slack = lhs - row.rhs
            allowance = tol * max(1.0, abs(row.rhs))
            if row.relation == "<=" and slack > allowance:
                bad.append(row.label)
            elif row.relation == ">=" and slack < -allowance:
                bad.append(row.label)
            elif row.relation == "=" and abs(slack) > allowance:
                bad.append(row.label)
        return bad

    def to_arrays(self):
        """Dense (c, A, rel, b, lb, ub) view for the LP core."""
        from .simplex import EQ, GE, LE

        n = len(self.variables)
        m = len(self.constraints)
        c = np.zeros(n)
        for idx, coef in self.objective.items():
            c[idx] = coef
        A = np.zeros((m, n))
        b = np.zeros(m)
        rel = np.zeros(m, dtype=np.int64)
        rel_map = {"<=": LE, "=": EQ, ">=": GE}
        for i, row in enumerate(self.constraints):
            for idx, coef in row.coeffs.items():
                A[i, idx] = coef
            b[i] = row.rhs
            rel[i] = rel_map[row.relation]
        lb = np.array([v.lower for v in self.variables])
        ub = np.array([v.upper for v in self.variables])
        return c, A, rel, b, lb, ub


@dataclass
class VariableCount:
    """Closed-form variable accounting for one model kind and mode."""

    kind: str
    mode: str
    part_assign: int
    forging_assign: int
    penalty_indicators: int
    ga_genes_tier1: int
    ga_genes_tier2: int
    u_products: int = 0

    @property
    def total(self) -> int:
        return self.part_assign + self.forging_assign + self.penalty_indicators

    @property
    def ga_total(self) -> int:
        return self.ga_genes_tier1 + self.ga_genes_tier2

    def to_doc(self) -> dict:
        return {
            "kind": self.kind, "mode": self.mode,
            "part_assign": self.part_assign,
            "forging_assign": self.forging_assign,
            "penalty_indicators": self.penalty_indicators,
            "total": self.total,
            "ga_genes_tier1": self.ga_genes_tier1,
            "ga_genes_tier2": self.ga_genes_tier2,
            "ga_total": self.ga_total,
            "u_products": self.u_products,
        }


def count_variables(
    source: SupplyChainInstance | GeneratorConfig,
    kind: str,
    mode: SourcingMode | str | None = None,
) -> VariableCount:
    """Count model and chromosome variables without building anything."""
    if kind not in MODEL_KINDS and kind != "integrated-linearized":
        raise ValueError(f"unknown model kind {kind!r}")
    if isinstance(source, SupplyChainInstance):
        nPB, nPL = source.n_parts_blue, source.n_parts_llv
        nFB, nFL = source.n_forgings_blue, source.n_forgings_llv
        J, L = source.tier1_count, source.tier2_count
        default_mode = source.sourcing.mode
    else:
        nPB, nPL = source.n_parts_blue, source.n_parts_llv
        nFB, nFL = source.n_forgings_blue, source.n_forgings_llv
        J, L = source.tier1_count, source.tier2_count
        default_mode = source.mode
    mode = SourcingMode(mode) if mode is not None else default_mode
    props = mode.proportions
    nP, nF = nPB + nPL, nFB + nFL

    x = props * nP * J
    y = props * (nFB * J * L + 2 * nFL * J * L)
    want_x = kind in ("machinist", "integrated", "integrated-linearized")
    want_y = kind in ("forger", "integrated", "integrated-linearized")
    u = y * nP * props if kind in ("integrated", "integrated-linearized") else 0
    return VariableCount(
        kind=kind,
        mode=mode.value,
        part_assign=x if want_x else 0,
        forging_assign=y if want_y else 0,
        penalty_indicators=L if want_y else 0,
        ga_genes_tier1=props * nP if want_x else 0,
        ga_genes_tier2=props * nF * J if want_y else 0,
        u_products=u,
    )


def with_sourcing(
    inst: SupplyChainInstance,
    mode: SourcingMode | str | None = None,
    split: float | None = None,
) -> SupplyChainInstance:
    """Copy of the instance under a different sourcing mode and/or uniform
    first-proportion share (used by ratio sweeps and the build CLI)."""
    policy = inst.sourcing
    if mode is not None:
        policy = policy.with_mode(SourcingMode(mode))
    if split is not None:
        policy = policy.with_uniform_split(split)
    if policy is inst.sourcing:
        return inst
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
        penalty=inst.penalty, sourcing=policy, provenance=inst.provenance,
    )


# ---------------------------------------------------------------------------
# machinist tier


def machining_objective_table(inst: SupplyChainInstance) -> np.ndarray:
    """Per-assignment machining cost [n_parts, J, props], forbidden pairs
    already at the prohibitive price."""
    unit = inst.effective_machining_unit_cost() + inst.machining_transport_cost
    qty = inst.part_quantities()
    return unit[:, :, None] * qty[:, None, :]


def build_machinist(inst: SupplyChainInstance) -> LinearModel:
    """Part-assignment model: minimize machining spend subject to coverage,
    strict dual-sourcing, supplier budgets and must-make rows."""
    props = inst.n_proportions
    J = inst.tier1_count
    _check_must_make_load(inst)

    cx = machining_objective_table(inst)
    variables: list[Variable] = []
    objective: dict[int, float] = {}
    x_index: dict[tuple[int, int], int] = {}
    for p in range(inst.n_parts):
        label = inst.part_id(p).label()
        for j in range(J):
            for prop in range(props):
                idx = len(variables)
                variables.append(Variable(f"x_{label}_j{j}_s{prop + 1}", 0.0, 1.0, BINARY))
                x_index[(p, j, prop)] = idx
                if cx[p, j, prop]:
                    objective[idx] = float(cx[p, j, prop])

    rows: list[Constraint] = []
    for p in range(inst.n_parts):
        label = inst.part_id(p).label()
        for prop in range(props):
            rows.append(Constraint(
                {x_index[(p, j, prop)]: 1.0 for j in range(J)}, "=", 1.0,
                f"cover_{label}_s{prop + 1}"))
    if props == 2:
        for p in range(inst.n_parts):
            label = inst.part_id(p).label()
            for j in range(J):
                rows.append(Constraint(
                    {x_index[(p, j, 0)]: 1.0, x_index[(p, j, 1)]: 1.0}, "<=", 1.0,
                    f"one_prop_{label}_j{j}"))
    for j in range(J):
        coeffs = {x_index[(p, j, prop)]: float(cx[p, j, prop])
                  for p in range(inst.n_parts) for prop in range(props)
                  if cx[p, j, prop]}
        _budget_rows(rows, coeffs, inst.tier1_budget_min[j], inst.tier1_budget_max[j],
                     f"budget_t1_j{j}")
    for p, j in inst.must_make_tier1:
        label = inst.part_id(p).label()
        rows.append(Constraint(
            {x_index[(p, j, prop)]: 1.0 for prop in range(props)}, "=", 1.0,
            f"must_{label}_j{j}"))

    model = LinearModel(
        kind="machinist",
        variables=variables,
        objective=objective,
        objective_constant=0.0,
        constraints=rows,
        metadata=_metadata(inst, "machinist", big_m=0.0),
        x_index=x_index,
    )
    return model


# ---------------------------------------------------------------------------
# forger tier


def forging_objective_table(inst: SupplyChainInstance, demand: np.ndarray) -> np.ndarray:
    """Per-assignment forging cost [n_forgings, J, L, 2, props] for the given
    demand table; level axis holds d=1 and d=2 prices (equal for blue)."""
    base = inst.effective_forging_unit_cost()
    tr = inst.forging_transport_cost
    gamma2 = np.ones_like(base)
    if inst.n_forgings > inst.n_forgings_blue:
        gamma2[inst.n_forgings_blue:] = inst.penalty.factor[None, None, :]
    unit = np.stack([base + tr, base * gamma2 + tr], axis=3)  # [f, j, l, d]
    share = inst.forging_proportions()  # [f, props]
    return unit[:, :, :, :, None] * (demand[:, :, None, None, None]
                                     * share[:, None, None, None, :])


def build_forger(inst: SupplyChainInstance, tier1: np.ndarray) -> LinearModel:
    """Forging-flow model for a fixed machinist allocation."""
    props = inst.n_proportions
    J, L = inst.tier1_count, inst.tier2_count
    nFB = inst.n_forgings_blue
    _check_must_make_load(inst)

    demand = costs_mod.forging_requirement_table(inst, tier1)
    cy = forging_objective_table(inst, demand)

    variables: list[Variable] = []
    objective: dict[int, float] = {}
    y_index: dict[tuple[int, int, int, int, int], int] = {}
    for f in range(inst.n_forgings):
        label = inst.forging_id(f).label()
        levels = (1,) if f < nFB else (1, 2)
        for j in range(J):
            for l in range(L):
                for d in levels:
                    for prop in range(props):
                        idx = len(variables)
                        name = f"y_{label}_j{j}_l{l}_d{d}_s{prop + 1}" if len(levels) > 1 \
                            else f"y_{label}_j{j}_l{l}_s{prop + 1}"
                        variables.append(Variable(name, 0.0, 1.0, BINARY))
                        y_index[(f, j, l, d, prop)] = idx
                        if cy[f, j, l, d - 1, prop]:
                            objective[idx] = float(cy[f, j, l, d - 1, prop])
    v_index: dict[int, int] = {}
    for l in range(L):
        idx = len(variables)
        variables.append(Variable(f"pen_l{l}", 0.0, 1.0, BINARY))
        v_index[l] = idx

    rows: list[Constraint] = []
    _forger_structural_rows(inst, rows, y_index)
    big_m = _compute_big_m(objective, inst)
    _forger_financial_rows(inst, rows, y_index, v_index, cy, big_m)

    return LinearModel(
        kind="forger",
        variables=variables,
        objective=objective,
        objective_constant=0.0,
        constraints=rows,
        metadata=_metadata(inst, "forger", big_m=big_m),
        y_index=y_index,
        v_index=v_index,
    )


def _forger_structural_rows(inst, rows, y_index) -> None:
    props = inst.n_proportions
    J, L = inst.tier1_count, inst.tier2_count
    nFB = inst.n_forgings_blue
    for f in range(inst.n_forgings):
        label = inst.forging_id(f).label()
        levels = (1,) if f < nFB else (1, 2)
        for j in range(J):
            for prop in range(props):
                rows.append(Constraint(
                    {y_index[(f, j, l, d, prop)]: 1.0 for l in range(L) for d in levels},
                    "=", 1.0, f"cover_{label}_j{j}_s{prop + 1}"))
    if props == 2:
        for f in range(inst.n_forgings):
            label = inst.forging_id(f).label()
            levels = (1,) if f < nFB else (1, 2)
            for j in range(J):
                for l in range(L):
                    rows.append(Constraint(
                        {y_index[(f, j, l, d, prop)]: 1.0
                         for d in levels for prop in range(2)},
                        "<=", 1.0, f"one_prop_{label}_j{j}_l{l}"))
    for f, j, l in inst.must_make_tier2:
        label = inst.forging_id(f).label()
        levels = (1,) if f < nFB else (1, 2)
        rows.append(Constraint(
            {y_index[(f, j, l, d, prop)]: 1.0 for d in levels for prop in range(props)},
            "=", 1.0, f"must_{label}_j{j}_l{l}"))


def _forger_financial_rows(inst, rows, y_index, v_index, cy, big_m) -> None:
    props = inst.n_proportions
    J, L = inst.tier1_count, inst.tier2_count
    nFB, nF = inst.n_forgings_blue, inst.n_forgings
    eps = inst.penalty.epsilon
    for l in range(L):
        coeffs: dict[int, float] = {}
        for (f, j, ll, d, prop), idx in y_index.items():
            if ll == l and cy[f, j, ll, d - 1, prop]:
                coeffs[idx] = float(cy[f, j, ll, d - 1, prop])
        _budget_rows(rows, coeffs, inst.tier2_budget_min[l], inst.tier2_budget_max[l],
                     f"budget_t2_l{l}")

    for l in range(L):
        blue = {y_index[(f, j, l, 1, prop)]: float(cy[f, j, l, 0, prop])
                for f in range(nFB) for j in range(J) for prop in range(props)
                if cy[f, j, l, 0, prop]}
        d_l = float(inst.penalty.threshold[l])
        lo = dict(blue)
        lo[v_index[l]] = big_m
        rows.append(Constraint(lo, ">=", d_l - eps, f"pen_lo_l{l}"))
        hi = dict(blue)
        hi[v_index[l]] = big_m
        rows.append(Constraint(hi, "<=", big_m + d_l - eps, f"pen_hi_l{l}"))
        if nF > nFB:
            d1 = {y_index[(f, j, l, 1, prop)]: float(cy[f, j, l, 0, prop])
                  for f in range(nFB, nF) for j in range(J) for prop in range(props)
                  if cy[f, j, l, 0, prop]}
            d1[v_index[l]] = big_m
            rows.append(Constraint(d1, "<=", big_m, f"pen_d1_l{l}"))
            d2 = {y_index[(f, j, l, 2, prop)]: float(cy[f, j, l, 1, prop])
                  for f in range(nFB, nF) for j in range(J) for prop in range(props)
                  if cy[f, j, l, 1, prop]}
            d2[v_index[l]] = -big_m
            rows.append(Constraint(d2, "<=", 0.0, f"pen_d2_l{l}"))


# ---------------------------------------------------------------------------
# integrated, linearized


def build_integrated_linearized(
    inst: SupplyChainInstance,
    max_variables: int = DEFAULT_VARIABLE_CAP,
) -> LinearModel:
    """Both tiers in one exact binary model.

    Every product of a forging-flow variable with a part-assignment variable
    at the same consumer becomes an auxiliary binary tied down by the three
    standard product rows; forging spend terms are rewritten over those
    auxiliaries.  Size grows multiplicatively, so the build refuses to start
    when the estimate exceeds ``max_variables``.
    """
    count = count_variables(inst, "integrated")
    estimated = count.total + count.u_products
    if estimated > max_variables:
        raise IntractableModelError(
            f"integrated-linearized build would create about {estimated:,} variables, "
            f"over the cap of {max_variables:,}; solve via the two-phase route or "
            "export a single tier instead")

    props = inst.n_proportions
    J, L = inst.tier1_count, inst.tier2_count
    nFB, nF, nP = inst.n_forgings_blue, inst.n_forgings, inst.n_parts
    _check_must_make_load(inst)

    cx = machining_objective_table(inst)
    variables: list[Variable] = []
    objective: dict[int, float] = {}
    x_index: dict[tuple[int, int, int], int] = {}
    for p in range(nP):
        label = inst.part_id(p).label()
        for j in range(J):
            for prop in range(props):
                idx = len(variables)
                variables.append(Variable(f"x_{label}_j{j}_s{prop + 1}", 0.0, 1.0, BINARY))
                x_index[(p, j, prop)] = idx
                if cx[p, j, prop]:
                    objective[idx] = float(cx[p, j, prop])

    y_index: dict[tuple[int, int, int, int, int], int] = {}
    for f in range(nF):
        label = inst.forging_id(f).label()
        levels = (1,) if f < nFB else (1, 2)
        for j in range(J):
            for l in range(L):
                for d in levels:
                    for prop in range(props):
                        idx = len(variables)
                        name = f"y_{label}_j{j}_l{l}_d{d}_s{prop + 1}" if len(levels) > 1 \
                            else f"y_{label}_j{j}_l{l}_s{prop + 1}"
                        variables.append(Variable(name, 0.0, 1.0, BINARY))
                        y_index[(f, j, l, d, prop)] = idx
    v_index: dict[int, int] = {}
    for l in range(L):
        idx = len(variables)
        variables.append(Variable(f"pen_l{l}", 0.0, 1.0, BINARY))
        v_index[l] = idx

    # product variables and their objective weights:
    # unit price of the flow x induced demand of the paired part assignment
    unit = _flow_unit_prices(inst)          # [f, j, l, d]
    share = inst.forging_proportions()      # [f, props]
    qty = inst.part_quantities()            # [p, props]
    yld = inst.yields.astype(np.float64)    # [p, f]

    u_index: dict[tuple, int] = {}
    for (f, j, l, d, py) in sorted(y_index):
        flabel = inst.forging_id(f).label()
        levels = (1,) if f < nFB else (1, 2)
        for p in range(nP):
            plabel = inst.part_id(p).label()
            for px in range(props):
                idx = len(variables)
                if len(levels) > 1:
                    name = f"u_{flabel}_j{j}_l{l}_d{d}_sy{py + 1}_{plabel}_sx{px + 1}"
                else:
                    name = f"u_{flabel}_j{j}_l{l}_sy{py + 1}_{plabel}_sx{px + 1}"
                variables.append(Variable(name, 0.0, 1.0, BINARY))
                u_index[(f, j, l, d, py, p, px)] = idx
                w = float(unit[f, j, l, d - 1] * share[f, py] * yld[p, f] * qty[p, px])
                if w:
                    objective[idx] = w

    rows: list[Constraint] = []
    # machinist structure
    for p in range(nP):
        label = inst.part_id(p).label()
        for prop in range(props):
            rows.append(Constraint(
                {x_index[(p, j, prop)]: 1.0 for j in range(J)}, "=", 1.0,
                f"cover_{label}_s{prop + 1}"))
    if props == 2:
        for p in range(nP):
            label = inst.part_id(p).label()
            for j in range(J):
                rows.append(Constraint(
                    {x_index[(p, j, 0)]: 1.0, x_index[(p, j, 1)]: 1.0}, "<=", 1.0,
                    f"one_prop_{label}_j{j}"))
    for j in range(J):
        coeffs = {x_index[(p, j, prop)]: float(cx[p, j, prop])
                  for p in range(nP) for prop in range(props) if cx[p, j, prop]}
        _budget_rows(rows, coeffs, inst.tier1_budget_min[j], inst.tier1_budget_max[j],
                     f"budget_t1_j{j}")
    for p, j in inst.must_make_tier1:
        label = inst.part_id(p).label()
        rows.append(Constraint(
            {x_index[(p, j, prop)]: 1.0 for prop in range(props)}, "=", 1.0,
            f"must_{label}_j{j}"))

    _forger_structural_rows(inst, rows, y_index)

    # product rows: u <= x, u <= y, u >= x + y - 1
    for (f, j, l, d, py, p, px), u in sorted(u_index.items(), key=lambda kv: kv[1]):
        x = x_index[(p, j, px)]
        y = y_index[(f, j, l, d, py)]
        name = variables[u].name
        rows.append(Constraint({u: 1.0, x: -1.0}, "<=", 0.0, f"lin_x_{name}"))
        rows.append(Constraint({u: 1.0, y: -1.0}, "<=", 0.0, f"lin_y_{name}"))
        rows.append(Constraint({u: 1.0, x: -1.0, y: -1.0}, ">=", -1.0, f"lin_b_{name}"))

    big_m = _compute_big_m(objective, inst)

    # tier2 budgets and penalty rows over the product variables
    u_weight = {u: objective.get(u, 0.0) for u in u_index.values()}
    by_l: dict[int, dict[int, float]] = {l: {} for l in range(L)}
    blue_by_l: dict[int, dict[int, float]] = {l: {} for l in range(L)}
    d1_by_l: dict[int, dict[int, float]] = {l: {} for l in range(L)}
    d2_by_l: dict[int, dict[int, float]] = {l: {} for l in range(L)}
    for (f, j, l, d, py, p, px), u in u_index.items():
        w = u_weight[u]
        if not w:
            continue
        by_l[l][u] = by_l[l].get(u, 0.0) + w
        if f < nFB:
            blue_by_l[l][u] = blue_by_l[l].get(u, 0.0) + w
        elif d == 1:
            d1_by_l[l][u] = d1_by_l[l].get(u, 0.0) + w
        else:
            d2_by_l[l][u] = d2_by_l[l].get(u, 0.0) + w
    eps = inst.penalty.epsilon
    for l in range(L):
        _budget_rows(rows, by_l[l], inst.tier2_budget_min[l], inst.tier2_budget_max[l],
                     f"budget_t2_l{l}")
        d_l = float(inst.penalty.threshold[l])
        lo = dict(blue_by_l[l])
        lo[v_index[l]] = big_m
        rows.append(Constraint(lo, ">=", d_l - eps, f"pen_lo_l{l}"))
        hi = dict(blue_by_l[l])
        hi[v_index[l]] = big_m
        rows.append(Constraint(hi, "<=", big_m + d_l - eps, f"pen_hi_l{l}"))
        if nF > nFB:
            d1 = dict(d1_by_l[l])
            d1[v_index[l]] = big_m
            rows.append(Constraint(d1, "<=", big_m, f"pen_d1_l{l}"))
            d2 = dict(d2_by_l[l])
            d2[v_index[l]] = -big_m
            rows.append(Constraint(d2, "<=", 0.0, f"pen_d2_l{l}"))

    return LinearModel(
        kind="integrated-linearized",
        variables=variables,
        objective=objective,
        objective_constant=0.0,
        constraints=rows,
        metadata=_metadata(inst, "integrated-linearized", big_m=big_m,
                           estimated_variables=estimated),
        x_index=x_index,
        y_index=y_index,
        v_index=v_index,
        u_index=u_index,
    )


def _flow_unit_prices(inst: SupplyChainInstance) -> np.ndarray:
    """Unit flow prices [f, j, l, d] with LLV level-2 prices scaled."""
    base = inst.effective_forging_unit_cost()
    tr = inst.forging_transport_cost
    gamma2 = np.ones_like(base)
    if inst.n_forgings > inst.n_forgings_blue:
        gamma2[inst.n_forgings_blue:] = inst.penalty.factor[None, None, :]
    return np.stack([base + tr, base * gamma2 + tr], axis=3)


# ---------------------------------------------------------------------------
# shared helpers


def _budget_rows(rows, coeffs, minimum, maximum, label) -> None:
    # zero lower bounds make no row; infinite upper bounds likewise
    if minimum > 0 and coeffs:
        rows.append(Constraint(dict(coeffs), ">=", float(minimum), f"{label}_min"))
    if np.isfinite(maximum) and coeffs:
        rows.append(Constraint(dict(coeffs), "<=", float(maximum), f"{label}_max"))


def _compute_big_m(objective: dict[int, float], inst: SupplyChainInstance) -> float:
    """Model-specific indicator constant.

    Valid as soon as it dominates any feasible Tier2 spend plus the largest
    threshold; the instance-level cost bound is a tight such dominator
    (genuine costs only), far below the prohibitive-price sums.  Forbidden
    assignments can exceed it in pathological data, so fall back to the
    positive-coefficient sum whenever prohibitive entries could be chosen.
    """
    from .instance import cost_upper_bound

    max_d = float(inst.penalty.threshold.max(initial=0.0))
    bound = cost_upper_bound(inst) + max_d + 1.0
    positive = sum(v for v in objective.values() if v > 0) + max_d + 1.0
    if inst.cannot_make_tier2:
        # a forbidden pick would burst the genuine-cost bound; keep M safe
        return 10.0 * positive
    return 2.0 * bound


def _check_must_make_load(inst: SupplyChainInstance) -> None:
    props = inst.n_proportions
    per_part: dict[int, int] = {}
    for p, j in inst.must_make_tier1:
        per_part[p] = per_part.get(p, 0) + 1
        if per_part[p] > props:
            raise ModelBuildError(
                f"part {inst.part_id(p).label()} is forced on {per_part[p]} suppliers "
                f"but has only {props} proportion(s)")
    per_slot: dict[tuple[int, int], int] = {}
    for f, j, l in inst.must_make_tier2:
        per_slot[(f, j)] = per_slot.get((f, j), 0) + 1
        if per_slot[(f, j)] > props:
            raise ModelBuildError(
                f"forging {inst.forging_id(f).label()} for tier1 {j} is forced on "
                f"{per_slot[(f, j)]} suppliers but has only {props} proportion(s)")


def _metadata(inst: SupplyChainInstance, kind: str, big_m: float, **extra) -> dict:
    meta = {
        "kind": kind,
        "mode": inst.sourcing.mode.value,
        "instance_fingerprint": inst.fingerprint(),
        "big_m": big_m,
        "epsilon": inst.penalty.epsilon,
    }
    meta.update(extra)
    return meta


# ---------------------------------------------------------------------------
# solution decoding and feasibility vectors


class DecodeError(SsoaError):
    pass


def decode_allocation(
    model: LinearModel,
    x: np.ndarray,
    inst: SupplyChainInstance,
    tier1_base: np.ndarray | None = None,
) -> Allocation:
    """Translate a binary solution vector back into an allocation.

    Forger-tier models carry no part assignments, so the machinist
    allocation they were built against must be supplied.
    """
    props = inst.n_proportions
    tier1 = None
    if model.x_index:
        tier1 = np.zeros((inst.n_parts, props), dtype=np.int64)
        seen = np.zeros((inst.n_parts, props), dtype=bool)
        for (p, j, prop), idx in model.x_index.items():
            if x[idx] > 0.5:
                if seen[p, prop]:
                    raise DecodeError(f"part {inst.part_id(p).label()} proportion "
                                      f"{prop + 1} assigned twice")
                tier1[p, prop] = j
                seen[p, prop] = True
        if not seen.all():
            raise DecodeError("incomplete part assignment in solution vector")
    elif tier1_base is not None:
        tier1 = np.asarray(tier1_base, dtype=np.int64)

    tier2 = None
    levels = None
    if model.y_index:
        tier2 = np.zeros((inst.n_forgings, inst.tier1_count, props), dtype=np.int64)
        levels = np.ones((inst.n_forgings, inst.tier1_count, props), dtype=np.int64)
        seen2 = np.zeros((inst.n_forgings, inst.tier1_count, props), dtype=bool)
        for (f, j, l, d, prop), idx in model.y_index.items():
            if x[idx] > 0.5:
                if seen2[f, j, prop]:
                    raise DecodeError(
                        f"forging {inst.forging_id(f).label()} consumer {j} proportion "
                        f"{prop + 1} assigned twice")
                tier2[f, j, prop] = l
                levels[f, j, prop] = d
                seen2[f, j, prop] = True
        if not seen2.all():
            raise DecodeError("incomplete forging assignment in solution vector")
    return Allocation(tier1=tier1, tier2=tier2, tier2_level=levels)


def allocation_vector(
    model: LinearModel,
    inst: SupplyChainInstance,
    alloc: Allocation,
) -> np.ndarray:
    """Indicator vector for an allocation, with product variables set to the
    products they stand for and penalty indicators derived from blue spend
    under the model's epsilon rule."""
    x = np.zeros(model.n_variables)
    props = inst.n_proportions
    if model.x_index:
        if alloc.tier1 is None:
            raise DecodeError("allocation lacks part assignments required by the model")
        for p in range(inst.n_parts):
            for prop in range(props):
                x[model.x_index[(p, int(alloc.tier1[p, prop]), prop)]] = 1.0
    if model.y_index:
        if alloc.tier2 is None:
            raise DecodeError("allocation lacks forging assignments required by the model")
        levels = alloc.tier2_level if alloc.tier2_level is not None \
            else np.ones_like(alloc.tier2)
        for f in range(inst.n_forgings):
            for j in range(inst.tier1_count):
                for prop in range(props):
                    key = (f, j, int(alloc.tier2[f, j, prop]),
                           int(levels[f, j, prop]), prop)
                    if key not in model.y_index:
                        raise DecodeError(f"assignment {key} has no model variable")
                    x[model.y_index[key]] = 1.0
    if model.v_index:
        spend = _blue_spend_for_vector(model, inst, alloc, x)
        eps = inst.penalty.epsilon
        for l, idx in model.v_index.items():
            x[idx] = 1.0 if spend[l] <= inst.penalty.threshold[l] - eps else 0.0
    for (f, j, l, d, py, p, px), u in model.u_index.items():
        x[u] = x[model.y_index[(f, j, l, d, py)]] * x[model.x_index[(p, j, px)]]
    return x


def _blue_spend_for_vector(model, inst, alloc, x) -> np.ndarray:
    if alloc.tier1 is None or alloc.tier2 is None:
        raise DecodeError("penalty indicators need both assignment layers")
    bd = costs_mod.evaluate(inst, Allocation(alloc.tier1, alloc.tier2, alloc.tier2_level))
    return bd.per_supplier_blue_forging_spend_tier2
