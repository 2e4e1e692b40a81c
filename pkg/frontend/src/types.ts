// Document shapes of the bidding-service API (v1). The console never
// recomputes costs: every number on screen comes from these fields.

export type ItemKind = "part_blue" | "part_llv" | "forging_blue" | "forging_llv";

export type CostTable =
  | "machining_unit_cost"
  | "machining_transport_cost"
  | "forging_unit_cost"
  | "forging_transport_cost";

export interface DeltaEntry {
  table: CostTable;
  kind: ItemKind;
  index: number;
  tier1: number;
  tier2?: number;
  value: number;
}

export interface SessionSettings {
  model_kind: "machinist" | "forger" | "integrated" | "two-phase";
  solver: "exact" | "ga" | "pso" | "aco";
  seed: number;
  limits?: { time_limit: number; node_limit: number; gap_target: number };
}

export interface AllocationDoc {
  tier1: number[][] | null;        // [part][proportion] -> tier1 supplier
  tier2: number[][][] | null;      // [forging][consumer][proportion] -> tier2 supplier
  tier2_level: number[][][] | null;
}

export interface BreakdownDoc {
  machining_blue: number;
  machining_llv: number;
  forging_blue: number;
  forging_llv: number;
  total: number;
  per_supplier_spend_tier1: number[];
  per_supplier_spend_tier2: number[];
  per_supplier_blue_forging_spend_tier2: number[];
  penalty_flags: boolean[];
  level_violations: number[][];
  forbidden_selected: unknown[][];
}

export interface SolveReportDoc {
  status: "Optimal" | "Feasible" | "Infeasible" | "TimeLimit";
  objective: number | null;
  allocation: AllocationDoc | null;
  relative_gap: number | null;
  nodes: number;
  wall_time: number;
  trace: [number, number][];
  solver: string;
  model_kind: string;
  breakdown?: BreakdownDoc;
  round?: number;
}

export interface RoundSummary {
  number: number;
  label: string;
  submitted_at: string | null;
  delta_size: number;
  solved: boolean;
  status: string | null;
  objective: number | null;
}

export interface SessionSummary {
  id: string;
  created_at: string | null;
  settings: SessionSettings;
  rounds: RoundSummary[];
}

export interface AllocationView {
  round: number;
  status: string;
  objective: number | null;
  allocation: AllocationDoc | null;
  breakdown: BreakdownDoc | null;
}

export interface WhatIfMutation {
  type:
    | "remove_supplier"
    | "force_assignment"
    | "forbid_assignment"
    | "shift_order"
    | "change_penalty";
  tier?: "tier1" | "tier2";
  index?: number;
  kind?: ItemKind;
  tier1?: number;
  tier2?: number;
  from_supplier?: number;
  to_supplier?: number;
  threshold?: number;
  factor?: number;
}

export interface WhatIfResult {
  base_round: number;
  mutation: WhatIfMutation;
  baseline_cost: number | null;
  scenario_cost: number | null;
  cost_delta: number | null;
  report: SolveReportDoc;
}
