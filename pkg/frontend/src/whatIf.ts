// What-if panel logic: run a scenario against a solved round and shape
// the answer for display. Scenarios never touch the round ledger.

import { SsoaClient } from "./api.js";
import { allocationDiff, type AllocationDiffEntry } from "./state.js";
import type { AllocationView, WhatIfMutation, WhatIfResult } from "./types.js";

export interface ScenarioView {
  mutation: WhatIfMutation;
  baselineCost: number | null;
  scenarioCost: number | null;
  costDelta: number | null;
  zeroDelta: boolean;
  costIncreased: boolean;
  diff: AllocationDiffEntry[];
  status: string;
}

export const ZERO_DELTA_TOLERANCE = 1e-6;

export async function runScenario(
  client: SsoaClient,
  sessionId: string,
  baseRound: number,
  mutation: WhatIfMutation,
): Promise<ScenarioView> {
  const [result, baseView] = await Promise.all([
    client.whatIf(sessionId, baseRound, mutation),
    client.allocation(sessionId, baseRound),
  ]);
  return scenarioView(result, baseView);
}

export function scenarioView(
  result: WhatIfResult,
  baseView: AllocationView,
): ScenarioView {
  const delta = result.cost_delta;
  return {
    mutation: result.mutation,
    baselineCost: result.baseline_cost,
    scenarioCost: result.scenario_cost,
    costDelta: delta,
    zeroDelta: delta !== null && Math.abs(delta) <= ZERO_DELTA_TOLERANCE,
    costIncreased: delta !== null && delta > ZERO_DELTA_TOLERANCE,
    diff: allocationDiff(baseView.allocation, result.report.allocation),
    status: result.report.status,
  };
}

/** Penalty-slider support: scenario costs for increasing factors; the
 * rendered indicator marks whether the series is non-decreasing. */
export async function penaltyFactorSeries(
  client: SsoaClient,
  sessionId: string,
  baseRound: number,
  tier2Supplier: number,
  factors: number[],
): Promise<{ factors: number[]; costs: (number | null)[]; nonDecreasing: boolean }> {
  const costs: (number | null)[] = [];
  for (const factor of factors) {
    const result = await client.whatIf(sessionId, baseRound, {
      type: "change_penalty",
      tier2: tier2Supplier,
      factor,
    });
    costs.push(result.scenario_cost);
  }
  let nonDecreasing = true;
  for (let i = 1; i < costs.length; i++) {
    const a = costs[i - 1];
    const b = costs[i];
    if (a !== null && b !== null && b < a - ZERO_DELTA_TOLERANCE) {
      nonDecreasing = false;
    }
  }
  return { factors, costs, nonDecreasing };
}
