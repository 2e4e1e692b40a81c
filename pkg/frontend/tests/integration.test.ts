// Console round trip against a live backend: values shown by the console
// must be byte-equal to the backend report, what-if on an inactive
// supplier must show a zero delta, and the timeline must mirror the
// ledger. The backend is spawned from the installed python package.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { SsoaClient } from "../src/api.js";
import { buildTimeline, displayedReportValues } from "../src/state.js";
import { pollUntilSolved } from "../src/poll.js";
import { runScenario } from "../src/whatIf.js";
import type { SolveReportDoc } from "../src/types.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

// Two parts, one blue + one LLV forging, two suppliers per tier; the
// second supplier of each tier is priced out, so it never wins anything
// and "remove inactive supplier" genuinely changes nothing.
const INSTANCE = {
  schema_version: 1,
  counts: { part_blue: 2, part_llv: 0, forging_blue: 1, forging_llv: 1, tier1: 2, tier2: 2 },
  part_orders: [100, 200],
  yield: [[1, 1], [1, 1]],
  machining_unit_cost: [[10.0, 1000.0], [20.0, 2000.0]],
  machining_transport_cost: [[0.0, 0.0], [0.0, 0.0]],
  forging_unit_cost: [
    [[1.0, 50.0], [1.0, 50.0]],
    [[2.0, 90.0], [2.0, 90.0]],
  ],
  forging_transport_cost: [
    [[0.0, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 0.0]],
  ],
  tier1_budget: { min: [0.0, 0.0], max: [1e12, 1e12] },
  tier2_budget: { min: [0.0, 0.0], max: [1e12, 1e12] },
  must_make_tier1: [],
  must_make_tier2: [],
  cannot_make_tier1: [],
  cannot_make_tier2: [],
  penalty: { threshold: [0.0, 0.0], factor: [5.0, 5.0], big_m: 1e12, epsilon: 0.001 },
  sourcing: { mode: "single", part_split: [0.7, 0.7], forging_split: [0.7, 0.7] },
};

let server: ChildProcess | null = null;
let dataDir = "";

async function waitForBackend(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const response = await fetch(`${BASE}/v1/sessions`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("backend did not start");
    await new Promise((resolve) => setTimeout(resolve, 300));
  }
}

beforeAll(async () => {
  dataDir = mkdtempSync(join(tmpdir(), "ssoa-console-"));
  server = spawn(
    "python3",
    ["-m", "ssoa.cli", "serve", "--data-dir", dataDir, "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitForBackend();
}, 40_000);

afterAll(() => {
  server?.kill();
  if (dataDir) rmSync(dataDir, { recursive: true, force: true });
});

describe("console round trip", () => {
  const client = new SsoaClient(BASE);
  let sessionId = "";
  let solveReport: SolveReportDoc;

  it("creates a session and submits a bid round", async () => {
    const created = await client.createSession(INSTANCE, {
      model_kind: "two-phase",
      solver: "exact",
      seed: 0,
    });
    sessionId = created.id;
    expect(sessionId).toBeTruthy();

    const submitted = await client.submitRound(sessionId, [
      {
        table: "machining_unit_cost",
        kind: "part_blue",
        index: 0,
        tier1: 0,
        value: 9.5,
      },
    ]);
    expect(submitted.number).toBe(1);
  });

  it("solves and the allocation view is byte-equal to the report", async () => {
    solveReport = await client.solveRound(sessionId, 1);
    expect(solveReport.status).toBe("Optimal");

    await pollUntilSolved(client, sessionId, 1);
    const view = await client.allocation(sessionId, 1);
    const displayed = displayedReportValues(view);

    // byte-equality with the solve response: the console recomputes nothing
    expect(JSON.stringify(displayed.allocation))
      .toBe(JSON.stringify(solveReport.allocation));
    expect(JSON.stringify(displayed.objective))
      .toBe(JSON.stringify(solveReport.objective));
    expect(JSON.stringify(displayed.spendTier1))
      .toBe(JSON.stringify(solveReport.breakdown?.per_supplier_spend_tier1));
    expect(JSON.stringify(displayed.penaltyFlags))
      .toBe(JSON.stringify(solveReport.breakdown?.penalty_flags));

    // the priced-out suppliers must indeed be inactive
    expect(view.allocation?.tier1?.every((row) => row.every((j) => j === 0))).toBe(true);
  });

  it("what-if removing the inactive supplier shows delta 0", async () => {
    const scenario = await runScenario(client, sessionId, 1, {
      type: "remove_supplier",
      tier: "tier1",
      index: 1,
    });
    expect(scenario.zeroDelta).toBe(true);
    expect(scenario.diff).toEqual([]);

    // removing the winner costs more and shows the reassignment
    const flipped = await runScenario(client, sessionId, 1, {
      type: "remove_supplier",
      tier: "tier1",
      index: 0,
    });
    expect(flipped.costIncreased).toBe(true);
    expect(flipped.diff.length).toBeGreaterThan(0);
  });

  it("timeline ordering matches the ledger", async () => {
    await client.submitRound(sessionId, [], "idle round");
    const summary = await client.summary(sessionId);
    const timeline = buildTimeline(summary);
    expect(timeline.map((e) => e.round)).toEqual([1, 2]);
    expect(timeline[0].solved).toBe(true);
    expect(timeline[0].objective).toBe(solveReport.objective);
    expect(timeline[1].solved).toBe(false);
  });
});
