// Pure view-model builders. Values pass through from backend responses
// untouched; these functions only reshape them for rendering.

import type {
  AllocationDoc,
  AllocationView,
  BreakdownDoc,
  RoundSummary,
  SessionSummary,
} from "./types.js";

export interface TimelineEntry {
  round: number;
  label: string;
  solved: boolean;
  status: string;
  objective: number | null;
  deltaSize: number;
}

export function buildTimeline(summary: SessionSummary): TimelineEntry[] {
  // ledger order is authoritative; sort defensively by round number
  return [...summary.rounds]
    .sort((a, b) => a.number - b.number)
    .map((r: RoundSummary) => ({
      round: r.number,
      label: r.label,
      solved: r.solved,
      status: r.status ?? (r.solved ? "solved" : "open"),
      objective: r.objective,
      deltaSize: r.delta_size,
    }));
}

export function costSeries(timeline: TimelineEntry[]): [number, number][] {
  return timeline
    .filter((e) => e.objective !== null)
    .map((e) => [e.round, e.objective as number]);
}

export interface PartRow {
  part: number; // flat index as reported
  suppliers: number[]; // tier1 supplier per proportion
  changed: boolean;
}

export interface ForgingRow {
  forging: number;
  consumer: number;
  suppliers: number[];
  levels: number[];
  changed: boolean;
}

export function partRows(
  current: AllocationDoc | null,
  previous?: AllocationDoc | null,
): PartRow[] {
  if (!current?.tier1) return [];
  return current.tier1.map((suppliers, part) => ({
    part,
    suppliers,
    changed:
      !!previous?.tier1 &&
      JSON.stringify(previous.tier1[part]) !== JSON.stringify(suppliers),
  }));
}

export function forgingRows(
  current: AllocationDoc | null,
  previous?: AllocationDoc | null,
): ForgingRow[] {
  if (!current?.tier2) return [];
  const rows: ForgingRow[] = [];
  current.tier2.forEach((byConsumer, forging) => {
    byConsumer.forEach((suppliers, consumer) => {
      rows.push({
        forging,
        consumer,
        suppliers,
        levels: current.tier2_level?.[forging]?.[consumer] ?? suppliers.map(() => 1),
        changed:
          !!previous?.tier2 &&
          JSON.stringify(previous.tier2[forging]?.[consumer]) !==
            JSON.stringify(suppliers),
      });
    });
  });
  return rows;
}

export function changedRowCount(
  rows: { changed: boolean }[],
): number {
  return rows.filter((r) => r.changed).length;
}

export interface SpendBar {
  supplier: number;
  tier: "tier1" | "tier2";
  spend: number;
  share: number; // 0..1 of the tier maximum, for bar widths
  penalized?: boolean;
}

export function spendBars(breakdown: BreakdownDoc | null): SpendBar[] {
  if (!breakdown) return [];
  const bars: SpendBar[] = [];
  const max1 = Math.max(...breakdown.per_supplier_spend_tier1, 1e-9);
  breakdown.per_supplier_spend_tier1.forEach((spend, supplier) =>
    bars.push({ supplier, tier: "tier1", spend, share: spend / max1 }),
  );
  const max2 = Math.max(...breakdown.per_supplier_spend_tier2, 1e-9);
  breakdown.per_supplier_spend_tier2.forEach((spend, supplier) =>
    bars.push({
      supplier,
      tier: "tier2",
      spend,
      share: spend / max2,
      penalized: breakdown.penalty_flags[supplier],
    }),
  );
  return bars;
}

export interface AllocationDiffEntry {
  kind: "part" | "forging";
  item: number;
  consumer?: number;
  before: number[];
  after: number[];
}

export function allocationDiff(
  before: AllocationDoc | null,
  after: AllocationDoc | null,
): AllocationDiffEntry[] {
  const out: AllocationDiffEntry[] = [];
  if (before?.tier1 && after?.tier1) {
    before.tier1.forEach((suppliers, part) => {
      const next = after.tier1![part];
      if (JSON.stringify(next) !== JSON.stringify(suppliers)) {
        out.push({ kind: "part", item: part, before: suppliers, after: next });
      }
    });
  }
  if (before?.tier2 && after?.tier2) {
    before.tier2.forEach((byConsumer, forging) => {
      byConsumer.forEach((suppliers, consumer) => {
        const next = after.tier2![forging]?.[consumer];
        if (JSON.stringify(next) !== JSON.stringify(suppliers)) {
          out.push({
            kind: "forging",
            item: forging,
            consumer,
            before: suppliers,
            after: next,
          });
        }
      });
    });
  }
  return out;
}

/** The exact values a round view displays, for traceability checks:
 * every field is the backend response value, verbatim. */
export function displayedReportValues(view: AllocationView): {
  objective: number | null;
  status: string;
  allocation: AllocationDoc | null;
  spendTier1: number[];
  spendTier2: number[];
  penaltyFlags: boolean[];
} {
  return {
    objective: view.objective,
    status: view.status,
    allocation: view.allocation,
    spendTier1: view.breakdown?.per_supplier_spend_tier1 ?? [],
    spendTier2: view.breakdown?.per_supplier_spend_tier2 ?? [],
    penaltyFlags: view.breakdown?.penalty_flags ?? [],
  };
}
