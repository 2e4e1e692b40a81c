// Bid-grid editing model: the operator stages per-cell price overrides,
// the editor validates locally (no negative prices, well-formed keys),
// then submits the round and solves it. Backend rejections come back as
// cell-addressed errors for inline display.

import { ApiError, SsoaClient } from "./api.js";
import type { CostTable, DeltaEntry, ItemKind, SolveReportDoc } from "./types.js";

export interface CellEdit {
  table: CostTable;
  kind: ItemKind;
  index: number;
  tier1: number;
  tier2?: number;
  value: number;
}

export interface CellError {
  cell: CellEdit | null; // null for round-level errors
  message: string;
}

const FORGING_TABLES: CostTable[] = ["forging_unit_cost", "forging_transport_cost"];

export function validateEdit(edit: CellEdit): string | null {
  if (!Number.isFinite(edit.value)) return "price must be a number";
  if (edit.value < 0) return "price must not be negative";
  if (edit.index < 0 || !Number.isInteger(edit.index)) return "bad item index";
  if (edit.tier1 < 0 || !Number.isInteger(edit.tier1)) return "bad tier1 supplier";
  const needsTier2 = FORGING_TABLES.includes(edit.table);
  if (needsTier2 && (edit.tier2 === undefined || edit.tier2 < 0)) {
    return "forging prices need a tier2 supplier";
  }
  if (!needsTier2 && edit.tier2 !== undefined) {
    return "machining prices take no tier2 supplier";
  }
  return null;
}

export class RoundEditor {
  private edits = new Map<string, CellEdit>();

  constructor(
    private readonly client: SsoaClient,
    private readonly sessionId: string,
  ) {}

  private key(edit: CellEdit): string {
    return [edit.table, edit.kind, edit.index, edit.tier1, edit.tier2 ?? ""].join("|");
  }

  /** Stage one cell edit; returns a validation message or null. */
  stage(edit: CellEdit): string | null {
    const problem = validateEdit(edit);
    if (problem) return problem;
    this.edits.set(this.key(edit), edit);
    return null;
  }

  unstage(edit: CellEdit): void {
    this.edits.delete(this.key(edit));
  }

  staged(): CellEdit[] {
    return [...this.edits.values()];
  }

  get isEmpty(): boolean {
    return this.edits.size === 0;
  }

  /** Filter helper for the grid: by supplier and/or item kind. */
  filterStaged(by: { tier1?: number; kind?: ItemKind }): CellEdit[] {
    return this.staged().filter(
      (e) =>
        (by.tier1 === undefined || e.tier1 === by.tier1) &&
        (by.kind === undefined || e.kind === by.kind),
    );
  }

  /**
   * Submit the staged delta as a new round and solve it.
   * An empty delta is allowed (identity round) and flagged to the caller
   * so the view can show a "no changes" banner.
   */
  async submitAndSolve(label = ""): Promise<{
    round: number;
    report: SolveReportDoc | null;
    noChanges: boolean;
    errors: CellError[];
  }> {
    const delta: DeltaEntry[] = this.staged().map((e) => ({ ...e }));
    const noChanges = delta.length === 0;
    try {
      const { number } = await this.client.submitRound(this.sessionId, delta, label);
      const report = await this.client.solveRound(this.sessionId, number);
      this.edits.clear();
      return { round: number, report, noChanges, errors: [] };
    } catch (error) {
      if (error instanceof ApiError) {
        return {
          round: -1,
          report: null,
          noChanges,
          errors: [this.locateError(error.detail, delta)],
        };
      }
      throw error;
    }
  }

  /** Map a backend rejection back to the offending cell when it names one. */
  private locateError(detail: string, delta: DeltaEntry[]): CellError {
    const match = detail.match(/override (\d+)/);
    if (match) {
      const index = Number(match[1]);
      if (index >= 0 && index < delta.length) {
        return { cell: delta[index], message: detail };
      }
    }
    // the service also names items like pB3/fL0 in key errors
    const labelled = delta.find((e) => {
      const prefix =
        e.kind === "part_blue" ? "pB" : e.kind === "part_llv" ? "pL"
        : e.kind === "forging_blue" ? "fB" : "fL";
      return detail.includes(`${prefix}${e.index}`);
    });
    return { cell: labelled ?? null, message: detail };
  }
}
