// Console wiring: one session per page, driven entirely by backend data.

import { ApiError, SsoaClient } from "./api.js";
import { itemLabel } from "./format.js";
import { pollUntilSolved } from "./poll.js";
import {
  renderBanner,
  renderCostChart,
  renderForgingTable,
  renderPartTable,
  renderSpendBars,
  renderScenario,
  renderTimeline,
} from "./render.js";
import { RoundEditor, type CellEdit } from "./roundEditor.js";
import {
  buildTimeline,
  costSeries,
  forgingRows,
  partRows,
  spendBars,
} from "./state.js";
import type { AllocationView, WhatIfMutation } from "./types.js";
import { runScenario } from "./whatIf.js";

function mount(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing mount point #${id}`);
  return node;
}

export class Console {
  private client: SsoaClient;
  private editor: RoundEditor;
  private lastView: AllocationView | null = null;
  private previousView: AllocationView | null = null;

  constructor(
    baseUrl: string,
    private readonly sessionId: string,
  ) {
    this.client = new SsoaClient(baseUrl);
    this.editor = new RoundEditor(this.client, sessionId);
  }

  async refreshTimeline(): Promise<void> {
    const summary = await this.client.summary(this.sessionId);
    const timeline = buildTimeline(summary);
    const host = mount("timeline");
    host.replaceChildren(renderTimeline(timeline), renderCostChart(costSeries(timeline)));
  }

  async showRound(round: number): Promise<void> {
    const view = await this.client.allocation(this.sessionId, round);
    this.previousView = this.lastView;
    this.lastView = view;
    const prevAlloc = this.previousView?.allocation ?? null;
    mount("parts").replaceChildren(renderPartTable(partRows(view.allocation, prevAlloc)));
    mount("forgings").replaceChildren(
      renderForgingTable(forgingRows(view.allocation, prevAlloc)));
    mount("spend").replaceChildren(renderSpendBars(spendBars(view.breakdown)));
  }

  stageEdit(edit: CellEdit): void {
    const problem = this.editor.stage(edit);
    const host = mount("editor-messages");
    host.replaceChildren();
    if (problem) {
      host.append(renderBanner(
        `${edit.table} ${itemLabel(edit.kind, edit.index)}: ${problem}`, "error"));
    }
  }

  async submitRound(label: string): Promise<void> {
    const host = mount("editor-messages");
    const outcome = await this.editor.submitAndSolve(label);
    host.replaceChildren();
    if (outcome.errors.length) {
      for (const error of outcome.errors) {
        const where = error.cell
          ? `${error.cell.table} ${itemLabel(error.cell.kind, error.cell.index)}: `
          : "";
        host.append(renderBanner(`${where}${error.message}`, "error"));
      }
      return;
    }
    if (outcome.noChanges) {
      host.append(renderBanner("no changes: identical allocation expected", "info"));
    }
    await pollUntilSolved(this.client, this.sessionId, outcome.round);
    await this.refreshTimeline();
    await this.showRound(outcome.round);
  }

  async runWhatIf(baseRound: number, mutation: WhatIfMutation): Promise<void> {
    const host = mount("whatif");
    try {
      const view = await runScenario(this.client, this.sessionId, baseRound, mutation);
      host.replaceChildren(renderScenario(view));
    } catch (error) {
      if (error instanceof ApiError) {
        host.replaceChildren(renderBanner(error.detail, "error"));
        return;
      }
      throw error;
    }
  }
}

declare global {
  interface Window {
    ssoaConsole?: Console;
  }
}

if (typeof document !== "undefined" && document.getElementById("timeline")) {
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? "http://127.0.0.1:8000";
  const session = params.get("session");
  if (session) {
    const console_ = new Console(server, session);
    window.ssoaConsole = console_;
    void console_.refreshTimeline();
  }
}
