// DOM renderers. Every cell carries the raw backend value in data-raw so
// displayed figures stay traceable to the response that produced them.

import { formatDelta, formatMoney } from "./format.js";
import type {
  ForgingRow,
  PartRow,
  SpendBar,
  TimelineEntry,
} from "./state.js";
import type { ScenarioView } from "./whatIf.js";

const WINDOW = 200; // rows rendered before the table offers "show more"

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderTimeline(entries: TimelineEntry[]): HTMLElement {
  const list = el("ol", "timeline");
  for (const entry of entries) {
    const item = el("li", entry.solved ? "round solved" : "round open");
    item.dataset.round = String(entry.round);
    item.dataset.raw = JSON.stringify(entry.objective);
    item.append(
      el("span", "round-number", `#${entry.round}`),
      el("span", "round-label", entry.label || `${entry.deltaSize} bid(s)`),
      el("span", `round-status status-${entry.status.toLowerCase()}`, entry.status),
      el("span", "round-cost", formatMoney(entry.objective)),
    );
    list.append(item);
  }
  return list;
}

export function renderCostChart(series: [number, number][]): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", "0 0 320 120");
  svg.classList.add("cost-chart");
  if (series.length === 0) return svg;
  const xs = series.map(([round]) => round);
  const ys = series.map(([, cost]) => cost);
  const x0 = Math.min(...xs);
  const x1 = Math.max(...xs, x0 + 1);
  const y0 = Math.min(...ys);
  const y1 = Math.max(...ys, y0 + 1);
  const points = series
    .map(([round, cost]) => {
      const x = 10 + (300 * (round - x0)) / (x1 - x0);
      const y = 110 - (100 * (cost - y0)) / (y1 - y0);
      return `${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", points);
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "currentColor");
  svg.append(line);
  return svg;
}

function windowed<T>(rows: T[], table: HTMLTableElement, renderRow: (row: T) => HTMLTableRowElement): void {
  const body = table.createTBody();
  let rendered = 0;
  const renderChunk = () => {
    for (const row of rows.slice(rendered, rendered + WINDOW)) {
      body.append(renderRow(row));
    }
    rendered = Math.min(rendered + WINDOW, rows.length);
  };
  renderChunk();
  if (rows.length > rendered) {
    const more = el("button", "show-more",
      `show more (${rows.length - rendered} hidden)`);
    more.addEventListener("click", () => {
      renderChunk();
      if (rendered >= rows.length) more.remove();
      else more.textContent = `show more (${rows.length - rendered} hidden)`;
    });
    table.after(more);
  }
}

export function renderPartTable(rows: PartRow[]): HTMLTableElement {
  const table = el("table", "allocation parts") as HTMLTableElement;
  const head = table.createTHead().insertRow();
  head.append(el("th", "", "part"), el("th", "", "suppliers"));
  windowed(rows, table, (row) => {
    const tr = el("tr", row.changed ? "changed" : "") as HTMLTableRowElement;
    tr.dataset.raw = JSON.stringify(row.suppliers);
    tr.append(
      el("td", "", `p${row.part}`),
      el("td", "", row.suppliers.map((j) => `T1-${j}`).join(" / ")),
    );
    return tr;
  });
  return table;
}

export function renderForgingTable(rows: ForgingRow[]): HTMLTableElement {
  const table = el("table", "allocation forgings") as HTMLTableElement;
  const head = table.createTHead().insertRow();
  head.append(
    el("th", "", "forging"),
    el("th", "", "consumer"),
    el("th", "", "suppliers"),
    el("th", "", "level"),
  );
  windowed(rows, table, (row) => {
    const tr = el("tr", row.changed ? "changed" : "") as HTMLTableRowElement;
    tr.dataset.raw = JSON.stringify([row.suppliers, row.levels]);
    tr.append(
      el("td", "", `f${row.forging}`),
      el("td", "", `T1-${row.consumer}`),
      el("td", "", row.suppliers.map((l) => `T2-${l}`).join(" / ")),
      el("td", "", row.levels.join(" / ")),
    );
    return tr;
  });
  return table;
}

export function renderSpendBars(bars: SpendBar[]): HTMLElement {
  const wrap = el("div", "spend-bars");
  for (const bar of bars) {
    const row = el("div", `spend ${bar.tier}${bar.penalized ? " penalized" : ""}`);
    row.dataset.raw = String(bar.spend);
    const fill = el("span", "fill");
    fill.style.width = `${Math.round(bar.share * 100)}%`;
    row.append(
      el("span", "who", `${bar.tier === "tier1" ? "T1" : "T2"}-${bar.supplier}`),
      fill,
      el("span", "amount", formatMoney(bar.spend)),
    );
    if (bar.penalized) {
      row.append(el("span", "badge penalty", "below threshold"));
    }
    wrap.append(row);
  }
  return wrap;
}

export function renderScenario(view: ScenarioView): HTMLElement {
  const wrap = el("div", "scenario");
  wrap.dataset.raw = JSON.stringify({
    baseline: view.baselineCost,
    scenario: view.scenarioCost,
    delta: view.costDelta,
  });
  const badge = view.zeroDelta
    ? el("span", "badge zero", "delta 0")
    : el("span", `badge ${view.costIncreased ? "worse" : "better"}`,
         formatDelta(view.costDelta));
  wrap.append(
    el("div", "scenario-status", view.status),
    el("div", "scenario-costs",
       `${formatMoney(view.baselineCost)} -> ${formatMoney(view.scenarioCost)}`),
    badge,
  );
  const diff = el("ul", "diff");
  for (const entry of view.diff) {
    const where = entry.kind === "part"
      ? `p${entry.item}`
      : `f${entry.item} @ T1-${entry.consumer}`;
    diff.append(el("li", "", `${where}: ${entry.before.join("/")} -> ${entry.after.join("/")}`));
  }
  wrap.append(diff);
  return wrap;
}

export function renderBanner(message: string, kind = "info"): HTMLElement {
  return el("div", `banner ${kind}`, message);
}
