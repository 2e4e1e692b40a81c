// Money rendering: raw values stay in data attributes for traceability;
// the visible text is formatted with an explicit unit label.

export const MONEY_UNIT = "GBP";

export function formatMoney(value: number | null): string {
  if (value === null) return "-";
  return `${value.toLocaleString("en-GB", {
    minimumFractionDigits: 2,
    maximumFractionDigits: 2,
  })} ${MONEY_UNIT}`;
}

export function formatDelta(value: number | null): string {
  if (value === null) return "-";
  const sign = value > 0 ? "+" : "";
  return `${sign}${formatMoney(value)}`;
}

export function itemLabel(kind: string, index: number): string {
  const prefix =
    kind === "part_blue" ? "pB" : kind === "part_llv" ? "pL"
    : kind === "forging_blue" ? "fB" : "fL";
  return `${prefix}${index}`;
}
