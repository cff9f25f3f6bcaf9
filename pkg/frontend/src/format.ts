/** Pure presentation helpers. Values are rendered verbatim from the API;
 * nothing here recomputes attributes or detection results. */

import type { TriageItem } from "./types.js";

export const CLASS_LABELS: Record<string, string> = {
  low_usage: "low usage",
  standard: "standard",
  risk1: "risk 1",
  risk2: "risk 2",
  risk3: "risk 3",
};

export const CLASS_ORDER = [
  "low_usage",
  "standard",
  "risk1",
  "risk2",
  "risk3",
];

export const ATTRIBUTE_ORDER = [
  "serv",
  "movl",
  "band1",
  "band2",
  "band3",
  "band4",
  "band5",
  "band6",
  "pct_deb",
  "pct_ted",
  "pct_doc",
];

export function classLabel(value: string): string {
  return CLASS_LABELS[value] ?? value;
}

export function ordinalLabel(item: Pick<TriageItem, "ordinal" | "of">): string {
  return `${item.ordinal} / ${item.of}`;
}

/** Identifier key "client/agency/account" split for display. */
export function splitKey(key: string): {
  client: string;
  agency: string;
  account: string;
} {
  const [client = "", agency = "", account = ""] = key.split("/");
  return { client, agency, account };
}

export function formatValue(value: number): string {
  return Number.isInteger(value) ? String(value) : value.toFixed(2);
}

export function tripleLabel(triple: [number, number, number]): string {
  return triple.map(formatValue).join(" / ");
}

/** Effective verdict to display: the analyst's when present, else the
 * automated one. */
export function effectiveVerdict(item: TriageItem): {
  verdict: string;
  byAnalyst: boolean;
  escalated: boolean;
} {
  if (item.analyst_verdict !== null) {
    return { verdict: item.analyst_verdict, byAnalyst: true, escalated: false };
  }
  return {
    verdict: item.apd_verdict,
    byAnalyst: false,
    escalated: item.apd_verdict === "escalated",
  };
}

/** Distinct rule ids available for filtering, in id order, from the queue
 * payload itself. */
export function ruleOptions(items: TriageItem[]): string[] {
  const ids = new Set<string>();
  for (const item of items) {
    for (const rule of item.suspicion.triggered) ids.add(rule.rule_id);
  }
  return [...ids].sort();
}
