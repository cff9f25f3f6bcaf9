/** Recorded API payloads used as test fixtures (shapes match the service). */

import type {
  RunSummary,
  SuggestionCandidate,
  TriageItem,
} from "../src/types.js";

export const RUN: RunSummary = {
  run_id: "a6f1b65903d8",
  analysis_date: "2027-01-01",
  mar: 0,
  scope: { kind: "all" },
  profile_count: 290,
  suspicions: 14,
  phase_times: {
    started: "2027-01-02 20:16:31",
    phase1: "2027-01-02 20:16:32",
    phase2: "2027-01-02 20:16:32",
  },
  rule_counts: {
    normative: 5,
    profile: 20,
    learned_singular: 6,
    learned_entity: 2,
    total: 33,
  },
  recall: 1.0,
};

function attributes(): Record<string, [number, number, number]> {
  const rows: Record<string, [number, number, number]> = {};
  for (const name of [
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
  ]) {
    rows[name] = [12, 3, 1];
  }
  rows.pct_deb = [167.09, 417.08, 0];
  return rows;
}

export function makeItem(overrides: Partial<TriageItem> = {}): TriageItem {
  return {
    ordinal: 1,
    of: 14,
    suspicion_id: "2027-01-01:C017/0001/01",
    suspicion: {
      key: "C017/0001/01",
      segment: "PF",
      analysis_class: "risk2",
      original_class: "risk2",
      analysis_date: "2027-01-01",
      mar: 0,
      triggered: [
        {
          rule_id: "BCXX2026001",
          text: "Sharp drop in movement against the yearly reference",
          citation: "normative guidance",
        },
      ],
      profile: { age_years: 14, attributes: attributes() },
    },
    apd_verdict: "escalated",
    matrix_key: "BCXX2026001|risk2|0H0000000000",
    analyst_verdict: null,
    ...overrides,
  };
}

export const SUGGESTION: SuggestionCandidate = {
  id: "PF-candidate-0",
  segment: "PF",
  centroid: [1, 2, 3],
  members: 61,
  distance: 2.41,
};
