/** Payload shapes of the monitoring service's JSON API (/api/v1). */

export interface RunSummary {
  run_id: string;
  analysis_date: string;
  mar: number;
  scope: Record<string, string>;
  profile_count: number;
  suspicions: number;
  phase_times: Record<string, string>;
  rule_counts: Record<string, number>;
  recall: number | null;
}

export interface TriggeredRule {
  rule_id: string;
  text: string;
  citation: string;
}

export interface AttributeTriple {
  /** [annual total, monthly max, window value] */
  0: number;
  1: number;
  2: number;
  length: 3;
}

export interface SuspicionProfile {
  age_years: number;
  attributes: Record<string, [number, number, number]>;
}

export interface Suspicion {
  key: string;
  segment: string;
  analysis_class: string;
  original_class: string;
  analysis_date: string;
  mar: number;
  triggered: TriggeredRule[];
  profile: SuspicionProfile;
}

export type Verdict = "confirmed" | "rejected" | "escalated";

export interface TriageItem {
  ordinal: number;
  of: number;
  suspicion_id: string;
  suspicion: Suspicion;
  apd_verdict: Verdict;
  matrix_key: string;
  analyst_verdict: "confirmed" | "rejected" | null;
}

export interface QueueResponse {
  run_id: string;
  total: number;
  items: TriageItem[];
}

export interface SuggestionCandidate {
  id: string;
  segment: string;
  centroid: number[];
  members: number;
  distance: number;
}

export interface WhatIfResult {
  mar: number;
  run_id: string;
  suspicions: number;
}

export interface ApiErrorBody {
  detail?: string;
}
