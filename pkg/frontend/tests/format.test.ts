import { describe, expect, it } from "vitest";

import {
  classLabel,
  effectiveVerdict,
  formatValue,
  ordinalLabel,
  ruleOptions,
  splitKey,
  tripleLabel,
} from "../src/format.js";
import { makeItem } from "./fixtures.js";

describe("format helpers", () => {
  it("labels classes for display", () => {
    expect(classLabel("low_usage")).toBe("low usage");
    expect(classLabel("risk2")).toBe("risk 2");
    expect(classLabel("unknown")).toBe("unknown");
  });

  it("shows the ordinal as i / N", () => {
    expect(ordinalLabel({ ordinal: 3, of: 14 })).toBe("3 / 14");
  });

  it("splits the account key into its identifiers", () => {
    expect(splitKey("C017/0001/01")).toEqual({
      client: "C017",
      agency: "0001",
      account: "01",
    });
  });

  it("renders integers plainly and fractions with two decimals", () => {
    expect(formatValue(12)).toBe("12");
    expect(formatValue(167.09)).toBe("167.09");
    expect(tripleLabel([697, 65, 1])).toBe("697 / 65 / 1");
  });

  it("prefers the analyst verdict and marks escalation", () => {
    expect(effectiveVerdict(makeItem())).toEqual({
      verdict: "escalated",
      byAnalyst: false,
      escalated: true,
    });
    expect(
      effectiveVerdict(makeItem({ analyst_verdict: "confirmed" })),
    ).toEqual({ verdict: "confirmed", byAnalyst: true, escalated: false });
    expect(effectiveVerdict(makeItem({ apd_verdict: "rejected" }))).toEqual({
      verdict: "rejected",
      byAnalyst: false,
      escalated: false,
    });
  });

  it("collects rule filter options from the queue payload", () => {
    const a = makeItem();
    const b = makeItem({
      suspicion: {
        ...makeItem().suspicion,
        triggered: [
          { rule_id: "PCXX2026011", text: "", citation: "" },
          { rule_id: "BCXX2026001", text: "", citation: "" },
        ],
      },
    });
    expect(ruleOptions([a, b])).toEqual(["BCXX2026001", "PCXX2026011"]);
  });
});
