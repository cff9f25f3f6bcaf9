import { describe, expect, it, vi } from "vitest";

import { detailView, queueView, suggestionsView, whatIfView } from "../src/views.js";
import { SUGGESTION, makeItem } from "./fixtures.js";

describe("queue view", () => {
  it("shows API counts verbatim and the i / N ordinal", () => {
    const items = [makeItem(), makeItem({ ordinal: 2 })];
    const view = queueView(items, 14, "", "", {
      onFilterRule: () => {},
      onFilterClass: () => {},
      onOpen: () => {},
    });
    expect(view.querySelector('[data-testid="queue-count"]')!.textContent).toBe(
      "2 of 14 suspicions",
    );
    expect(view.querySelector(".ordinal")!.textContent).toBe("1 / 14");
  });

  it("marks escalated items visually distinct from auto-decided ones", () => {
    const items = [makeItem(), makeItem({ ordinal: 2, apd_verdict: "rejected" })];
    const view = queueView(items, 14, "", "", {
      onFilterRule: () => {},
      onFilterClass: () => {},
      onOpen: () => {},
    });
    expect(
      view.querySelector('[data-testid="item-1"]')!.classList.contains("escalated"),
    ).toBe(true);
    expect(
      view.querySelector('[data-testid="item-2"]')!.classList.contains("escalated"),
    ).toBe(false);
  });

  it("raises filter changes and item opens to the handlers", () => {
    const onFilterRule = vi.fn();
    const onOpen = vi.fn();
    const view = queueView([makeItem()], 14, "", "", {
      onFilterRule,
      onFilterClass: () => {},
      onOpen,
    });
    const filter = view.querySelector(
      '[data-testid="rule-filter"]',
    ) as HTMLSelectElement;
    filter.value = "BCXX2026001";
    filter.dispatchEvent(new Event("change"));
    expect(onFilterRule).toHaveBeenCalledWith("BCXX2026001");

    (view.querySelector('[data-testid="item-1"]') as HTMLElement).click();
    expect(onOpen).toHaveBeenCalledWith(1);
  });
});

describe("detail view", () => {
  it("renders the API payload without recomputation", () => {
    const view = detailView(makeItem(), null, {
      onVerdict: () => {},
      onBack: () => {},
    });
    expect(view.querySelector('[data-testid="client"]')!.textContent).toBe(
      "C017",
    );
    expect(view.querySelector('[data-testid="classes"]')!.textContent).toBe(
      "risk 2 (original: risk 2)",
    );
    const row = view.querySelector('[data-testid="attr-pct_deb"]')!;
    expect([...row.querySelectorAll("td")].map((td) => td.textContent)).toEqual(
      ["pct_deb", "167.09", "417.08", "0"],
    );
    expect(
      view.querySelector('[data-testid="rule-BCXX2026001"]')!.textContent,
    ).toContain("Sharp drop in movement");
  });

  it("offers confirm/reject only while no analyst verdict exists", () => {
    const pending = detailView(makeItem(), null, {
      onVerdict: () => {},
      onBack: () => {},
    });
    expect(pending.querySelector('[data-testid="confirm"]')).not.toBeNull();

    const decided = detailView(makeItem({ analyst_verdict: "rejected" }), null, {
      onVerdict: () => {},
      onBack: () => {},
    });
    expect(decided.querySelector('[data-testid="confirm"]')).toBeNull();
    expect(decided.querySelector('[data-testid="verdict"]')!.textContent).toBe(
      "rejected (analyst)",
    );
  });

  it("shows submit errors such as conflicts inline", () => {
    const view = detailView(makeItem(), "item already decided: confirmed", {
      onVerdict: () => {},
      onBack: () => {},
    });
    expect(view.querySelector('[data-testid="error"]')!.textContent).toBe(
      "item already decided: confirmed",
    );
  });

  it("sends the chosen verdict to the handler", () => {
    const onVerdict = vi.fn();
    const view = detailView(makeItem(), null, { onVerdict, onBack: () => {} });
    (view.querySelector('[data-testid="reject"]') as HTMLElement).click();
    expect(onVerdict).toHaveBeenCalledWith("rejected");
  });
});

describe("suggestions view", () => {
  it("lists candidates with toggles and validates the selection", () => {
    const onToggle = vi.fn();
    const onValidate = vi.fn();
    const view = suggestionsView([SUGGESTION], new Set(), {
      onToggle,
      onRefresh: () => {},
      onValidate,
    });
    const box = view.querySelector(
      '[data-testid="accept-PF-candidate-0"]',
    ) as HTMLInputElement;
    box.checked = true;
    box.dispatchEvent(new Event("change"));
    expect(onToggle).toHaveBeenCalledWith("PF-candidate-0", true);

    (view.querySelector('[data-testid="validate"]') as HTMLElement).click();
    expect(onValidate).toHaveBeenCalled();
  });

  it("hides the validate button when nothing is pending", () => {
    const view = suggestionsView([], new Set(), {
      onToggle: () => {},
      onRefresh: () => {},
      onValidate: () => {},
    });
    expect(view.querySelector('[data-testid="validate"]')).toBeNull();
    expect(view.textContent).toContain("No pending suggestions.");
  });
});

describe("what-if view", () => {
  it("renders the API's per-margin counts verbatim", () => {
    const view = whatIfView(
      [
        { mar: 0, run_id: "a", suspicions: 14 },
        { mar: 10, run_id: "b", suspicions: 15 },
      ],
      false,
      null,
      () => {},
    );
    const cells = [...view.querySelectorAll("td")].map(
      (cell) => cell.textContent,
    );
    expect(cells).toEqual(["0", "a", "14", "10", "b", "15"]);
  });

  it("parses the margin list and reports comparisons", () => {
    const onCompare = vi.fn();
    const view = whatIfView(null, false, null, onCompare);
    const input = view.querySelector('[data-testid="mars"]') as HTMLInputElement;
    input.value = "0, 5, x, 20";
    (view.querySelector('[data-testid="compare"]') as HTMLElement).click();
    expect(onCompare).toHaveBeenCalledWith([0, 5, 20]);
  });

  it("shows run failures with their reason", () => {
    const view = whatIfView(null, false, "run failed: learn first", () => {});
    expect(view.querySelector('[data-testid="error"]')!.textContent).toBe(
      "run failed: learn first",
    );
  });
});
