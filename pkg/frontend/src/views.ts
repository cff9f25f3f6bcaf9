/** DOM builders for each screen. All data arrives pre-computed from the
 * API; these functions only lay it out. */

import {
  ATTRIBUTE_ORDER,
  CLASS_ORDER,
  classLabel,
  effectiveVerdict,
  ordinalLabel,
  ruleOptions,
  splitKey,
  tripleLabel,
} from "./format.js";
import type {
  RunSummary,
  SuggestionCandidate,
  TriageItem,
  WhatIfResult,
} from "./types.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    if (name === "class") node.className = value;
    else node.setAttribute(name, value);
  }
  node.append(...children);
  return node;
}

export function runPicker(
  runs: RunSummary[],
  selected: string | null,
  onPick: (runId: string) => void,
): HTMLElement {
  const select = el("select", { class: "run-picker", "data-testid": "run-picker" });
  for (const run of runs) {
    const label =
      `${run.run_id} — ${run.analysis_date}, margin ${run.mar}%, ` +
      `${run.suspicions} suspicions`;
    const option = el("option", { value: run.run_id }, [label]);
    if (run.run_id === selected) option.selected = true;
    select.append(option);
  }
  select.addEventListener("change", () => onPick(select.value));
  return select;
}

export interface QueueHandlers {
  onFilterRule: (rule: string) => void;
  onFilterClass: (profileClass: string) => void;
  onOpen: (ordinal: number) => void;
}

export function queueView(
  items: TriageItem[],
  total: number,
  filterRule: string,
  filterClass: string,
  handlers: QueueHandlers,
): HTMLElement {
  const root = el("section", { class: "queue" });

  const ruleSelect = el("select", { "data-testid": "rule-filter" });
  ruleSelect.append(el("option", { value: "" }, ["All rules"]));
  for (const id of ruleOptions(items)) {
    const option = el("option", { value: id }, [id]);
    if (id === filterRule) option.selected = true;
    ruleSelect.append(option);
  }
  ruleSelect.addEventListener("change", () =>
    handlers.onFilterRule(ruleSelect.value),
  );

  const classSelect = el("select", { "data-testid": "class-filter" });
  classSelect.append(el("option", { value: "" }, ["All classes"]));
  for (const cls of CLASS_ORDER) {
    const option = el("option", { value: cls }, [classLabel(cls)]);
    if (cls === filterClass) option.selected = true;
    classSelect.append(option);
  }
  classSelect.addEventListener("change", () =>
    handlers.onFilterClass(classSelect.value),
  );

  root.append(
    el("div", { class: "filters" }, [
      el("label", {}, ["Rule ", ruleSelect]),
      el("label", {}, ["Class ", classSelect]),
      el("span", { class: "queue-count", "data-testid": "queue-count" }, [
        `${items.length} of ${total} suspicions`,
      ]),
    ]),
  );

  const list = el("ul", { class: "queue-items" });
  for (const item of items) {
    const verdict = effectiveVerdict(item);
    const row = el(
      "li",
      {
        class: verdict.escalated ? "item escalated" : "item decided",
        "data-testid": `item-${item.ordinal}`,
      },
      [
        el("span", { class: "ordinal" }, [ordinalLabel(item)]),
        el("span", { class: "key" }, [item.suspicion.key]),
        el("span", { class: "class" }, [
          classLabel(item.suspicion.analysis_class),
        ]),
        el(
          "span",
          {
            class: `verdict ${verdict.verdict}` +
              (verdict.byAnalyst ? " by-analyst" : ""),
          },
          [verdict.byAnalyst ? `${verdict.verdict} (analyst)` : verdict.verdict],
        ),
      ],
    );
    row.addEventListener("click", () => handlers.onOpen(item.ordinal));
    list.append(row);
  }
  root.append(list);
  return root;
}

export interface DetailHandlers {
  onVerdict: (verdict: "confirmed" | "rejected") => void;
  onBack: () => void;
}

export function detailView(
  item: TriageItem,
  error: string | null,
  handlers: DetailHandlers,
): HTMLElement {
  const suspicion = item.suspicion;
  const ids = splitKey(suspicion.key);
  const verdict = effectiveVerdict(item);
  const root = el("section", { class: "detail", "data-testid": "detail" });

  const back = el("button", { class: "back" }, ["Back to queue"]);
  back.addEventListener("click", handlers.onBack);

  root.append(
    back,
    el("h2", {}, [`Suspect ${ordinalLabel(item)}`]),
    el("dl", { class: "identity" }, [
      el("dt", {}, ["Client"]),
      el("dd", { "data-testid": "client" }, [ids.client]),
      el("dt", {}, ["Agency"]),
      el("dd", {}, [ids.agency]),
      el("dt", {}, ["Account"]),
      el("dd", {}, [ids.account]),
      el("dt", {}, ["Segment"]),
      el("dd", {}, [suspicion.segment]),
      el("dt", {}, ["Account age"]),
      el("dd", {}, [`${suspicion.profile.age_years} years`]),
      el("dt", {}, ["Class"]),
      el("dd", { "data-testid": "classes" }, [
        `${classLabel(suspicion.analysis_class)} ` +
          `(original: ${classLabel(suspicion.original_class)})`,
      ]),
      el("dt", {}, ["Verdict"]),
      el(
        "dd",
        {
          class: verdict.escalated ? "verdict escalated" : "verdict",
          "data-testid": "verdict",
        },
        [verdict.byAnalyst ? `${verdict.verdict} (analyst)` : verdict.verdict],
      ),
    ]),
  );

  const table = el("table", { class: "attributes" });
  table.append(
    el("tr", {}, [
      el("th", {}, ["attribute"]),
      el("th", {}, ["annual total"]),
      el("th", {}, ["monthly max"]),
      el("th", {}, ["window"]),
    ]),
  );
  for (const name of ATTRIBUTE_ORDER) {
    const triple = suspicion.profile.attributes[name];
    if (!triple) continue;
    table.append(
      el("tr", { "data-testid": `attr-${name}` }, [
        el("td", {}, [name]),
        ...tripleLabel(triple)
          .split(" / ")
          .map((value) => el("td", {}, [value])),
      ]),
    );
  }
  root.append(table);

  const rules = el("ul", { class: "rules" });
  for (const rule of suspicion.triggered) {
    rules.append(
      el("li", { "data-testid": `rule-${rule.rule_id}` }, [
        el("strong", {}, [rule.rule_id]),
        ` ${rule.text}`,
        rule.citation ? el("em", {}, [` [${rule.citation}]`]) : "",
      ]),
    );
  }
  root.append(el("h3", {}, ["Triggered rules"]), rules);

  if (item.analyst_verdict === null) {
    const confirm = el("button", { class: "confirm", "data-testid": "confirm" }, [
      "Confirm",
    ]);
    const reject = el("button", { class: "reject", "data-testid": "reject" }, [
      "Reject",
    ]);
    confirm.addEventListener("click", () => handlers.onVerdict("confirmed"));
    reject.addEventListener("click", () => handlers.onVerdict("rejected"));
    root.append(el("div", { class: "actions" }, [confirm, reject]));
  }
  if (error) {
    root.append(
      el("p", { class: "error", "data-testid": "error" }, [error]),
    );
  }
  return root;
}

export function suggestionsView(
  candidates: SuggestionCandidate[],
  checked: Set<string>,
  handlers: {
    onToggle: (id: string, accepted: boolean) => void;
    onRefresh: () => void;
    onValidate: () => void;
  },
): HTMLElement {
  const root = el("section", { class: "suggestions" });
  const refresh = el("button", { "data-testid": "refresh" }, [
    "Refresh suggestions",
  ]);
  refresh.addEventListener("click", handlers.onRefresh);
  root.append(el("h2", {}, ["Profile suggestions"]), refresh);

  const list = el("ul", {});
  for (const candidate of candidates) {
    const box = el("input", {
      type: "checkbox",
      "data-testid": `accept-${candidate.id}`,
    });
    box.checked = checked.has(candidate.id);
    box.addEventListener("change", () =>
      handlers.onToggle(candidate.id, box.checked),
    );
    list.append(
      el("li", {}, [
        box,
        ` ${candidate.id} — segment ${candidate.segment}, ` +
          `${candidate.members} profiles, distance ${candidate.distance.toFixed(2)}`,
      ]),
    );
  }
  root.append(list);

  if (candidates.length > 0) {
    const validate = el("button", { "data-testid": "validate" }, [
      "Apply validation",
    ]);
    validate.addEventListener("click", handlers.onValidate);
    root.append(validate);
  } else {
    root.append(el("p", {}, ["No pending suggestions."]));
  }
  return root;
}

export function whatIfView(
  results: WhatIfResult[] | null,
  busy: boolean,
  error: string | null,
  onCompare: (mars: number[]) => void,
): HTMLElement {
  const root = el("section", { class: "whatif" });
  root.append(el("h2", {}, ["What-if margin comparison"]));
  const input = el("input", {
    type: "text",
    value: "0, 5, 10, 20",
    "data-testid": "mars",
  });
  const button = el("button", { "data-testid": "compare" }, [
    busy ? "Running…" : "Compare",
  ]);
  if (busy) button.setAttribute("disabled", "disabled");
  button.addEventListener("click", () => {
    const mars = input.value
      .split(",")
      .map((part) => Number(part.trim()))
      .filter((value) => Number.isFinite(value));
    onCompare(mars);
  });
  root.append(el("div", {}, [input, button]));

  if (error) {
    root.append(el("p", { class: "error", "data-testid": "error" }, [error]));
  }
  if (results) {
    const table = el("table", { "data-testid": "whatif-results" });
    table.append(
      el("tr", {}, [
        el("th", {}, ["margin %"]),
        el("th", {}, ["run"]),
        el("th", {}, ["suspicions"]),
      ]),
    );
    for (const row of results) {
      table.append(
        el("tr", {}, [
          el("td", {}, [String(row.mar)]),
          el("td", {}, [row.run_id]),
          el("td", {}, [String(row.suspicions)]),
        ]),
      );
    }
    root.append(table);
  }
  return root;
}
