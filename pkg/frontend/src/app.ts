/** Single-page triage app: queue, suspect detail, suggestions, what-if.
 * State other than the current view lives server-side. */

import { ApiClient, ApiError } from "./api.js";
import type { SuggestionCandidate, TriageItem, WhatIfResult } from "./types.js";
import {
  detailView,
  el,
  queueView,
  runPicker,
  suggestionsView,
  whatIfView,
} from "./views.js";

type Screen = "queue" | "detail" | "suggestions" | "whatif";

export class App {
  private screen: Screen = "queue";
  private runId: string | null = null;
  private filterRule = "";
  private filterClass = "";
  private currentOrdinal: number | null = null;
  private detailError: string | null = null;
  private accepted = new Set<string>();
  private whatIfResults: WhatIfResult[] | null = null;
  private whatIfBusy = false;
  private whatIfError: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    const runs = await this.api.listRuns();
    if (runs.length > 0) this.runId = runs[0].run_id;
    await this.render();
  }

  private nav(): HTMLElement {
    const bar = el("nav", {});
    const tabs: [Screen, string][] = [
      ["queue", "Queue"],
      ["suggestions", "Suggestions"],
      ["whatif", "What-if"],
    ];
    for (const [screen, label] of tabs) {
      const button = el(
        "button",
        { class: this.screen === screen ? "tab active" : "tab" },
        [label],
      );
      button.addEventListener("click", () => {
        this.screen = screen;
        void this.render();
      });
      bar.append(button);
    }
    return bar;
  }

  async render(): Promise<void> {
    this.root.replaceChildren();
    this.root.append(el("h1", {}, ["Transaction monitoring triage"]));

    const runs = await this.api.listRuns();
    if (this.runId === null && runs.length > 0) this.runId = runs[0].run_id;
    this.root.append(
      runPicker(runs, this.runId, (runId) => {
        this.runId = runId;
        this.currentOrdinal = null;
        this.screen = "queue";
        void this.render();
      }),
      this.nav(),
    );

    if (this.screen === "queue") await this.renderQueue();
    else if (this.screen === "detail") await this.renderDetail();
    else if (this.screen === "suggestions") await this.renderSuggestions();
    else this.renderWhatIf();
  }

  private async renderQueue(): Promise<void> {
    if (this.runId === null) {
      this.root.append(el("p", {}, ["No runs yet."]));
      return;
    }
    const queue = await this.api.queue(this.runId, {
      rule: this.filterRule || undefined,
      profileClass: this.filterClass || undefined,
    });
    this.root.append(
      queueView(queue.items, queue.total, this.filterRule, this.filterClass, {
        onFilterRule: (rule) => {
          this.filterRule = rule;
          void this.render();
        },
        onFilterClass: (profileClass) => {
          this.filterClass = profileClass;
          void this.render();
        },
        onOpen: (ordinal) => {
          this.currentOrdinal = ordinal;
          this.detailError = null;
          this.screen = "detail";
          void this.render();
        },
      }),
    );
  }

  private async renderDetail(): Promise<void> {
    if (this.runId === null || this.currentOrdinal === null) {
      this.screen = "queue";
      await this.renderQueue();
      return;
    }
    const item = await this.api.item(this.runId, this.currentOrdinal);
    this.root.append(
      detailView(item, this.detailError, {
        onBack: () => {
          this.screen = "queue";
          this.detailError = null;
          void this.render();
        },
        onVerdict: (verdict) => void this.submitVerdict(item, verdict),
      }),
    );
  }

  private async submitVerdict(
    item: TriageItem,
    verdict: "confirmed" | "rejected",
  ): Promise<void> {
    if (this.runId === null) return;
    try {
      await this.api.submitVerdict(this.runId, item.ordinal, verdict);
      this.detailError = null;
      // Advance to the next item, wrapping back to the queue at the end.
      if (item.ordinal < item.of) {
        this.currentOrdinal = item.ordinal + 1;
      } else {
        this.screen = "queue";
        this.currentOrdinal = null;
      }
    } catch (error) {
      // Conflicts surface the existing verdict; other failures their reason.
      this.detailError =
        error instanceof ApiError ? error.detail : String(error);
    }
    await this.render();
  }

  private async renderSuggestions(): Promise<void> {
    const { candidates } = await this.api.suggestions();
    this.root.append(this.buildSuggestions(candidates));
  }

  private buildSuggestions(candidates: SuggestionCandidate[]): HTMLElement {
    return suggestionsView(candidates, this.accepted, {
      onToggle: (id, acceptedNow) => {
        if (acceptedNow) this.accepted.add(id);
        else this.accepted.delete(id);
      },
      onRefresh: () => {
        void this.api.refreshSuggestions().then(() => {
          this.accepted.clear();
          return this.render();
        });
      },
      onValidate: () => {
        void (async () => {
          const { candidates: pending } = await this.api.suggestions();
          const accepted = pending
            .map((candidate) => candidate.id)
            .filter((id) => this.accepted.has(id));
          const rejected = pending
            .map((candidate) => candidate.id)
            .filter((id) => !this.accepted.has(id));
          await this.api.validateSuggestions(accepted, rejected);
          this.accepted.clear();
          await this.render();
        })();
      },
    });
  }

  private renderWhatIf(): void {
    this.root.append(
      whatIfView(
        this.whatIfResults,
        this.whatIfBusy,
        this.whatIfError,
        (mars) => void this.runWhatIf(mars),
      ),
    );
  }

  private async runWhatIf(mars: number[]): Promise<void> {
    if (this.runId === null) return;
    const status = await this.api.runStatus(this.runId);
    this.whatIfBusy = true;
    this.whatIfError = null;
    await this.render();
    try {
      const { results } = await this.api.whatIf(status.analysis_date, mars);
      this.whatIfResults = results;
    } catch (error) {
      this.whatIfError =
        error instanceof ApiError ? error.detail : String(error);
    } finally {
      this.whatIfBusy = false;
    }
    await this.render();
  }
}

export function mount(root: HTMLElement, api = new ApiClient()): App {
  const app = new App(api, root);
  void app.start();
  return app;
}

declare global {
  interface Window {
    __triageApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.__triageApp = mount(document.getElementById("app") as HTMLElement);
}
