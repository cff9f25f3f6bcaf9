import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import { RUN, makeItem } from "./fixtures.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function route(handlers: Record<string, (init?: RequestInit) => unknown>) {
  return vi.fn(async (url: string, init?: RequestInit) => {
    const method = init?.method ?? "GET";
    const key = `${method} ${url}`;
    for (const [pattern, handler] of Object.entries(handlers)) {
      if (key.startsWith(pattern)) {
        const result = handler(init);
        return result instanceof Response ? result : jsonResponse(result);
      }
    }
    throw new Error(`unrouted request: ${key}`);
  });
}

async function settle() {
  // Let the chained fetch/render promises flush.
  for (let i = 0; i < 5; i += 1) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

describe("App", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app") as HTMLElement;
  });

  it("boots into the newest run's queue", async () => {
    const fetchMock = route({
      "GET /api/v1/runs/a6f1b65903d8/queue": () => ({
        run_id: RUN.run_id,
        total: 14,
        items: [makeItem()],
      }),
      "GET /api/v1/runs": () => [RUN],
    });
    const app = new App(new ApiClient("/api/v1", fetchMock as never), root);
    await app.start();
    await settle();
    expect(root.querySelector('[data-testid="queue-count"]')!.textContent).toBe(
      "1 of 14 suspicions",
    );
  });

  it("submits a verdict and surfaces a conflict inline", async () => {
    let verdictCalls = 0;
    const fetchMock = route({
      "POST /api/v1/runs/a6f1b65903d8/items/1/verdict": () => {
        verdictCalls += 1;
        return jsonResponse(
          { detail: "item already decided: confirmed" },
          409,
        );
      },
      "GET /api/v1/runs/a6f1b65903d8/items/1": () => makeItem(),
      "GET /api/v1/runs/a6f1b65903d8/queue": () => ({
        run_id: RUN.run_id,
        total: 14,
        items: [makeItem()],
      }),
      "GET /api/v1/runs": () => [RUN],
    });
    const app = new App(new ApiClient("/api/v1", fetchMock as never), root);
    await app.start();
    await settle();

    (root.querySelector('[data-testid="item-1"]') as HTMLElement).click();
    await settle();
    expect(root.querySelector('[data-testid="detail"]')).not.toBeNull();

    (root.querySelector('[data-testid="confirm"]') as HTMLElement).click();
    await settle();
    expect(verdictCalls).toBe(1);
    expect(root.querySelector('[data-testid="error"]')!.textContent).toBe(
      "item already decided: confirmed",
    );
  });

  it("runs a what-if comparison against the selected run's date", async () => {
    const fetchMock = route({
      "POST /api/v1/whatif": (init) => {
        const body = JSON.parse(String(init?.body));
        expect(body.analysis_date).toBe("2027-01-01");
        return {
          results: body.mars.map((mar: number, i: number) => ({
            mar,
            run_id: `r${i}`,
            suspicions: 14 + i,
          })),
        };
      },
      "GET /api/v1/runs/a6f1b65903d8/queue": () => ({
        run_id: RUN.run_id,
        total: 14,
        items: [],
      }),
      "GET /api/v1/runs/a6f1b65903d8": () => RUN,
      "GET /api/v1/runs": () => [RUN],
    });
    const app = new App(new ApiClient("/api/v1", fetchMock as never), root);
    await app.start();
    await settle();

    const tabs = [...root.querySelectorAll("nav .tab")] as HTMLElement[];
    tabs.find((tab) => tab.textContent === "What-if")!.click();
    await settle();

    (root.querySelector('[data-testid="compare"]') as HTMLElement).click();
    await settle();
    await settle();

    const cells = [
      ...root.querySelectorAll('[data-testid="whatif-results"] td'),
    ].map((cell) => cell.textContent);
    expect(cells).toEqual(["0", "r0", "14", "5", "r1", "15", "10", "r2", "16", "20", "r3", "17"]);
  });
});
