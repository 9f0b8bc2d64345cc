import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App, mountApp } from "../src/app.js";
import type { PredictionRow, SearchHit } from "../src/types.js";

const PAGE = `
  <input id="smiles-input" type="text" />
  <select id="mode-select">
    <option value="predict">predict</option>
    <option value="search">search</option>
  </select>
  <input id="topk-input" type="number" />
  <select id="family-select"></select>
  <button id="submit-button">Go</button>
  <p id="status-line"></p>
  <div id="results"></div>
  <a id="dataset-link"></a>
`;

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function rows(n: number): PredictionRow[] {
  return Array.from({ length: n }, (_, i) => ({
    protein_id: `P${i}`,
    family: i % 2 ? "Kinase" : "GPCR",
    score: Number((1 - i / 20).toFixed(3)),
    per_model_scores: [0.5],
    rank: i + 1,
  }));
}

describe("App", () => {
  let app: App;
  let client: ApiClient;
  let requests: Array<{ url: string; body: { smiles: string; top_k?: number } }>;
  let response: () => Response;

  beforeEach(() => {
    document.body.innerHTML = PAGE;
    requests = [];
    response = () => jsonResponse([]);
    client = new ApiClient("/api/v1", async (url, init) => {
      requests.push({ url, body: JSON.parse(String(init?.body)) });
      return response();
    });
    app = mountApp(document, client);
  });

  function input(id: string): HTMLInputElement {
    return document.getElementById(id) as HTMLInputElement;
  }

  it("predict renders rows in server rank order", async () => {
    response = () => jsonResponse(rows(10));
    input("smiles-input").value = "CCO";
    (document.getElementById("mode-select") as HTMLSelectElement).value = "predict";
    input("topk-input").value = "10";
    await app.submit();
    const ranks = [...document.querySelectorAll("#results table tr")]
      .slice(1)
      .map((tr) => tr.children[0].textContent);
    expect(ranks).toEqual(["1", "2", "3", "4", "5", "6", "7", "8", "9", "10"]);
    expect(requests[0].body.top_k).toBe(10);
  });

  it("search with no hits renders the empty state, not a table", async () => {
    response = () => jsonResponse([]);
    input("smiles-input").value = "[Au]";
    (document.getElementById("mode-select") as HTMLSelectElement).value = "search";
    await app.submit();
    expect(document.querySelector("#results .empty-state")?.textContent).toBe(
      "No compounds above 0.9 similarity.",
    );
    expect(document.querySelector("#results table")).toBeNull();
  });

  it("server diagnostic for malformed SMILES shows inline and no table renders", async () => {
    response = () => jsonResponse({ error: "invalid SMILES: unclosed ring bonds: [1]" }, 400);
    input("smiles-input").value = "C1CC";
    await app.submit();
    const message = document.querySelector("#results .error-message")?.textContent;
    expect(message).toContain("invalid SMILES");
    expect(document.querySelector("#results table")).toBeNull();
  });

  it("clicking a search hit loads its SMILES into the query box", async () => {
    const hits: SearchHit[] = [{ compound_id: "C9", smiles: "CCOCC", similarity: 0.97 }];
    response = () => jsonResponse(hits);
    input("smiles-input").value = "CCOC";
    (document.getElementById("mode-select") as HTMLSelectElement).value = "search";
    await app.submit();
    (document.querySelector("#results tr.hit") as HTMLElement).click();
    expect(input("smiles-input").value).toBe("CCOCC");
  });

  it("family filter updates the visible rows and clearing restores them", async () => {
    response = () => jsonResponse(rows(6));
    input("smiles-input").value = "CCO";
    await app.submit();
    const select = document.getElementById("family-select") as HTMLSelectElement;
    select.value = "Kinase";
    select.dispatchEvent(new Event("change"));
    expect(document.querySelector("#results .row-count")?.textContent).toBe("3 of 6 targets");
    select.value = "";
    select.dispatchEvent(new Event("change"));
    expect(document.querySelector("#results .row-count")?.textContent).toBe("6 targets");
  });

  it("dataset link points at the archive endpoint", () => {
    expect(
      (document.getElementById("dataset-link") as HTMLAnchorElement).getAttribute("href"),
    ).toBe("/api/v1/dataset");
  });

  it("header click sorts by score and keeps ties in server order", async () => {
    const tied = rows(4).map((r, i) => ({ ...r, score: i < 2 ? 0.9 : 0.1 }));
    response = () => jsonResponse(tied);
    input("smiles-input").value = "CCO";
    await app.submit();
    (document.querySelector("th[data-column=score]") as HTMLElement).click();
    const proteins = [...document.querySelectorAll("#results table tr")]
      .slice(1)
      .map((tr) => tr.children[1].textContent);
    expect(proteins).toEqual(["P0", "P1", "P2", "P3"]);
  });
});
