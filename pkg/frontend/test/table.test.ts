import { describe, expect, it } from "vitest";

import {
  EMPTY_SEARCH_MESSAGE,
  familiesOf,
  filterByFamily,
  renderError,
  renderPredictTable,
  renderSearchTable,
  sortPredictions,
} from "../src/table.js";
import type { PredictionRow, SearchHit } from "../src/types.js";

function predictions(): PredictionRow[] {
  return [
    { protein_id: "P2", family: "Kinase", score: 0.92, per_model_scores: [0.92], rank: 1 },
    { protein_id: "P5", family: "GPCR", score: 0.81, per_model_scores: [0.81], rank: 2 },
    { protein_id: "P1", family: "Kinase", score: 0.81, per_model_scores: [0.81], rank: 3 },
    { protein_id: "P4", family: "Other", score: 0.33, per_model_scores: [0.33], rank: 4 },
  ];
}

function cellText(table: HTMLElement, column: number): string[] {
  return [...table.querySelectorAll("tr")]
    .slice(1) // header
    .map((tr) => tr.children[column].textContent ?? "");
}

describe("sortPredictions", () => {
  it("unsorted view keeps server rank order", () => {
    const rows = sortPredictions(predictions());
    expect(rows.map((r) => r.rank)).toEqual([1, 2, 3, 4]);
  });

  it("sort is stable: tied scores keep server order", () => {
    const rows = sortPredictions(predictions(), { column: "score", descending: true });
    expect(rows.map((r) => r.protein_id)).toEqual(["P2", "P5", "P1", "P4"]);
  });

  it("ascending and descending toggle", () => {
    const asc = sortPredictions(predictions(), { column: "score", descending: false });
    expect(asc[0].protein_id).toBe("P4");
  });
});

describe("filterByFamily", () => {
  it("keeps only matching rows and null clears", () => {
    expect(filterByFamily(predictions(), "Kinase").map((r) => r.protein_id)).toEqual(["P2", "P1"]);
    expect(filterByFamily(predictions(), null)).toHaveLength(4);
  });

  it("familiesOf lists distinct families sorted", () => {
    expect(familiesOf(predictions())).toEqual(["GPCR", "Kinase", "Other"]);
  });
});

describe("renderPredictTable", () => {
  it("renders rows in server order with 3-decimal scores", () => {
    const el = renderPredictTable(document, predictions());
    expect(cellText(el, 0)).toEqual(["1", "2", "3", "4"]);
    expect(cellText(el, 3)).toEqual(["0.920", "0.810", "0.810", "0.330"]);
  });

  it("family filter hides rows and updates the count line", () => {
    const el = renderPredictTable(document, predictions(), { family: "Kinase" });
    expect(cellText(el, 1)).toEqual(["P2", "P1"]);
    expect(el.querySelector(".row-count")?.textContent).toBe("2 of 4 targets");
  });

  it("clearing the filter restores the full table", () => {
    const el = renderPredictTable(document, predictions(), { family: null });
    expect(cellText(el, 1)).toEqual(["P2", "P5", "P1", "P4"]);
    expect(el.querySelector(".row-count")?.textContent).toBe("4 targets");
  });

  it("clicking a sortable header invokes the sort callback", () => {
    const clicked: string[] = [];
    const el = renderPredictTable(document, predictions(), { onSort: (c) => clicked.push(c) });
    (el.querySelector("th[data-column=score]") as HTMLElement).click();
    expect(clicked).toEqual(["score"]);
  });
});

describe("renderSearchTable", () => {
  const hits: SearchHit[] = [
    { compound_id: "C1", smiles: "CCO", similarity: 1.0 },
    { compound_id: "C2", smiles: "CCOC", similarity: 0.923 },
  ];

  it("renders hits with 3-decimal similarity", () => {
    const el = renderSearchTable(document, hits);
    expect(cellText(el, 2)).toEqual(["1.000", "0.923"]);
  });

  it("empty result renders the documented empty state", () => {
    const el = renderSearchTable(document, []);
    expect(el.querySelector(".empty-state")?.textContent).toBe(EMPTY_SEARCH_MESSAGE);
    expect(el.querySelector("table")).toBeNull();
  });

  it("clicking a hit pivots its SMILES", () => {
    const pivoted: string[] = [];
    const el = renderSearchTable(document, hits, { onPivot: (s) => pivoted.push(s) });
    (el.querySelectorAll("tr.hit")[1] as HTMLElement).click();
    expect(pivoted).toEqual(["CCOC"]);
  });
});

describe("renderError", () => {
  it("inline message without retry for 400s", () => {
    const el = renderError(document, "invalid SMILES: empty SMILES", false);
    expect(el.querySelector(".error-message")?.textContent).toContain("invalid SMILES");
    expect(el.querySelector("button.retry")).toBeNull();
  });

  it("offers retry for network failures", () => {
    let retried = 0;
    const el = renderError(document, "network failure", true, () => {
      retried += 1;
    });
    (el.querySelector("button.retry") as HTMLElement).click();
    expect(retried).toBe(1);
  });
});
