import type { PredictionRow, SearchHit } from "./types.js";

export const EMPTY_SEARCH_MESSAGE = "No compounds above 0.9 similarity.";

export interface SortSpec {
  column: string;
  descending: boolean;
}

/** Stable sort: equal keys keep their current (server) order. */
function stableSort<T>(rows: T[], key: (row: T) => number | string, descending: boolean): T[] {
  return rows
    .map((row, index) => ({ row, index }))
    .sort((a, b) => {
      const ka = key(a.row);
      const kb = key(b.row);
      let cmp = ka < kb ? -1 : ka > kb ? 1 : 0;
      if (descending) cmp = -cmp;
      return cmp !== 0 ? cmp : a.index - b.index;
    })
    .map((entry) => entry.row);
}

export function sortPredictions(rows: PredictionRow[], sort?: SortSpec): PredictionRow[] {
  if (!sort) return [...rows]; // unsorted view = server rank order
  const keys: Record<string, (r: PredictionRow) => number | string> = {
    rank: (r) => r.rank,
    protein: (r) => r.protein_id,
    family: (r) => r.family,
    score: (r) => r.score,
  };
  return stableSort(rows, keys[sort.column] ?? ((r) => r.rank), sort.descending);
}

export function filterByFamily(rows: PredictionRow[], family: string | null): PredictionRow[] {
  if (!family) return [...rows];
  return rows.filter((r) => r.family === family);
}

export function familiesOf(rows: PredictionRow[]): string[] {
  return [...new Set(rows.map((r) => r.family))].sort();
}

function headerCell(
  doc: Document,
  label: string,
  column: string,
  onSort?: (column: string) => void,
): HTMLTableCellElement {
  const th = doc.createElement("th");
  th.textContent = label;
  th.dataset.column = column;
  if (onSort) {
    th.classList.add("sortable");
    th.addEventListener("click", () => onSort(column));
  }
  return th;
}

export function renderPredictTable(
  doc: Document,
  rows: PredictionRow[],
  options: {
    family?: string | null;
    sort?: SortSpec;
    onSort?: (column: string) => void;
  } = {},
): HTMLElement {
  const container = doc.createElement("div");
  container.className = "results-predict";
  const visible = sortPredictions(filterByFamily(rows, options.family ?? null), options.sort);

  const count = doc.createElement("p");
  count.className = "row-count";
  count.textContent =
    visible.length === rows.length
      ? `${rows.length} targets`
      : `${visible.length} of ${rows.length} targets`;
  container.appendChild(count);

  const table = doc.createElement("table");
  table.className = "predict-table";
  const head = doc.createElement("tr");
  head.appendChild(headerCell(doc, "Rank", "rank", options.onSort));
  head.appendChild(headerCell(doc, "Protein", "protein", options.onSort));
  head.appendChild(headerCell(doc, "Family", "family", options.onSort));
  head.appendChild(headerCell(doc, "Score", "score", options.onSort));
  table.appendChild(head);

  for (const row of visible) {
    const tr = doc.createElement("tr");
    tr.dataset.proteinId = row.protein_id;
    const cells = [
      String(row.rank),
      row.protein_id,
      row.family,
      row.score.toFixed(3), // server payload precision
    ];
    for (const text of cells) {
      const td = doc.createElement("td");
      td.textContent = text;
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  container.appendChild(table);
  return container;
}

export function renderSearchTable(
  doc: Document,
  hits: SearchHit[],
  options: { onPivot?: (smiles: string) => void } = {},
): HTMLElement {
  const container = doc.createElement("div");
  container.className = "results-search";
  if (hits.length === 0) {
    const empty = doc.createElement("p");
    empty.className = "empty-state";
    empty.textContent = EMPTY_SEARCH_MESSAGE;
    container.appendChild(empty);
    return container;
  }
  const table = doc.createElement("table");
  table.className = "search-table";
  const head = doc.createElement("tr");
  for (const label of ["Compound", "SMILES", "Similarity"]) {
    const th = doc.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  table.appendChild(head);
  for (const hit of hits) {
    const tr = doc.createElement("tr");
    tr.className = "hit";
    tr.dataset.smiles = hit.smiles;
    if (options.onPivot) {
      // clicking a hit feeds its SMILES back into the query box
      tr.addEventListener("click", () => options.onPivot!(hit.smiles));
    }
    for (const text of [hit.compound_id, hit.smiles, hit.similarity.toFixed(3)]) {
      const td = doc.createElement("td");
      td.textContent = text;
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  container.appendChild(table);
  return container;
}

export function renderError(doc: Document, message: string, retryable: boolean, onRetry?: () => void): HTMLElement {
  const box = doc.createElement("div");
  box.className = "error-box";
  const text = doc.createElement("span");
  text.className = "error-message";
  text.textContent = message;
  box.appendChild(text);
  if (retryable && onRetry) {
    const button = doc.createElement("button");
    button.className = "retry";
    button.textContent = "Retry";
    button.addEventListener("click", onRetry);
    box.appendChild(button);
  }
  return box;
}
