import { ApiClient } from "./api.js";
import { QuerySession, SessionState } from "./session.js";
import {
  familiesOf,
  renderError,
  renderPredictTable,
  renderSearchTable,
  SortSpec,
} from "./table.js";
import type { Mode } from "./types.js";

export interface AppElements {
  smilesInput: HTMLInputElement;
  modeSelect: HTMLSelectElement;
  topKInput: HTMLInputElement;
  familySelect: HTMLSelectElement;
  submitButton: HTMLButtonElement;
  statusLine: HTMLElement;
  results: HTMLElement;
  datasetLink: HTMLAnchorElement;
}

export class App {
  readonly session: QuerySession;
  private sort?: SortSpec;
  private family: string | null = null;

  constructor(
    private readonly doc: Document,
    private readonly el: AppElements,
    client: ApiClient,
  ) {
    this.session = new QuerySession(client);
    this.session.onChange((state) => this.render(state));
    this.el.submitButton.addEventListener("click", () => void this.submit());
    this.el.smilesInput.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter") void this.submit();
    });
    this.el.familySelect.addEventListener("change", () => {
      this.family = this.el.familySelect.value || null;
      this.render(this.session.current);
    });
    this.el.datasetLink.href = client.datasetUrl();
  }

  async submit(): Promise<void> {
    const mode = this.el.modeSelect.value as Mode;
    const topK = this.el.topKInput.value ? Number(this.el.topKInput.value) : undefined;
    this.sort = undefined; // new query: back to server order
    this.family = null;
    await this.session.submit(this.el.smilesInput.value, mode, topK);
  }

  /** Feedback loop: a clicked similarity hit becomes the next query. */
  pivotTo(smiles: string): void {
    this.el.smilesInput.value = smiles;
    this.el.smilesInput.focus();
  }

  private toggleSort(column: string): void {
    if (this.sort?.column === column) {
      this.sort = { column, descending: !this.sort.descending };
    } else {
      this.sort = { column, descending: column === "score" };
    }
    this.render(this.session.current);
  }

  private render(state: SessionState): void {
    this.el.statusLine.textContent =
      state.status === "loading"
        ? `querying ${state.query?.mode}…`
        : state.status === "done"
          ? `results for ${state.query?.smiles}`
          : "";
    this.el.results.replaceChildren();

    if (state.status === "error" && state.error) {
      this.el.results.appendChild(
        renderError(this.doc, state.error, state.retryable ?? false, () => void this.session.retry()),
      );
      return;
    }
    if (state.status !== "done" || !state.results) return;

    if (state.results.mode === "predict") {
      const rows = state.results.rows;
      this.refreshFamilyOptions(familiesOf(rows));
      this.el.results.appendChild(
        renderPredictTable(this.doc, rows, {
          family: this.family,
          sort: this.sort,
          onSort: (column) => this.toggleSort(column),
        }),
      );
    } else {
      this.refreshFamilyOptions([]);
      this.el.results.appendChild(
        renderSearchTable(this.doc, state.results.hits, {
          onPivot: (smiles) => this.pivotTo(smiles),
        }),
      );
    }
  }

  private refreshFamilyOptions(families: string[]): void {
    const select = this.el.familySelect;
    const current = this.family ?? "";
    select.replaceChildren();
    const all = this.doc.createElement("option");
    all.value = "";
    all.textContent = "All families";
    select.appendChild(all);
    for (const family of families) {
      const option = this.doc.createElement("option");
      option.value = family;
      option.textContent = family;
      select.appendChild(option);
    }
    select.value = families.includes(current) ? current : "";
  }
}

export function mountApp(doc: Document, client?: ApiClient): App {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  };
  return new App(
    doc,
    {
      smilesInput: byId<HTMLInputElement>("smiles-input"),
      modeSelect: byId<HTMLSelectElement>("mode-select"),
      topKInput: byId<HTMLInputElement>("topk-input"),
      familySelect: byId<HTMLSelectElement>("family-select"),
      submitButton: byId<HTMLButtonElement>("submit-button"),
      statusLine: byId("status-line"),
      results: byId("results"),
      datasetLink: byId<HTMLAnchorElement>("dataset-link"),
    },
    client ?? new ApiClient(),
  );
}
