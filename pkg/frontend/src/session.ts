import { ApiClient, ApiError, NetworkError } from "./api.js";
import type { Mode, ResultPayload } from "./types.js";

export type Status = "idle" | "loading" | "done" | "error";

export interface QueryTag {
  id: number;
  smiles: string;
  mode: Mode;
  topK?: number;
}

export interface SessionState {
  status: Status;
  query?: QueryTag;
  results?: ResultPayload; // always tagged with the query that produced them
  error?: string;
  retryable?: boolean;
}

/** One query session: at most one request in flight; responses to superseded
 * queries are discarded by query id, so the rendered results always belong to
 * the latest submission. Never mutates server state (POSTs are pure lookups). */
export class QuerySession {
  private counter = 0;
  private state: SessionState = { status: "idle" };
  private listeners: Array<(s: SessionState) => void> = [];

  constructor(private readonly client: ApiClient) {}

  get current(): SessionState {
    return this.state;
  }

  onChange(listener: (s: SessionState) => void): void {
    this.listeners.push(listener);
  }

  private update(state: SessionState): void {
    this.state = state;
    for (const listener of this.listeners) listener(state);
  }

  async submit(smiles: string, mode: Mode, topK?: number): Promise<SessionState> {
    const trimmed = smiles.trim();
    if (!trimmed) {
      this.update({ status: "error", error: "enter a SMILES string first", retryable: false });
      return this.state;
    }
    const tag: QueryTag = { id: ++this.counter, smiles: trimmed, mode, topK };
    this.update({ status: "loading", query: tag });
    try {
      const results: ResultPayload =
        mode === "search"
          ? { mode, hits: await this.client.search(trimmed) }
          : { mode, rows: await this.client.predict(trimmed, topK) };
      if (tag.id !== this.counter) return this.state; // superseded: discard
      this.update({ status: "done", query: tag, results });
    } catch (err) {
      if (tag.id !== this.counter) return this.state;
      if (err instanceof ApiError) {
        this.update({ status: "error", query: tag, error: err.diagnostic, retryable: false });
      } else if (err instanceof NetworkError) {
        this.update({ status: "error", query: tag, error: err.message, retryable: true });
      } else {
        this.update({ status: "error", query: tag, error: String(err), retryable: false });
      }
    }
    return this.state;
  }

  /** Re-run the last query (the retry affordance after a network failure). */
  async retry(): Promise<SessionState> {
    const query = this.state.query;
    if (!query) return this.state;
    return this.submit(query.smiles, query.mode, query.topK);
  }
}
