import type { PredictionRow, SearchHit } from "./types.js";

/** Server rejected the request (e.g. unparseable SMILES); carries the
 * diagnostic from the JSON error body so it can be shown inline. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly diagnostic: string,
  ) {
    super(diagnostic);
    this.name = "ApiError";
  }
}

/** Transport-level failure; the query can be retried as-is. */
export class NetworkError extends Error {
  constructor(cause: unknown) {
    super(`network failure: ${String(cause)}`);
    this.name = "NetworkError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "/api/v1",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async search(smiles: string): Promise<SearchHit[]> {
    return this.post<SearchHit[]>("/search", { smiles });
  }

  async predict(smiles: string, topK?: number): Promise<PredictionRow[]> {
    const body: Record<string, unknown> = { smiles };
    if (topK !== undefined) body.top_k = topK;
    return this.post<PredictionRow[]>("/predict", body);
  }

  /** Direct link target for the archive endpoint; the browser downloads it. */
  datasetUrl(family?: string): string {
    const suffix = family ? `?family=${encodeURIComponent(family)}` : "";
    return `${this.baseUrl}/dataset${suffix}`;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.baseUrl}${path}`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch (cause) {
      throw new NetworkError(cause);
    }
    if (!response.ok) {
      let diagnostic = `HTTP ${response.status}`;
      try {
        const parsed = (await response.json()) as { error?: string; error_id?: string };
        diagnostic = parsed.error ?? (parsed.error_id ? `server error ${parsed.error_id}` : diagnostic);
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, diagnostic);
    }
    return (await response.json()) as T;
  }
}
