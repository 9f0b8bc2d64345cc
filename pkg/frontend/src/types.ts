// Payload shapes exactly as served under /api/v1 (scores arrive rounded to 3
// decimals by the server; the UI displays them as-is).

export interface SearchHit {
  compound_id: string;
  smiles: string;
  similarity: number;
}

export interface PredictionRow {
  protein_id: string;
  family: string;
  score: number;
  per_model_scores: number[];
  rank: number;
}

export type Mode = "search" | "predict";

export type ResultPayload =
  | { mode: "search"; hits: SearchHit[] }
  | { mode: "predict"; rows: PredictionRow[] };
