// Wire types mirroring the engine's HTTP API. The UI renders these values
// verbatim and never recomputes scores.

export interface BreakdownTerm {
  raw: number;
  standardized: number;
  weight: number;
  weighted: number;
}

export interface Candidate {
  rank: number;
  pair_id: number;
  response: string;
  post: string;
  score: number;
  features: Record<string, number>;
  breakdown: Record<string, BreakdownTerm>;
}

export interface RespondResponse {
  candidates: Candidate[];
  timing_ms: number;
  engine_version: string;
  warnings: string[];
}

export interface HealthResponse {
  status: string;
  engine_loaded: boolean;
}

export type Author = "human" | "engine" | "error";

export interface ChatTurn {
  author: Author;
  text: string;
  timestamp: number;
  // engine turns carry the full payload for the inspector
  response?: RespondResponse;
  // error turns keep the message that failed so it can be retried
  failedMessage?: string;
}

export interface CandidateView {
  rank: number;
  response: string;
  post: string;
  score: number;
  features: Record<string, number>;
  breakdown: Record<string, BreakdownTerm>;
}
