/**
 * Response document shapes of the proof index service.
 *
 * Field names mirror the service's JSON schema verbatim (kebab-case);
 * the UI renders these fields and computes nothing of its own.
 */

export interface ProofPage {
  id: string;
  name: string;
  "conclusion-text": string;
  "package-name": string;
  classical: boolean;
  "axioms-used": string[];
  "constructive-lemmas": string[];
  "classical-lemmas": string[];
  size: number;
  "trace-id"?: number;
  comments: string;
}

export interface ProofSummary {
  name: string;
  "conclusion-text": string;
  id: string;
}

export interface VerificationPage {
  engineer: string;
  software: string;
  "translation-time-seconds": number;
  "verification-time-seconds": number;
  "pc-specification": string;
  comments: string;
  "package-name"?: string;
}

export interface PackagePage {
  "package-name": string;
  author: string;
  subpackages: string[];
  "date-retrieved": string;
  "total-proofs": number;
  "constructive-count": number;
  "classical-count": number;
  "constructive-percentage": number;
  "avg-constructive-size"?: number;
  "avg-classical-size"?: number;
  proofs: ProofSummary[];
  comments: string;
  verification: VerificationPage | null;
}

export interface Graph {
  nodes: string[];
  /** [dependent, dependency] pairs. */
  edges: [string, string][];
  "load-order": string[];
}

export interface Stats {
  packages: number;
  "total-proofs": number;
  "constructive-count": number;
  "classical-count": number;
  "constructive-percentage": number;
}

export interface SearchResult {
  "doc-id": string;
  title: string;
  snippet: string;
  kind: "proof" | "package";
  package: string;
  classical?: boolean | null;
  score: number;
}

export interface SearchResponse {
  query: string;
  k: number;
  results: SearchResult[];
}
