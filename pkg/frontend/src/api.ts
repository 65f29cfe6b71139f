/**
 * Thin fetch client for the proof index service.
 */

import type { Graph, PackagePage, ProofPage, SearchResponse, Stats } from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function getJson<T>(base: string, path: string, signal?: AbortSignal): Promise<T> {
  let response: Response;
  try {
    response = await fetch(base + path, { signal });
  } catch (err) {
    if (err instanceof DOMException && err.name === "AbortError") throw err;
    throw new ApiError(0, "service unreachable");
  }
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    const message =
      body && typeof body.error === "string" ? body.error : `HTTP ${response.status}`;
    throw new ApiError(response.status, message);
  }
  return body as T;
}

export function searchProofs(
  base: string,
  query: string,
  k = 10,
  signal?: AbortSignal,
): Promise<SearchResponse> {
  const q = encodeURIComponent(query);
  return getJson(base, `/api/search?q=${q}&k=${k}`, signal);
}

export function fetchProof(
  base: string,
  pkg: string,
  name: string,
  signal?: AbortSignal,
): Promise<ProofPage> {
  return getJson(base, `/api/proof/${encodeURIComponent(pkg)}/${encodeURIComponent(name)}`, signal);
}

export function fetchPackage(base: string, pkg: string, signal?: AbortSignal): Promise<PackagePage> {
  return getJson(base, `/api/package/${encodeURIComponent(pkg)}`, signal);
}

export function fetchGraph(base: string, signal?: AbortSignal): Promise<Graph> {
  return getJson(base, "/api/graph", signal);
}

export function fetchStats(base: string, signal?: AbortSignal): Promise<Stats> {
  return getJson(base, "/api/stats", signal);
}

/**
 * Find the proof page for a lemma named on another proof's page.
 *
 * Lemma lists carry bare theorem names. Most lemmas live in the citing
 * proof's own package; imported ones are located through search with an
 * exact-title match.
 */
export async function resolveLemma(
  base: string,
  fromPackage: string,
  name: string,
  signal?: AbortSignal,
): Promise<ProofPage> {
  try {
    return await fetchProof(base, fromPackage, name, signal);
  } catch (err) {
    if (!(err instanceof ApiError) || err.status !== 404) throw err;
  }
  const found = await searchProofs(base, name, 50, signal);
  for (const result of found.results) {
    if (result.kind === "proof" && result.title === name) {
      return fetchProof(base, result.package, name, signal);
    }
  }
  throw new ApiError(404, `lemma not found: ${name}`);
}
