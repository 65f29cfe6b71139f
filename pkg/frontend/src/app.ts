/**
 * Single-page browser for the proof index service.
 *
 * Routes live in the location hash so the exported site and the API can
 * be served read-only. One request cycle is in flight at a time: typing
 * in the query box aborts the previous request.
 */

import {
  ApiError,
  fetchGraph,
  fetchPackage,
  fetchProof,
  fetchStats,
  resolveLemma,
  searchProofs,
} from "./api.js";
import {
  renderEmptyState,
  renderError,
  renderGraph,
  renderHome,
  renderNotFound,
  renderPackagePage,
  renderProofPage,
  renderResults,
} from "./render.js";

const BASE = "";
const RESULT_COUNT = 10;

const content = document.getElementById("content") as HTMLElement;
const searchBox = document.getElementById("search-box") as HTMLInputElement;
const searchForm = document.getElementById("search-form") as HTMLFormElement;

let inFlight: AbortController | null = null;

function begin(): AbortSignal {
  inFlight?.abort();
  inFlight = new AbortController();
  return inFlight.signal;
}

function show(html: string): void {
  content.innerHTML = html;
}

function fail(err: unknown): void {
  if (err instanceof DOMException && err.name === "AbortError") return;
  if (err instanceof ApiError && err.status === 404) {
    show(renderNotFound(err.message));
    return;
  }
  show(renderError(err instanceof Error ? err.message : String(err)));
}

async function runQuery(query: string): Promise<void> {
  if (!query.trim()) {
    show(renderEmptyState());
    return;
  }
  const signal = begin();
  try {
    show(renderResults(await searchProofs(BASE, query, RESULT_COUNT, signal)));
  } catch (err) {
    fail(err);
  }
}

async function route(): Promise<void> {
  const hash = decodeURIComponent(location.hash.replace(/^#/, ""));
  const parts = hash.split("/").filter((p) => p.length > 0);
  const signal = begin();
  try {
    if (parts.length === 0) {
      show(renderHome(await fetchStats(BASE, signal)));
    } else if (parts[0] === "search") {
      searchBox.value = parts.slice(1).join("/");
      await runQuery(searchBox.value);
    } else if (parts[0] === "proof" && parts.length >= 3) {
      const name = parts.slice(2).join("/");
      show(renderProofPage(await fetchProof(BASE, parts[1], name, signal)));
    } else if (parts[0] === "lemma" && parts.length >= 3) {
      const name = parts.slice(2).join("/");
      const page = await resolveLemma(BASE, parts[1], name, signal);
      location.hash = "#/proof/" + page.id;
    } else if (parts[0] === "package" && parts.length >= 2) {
      const [page, graph] = await Promise.all([
        fetchPackage(BASE, parts[1], signal),
        fetchGraph(BASE, signal).catch(() => null),
      ]);
      show(renderPackagePage(page, graph));
    } else if (parts[0] === "graph") {
      show(renderGraph(await fetchGraph(BASE, signal)));
    } else {
      show(renderNotFound(hash));
    }
  } catch (err) {
    fail(err);
  }
}

searchForm.addEventListener("submit", (event) => {
  event.preventDefault();
  location.hash = "#/search/" + encodeURIComponent(searchBox.value);
  void route();
});

searchBox.addEventListener("input", () => {
  history.replaceState(null, "", "#/search/" + encodeURIComponent(searchBox.value));
  void runQuery(searchBox.value);
});

content.addEventListener("click", (event) => {
  const target = event.target as HTMLElement;
  if (target.dataset.action === "retry") void route();
});

window.addEventListener("hashchange", () => void route());
void route();
