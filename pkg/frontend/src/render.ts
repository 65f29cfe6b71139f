/**
 * Pure HTML renderers for every page of the UI.
 *
 * Every API field is rendered inside an element carrying
 * data-field="<json-field-name>"; the schema coverage test enumerates
 * the service schema against these markers. Values are shown verbatim,
 * no counts or percentages are recomputed here.
 */

import type {
  Graph,
  PackagePage,
  ProofPage,
  SearchResponse,
  Stats,
  VerificationPage,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function field(label: string, name: string, value: string | number): string {
  return (
    `<div class="field"><span class="field-label">${escapeHtml(label)}</span>` +
    `<span class="field-value" data-field="${name}">${escapeHtml(String(value))}</span></div>`
  );
}

function proofHref(id: string): string {
  return "#/proof/" + id;
}

function packageHref(name: string): string {
  return "#/package/" + encodeURIComponent(name);
}

function lemmaHref(fromPackage: string, name: string): string {
  return `#/lemma/${encodeURIComponent(fromPackage)}/${encodeURIComponent(name)}`;
}

function classicalBadge(classical: boolean | null | undefined): string {
  if (classical === null || classical === undefined) {
    return '<span class="badge" data-field="classical"></span>';
  }
  const label = classical ? "classical" : "constructive";
  return `<span class="badge ${label}" data-field="classical">${label}</span>`;
}

/** Lemma names link to their proof pages; classicism is traceable by click. */
function lemmaList(fromPackage: string, names: string[], fieldName: string, css: string): string {
  if (!names.length) return `<span data-field="${fieldName}">none</span>`;
  const items = names
    .map(
      (n) =>
        `<li><a class="${css}" href="${lemmaHref(fromPackage, n)}">${escapeHtml(n)}</a></li>`,
    )
    .join("");
  return `<ul class="lemmas" data-field="${fieldName}">${items}</ul>`;
}

export function renderEmptyState(): string {
  return '<p class="empty-state">Type a query to search proofs and packages.</p>';
}

export function renderError(message: string, suggestRetry = true): string {
  const retry = suggestRetry
    ? ' <button type="button" class="retry" data-action="retry">Retry</button>'
    : "";
  return (
    `<div class="banner error" role="alert">` +
    `<span data-field="error">${escapeHtml(message)}</span>${retry}</div>`
  );
}

export function renderNotFound(subject: string): string {
  return `<div class="not-found"><h2>Not found</h2><p>${escapeHtml(subject)}</p></div>`;
}

export function renderResults(response: SearchResponse): string {
  const head =
    `<p class="results-head">Top <span data-field="k">${response.k}</span> results for ` +
    `<strong data-field="query">${escapeHtml(response.query)}</strong></p>`;
  if (!response.results.length) {
    return head + '<p class="no-results">No results.</p>';
  }
  const items = response.results
    .map((r) => {
      const href = r.kind === "package" ? packageHref(r.package) : "#/" + r["doc-id"];
      return (
        `<li class="result">` +
        `<a href="${href}" data-field="doc-id" data-doc-id="${escapeHtml(r["doc-id"])}">` +
        `<span data-field="title">${escapeHtml(r.title)}</span></a> ` +
        `<span class="kind" data-field="kind">${r.kind}</span> ` +
        `<span class="package" data-field="package">${escapeHtml(r.package)}</span> ` +
        classicalBadge(r.classical) +
        ` <span class="score" data-field="score">${r.score.toFixed(3)}</span>` +
        `<p class="snippet" data-field="snippet">${escapeHtml(r.snippet)}</p></li>`
      );
    })
    .join("\n");
  return head + `<ol class="results" data-field="results">${items}</ol>`;
}

export function renderProofPage(page: ProofPage): string {
  const pkg = page["package-name"];
  const axioms = page["axioms-used"].length
    ? `<ul class="axioms" data-field="axioms-used">` +
      page["axioms-used"].map((a) => `<li><code>${escapeHtml(a)}</code></li>`).join("") +
      `</ul>`
    : '<span data-field="axioms-used">none</span>';
  const trace =
    page["trace-id"] === undefined
      ? ""
      : field("Trace node", "trace-id", page["trace-id"]);
  return (
    `<article class="proof-page">` +
    `<h2 data-field="name">${escapeHtml(page.name)}</h2>` +
    classicalBadge(page.classical) +
    `<pre class="conclusion" data-field="conclusion-text">${escapeHtml(page["conclusion-text"])}</pre>` +
    `<div class="field"><span class="field-label">Package</span>` +
    `<a data-field="package-name" href="${packageHref(pkg)}">${escapeHtml(pkg)}</a></div>` +
    `<div class="field"><span class="field-label">Axioms</span>${axioms}</div>` +
    `<div class="field"><span class="field-label">Constructive lemmas</span>` +
    lemmaList(pkg, page["constructive-lemmas"], "constructive-lemmas", "constructive-lemma") +
    `</div>` +
    `<div class="field"><span class="field-label">Classical lemmas</span>` +
    lemmaList(pkg, page["classical-lemmas"], "classical-lemmas", "classical-lemma") +
    `</div>` +
    field("Proof size", "size", page.size) +
    trace +
    field("Comments", "comments", page.comments || "none") +
    field("Identifier", "id", page.id) +
    `</article>`
  );
}

function renderVerification(record: VerificationPage | null | undefined): string {
  if (!record) {
    return '<p class="verification missing">This package is not verified.</p>';
  }
  const pkgName =
    record["package-name"] === undefined
      ? ""
      : field("Verified package", "package-name", record["package-name"]);
  return (
    `<div class="verification" data-field="verification">` +
    field("Verification engineer", "engineer", record.engineer) +
    field("Verification software", "software", record.software) +
    field("Translation time (s)", "translation-time-seconds", record["translation-time-seconds"]) +
    field("Verification time (s)", "verification-time-seconds", record["verification-time-seconds"]) +
    field("Machine", "pc-specification", record["pc-specification"]) +
    field("Verification comments", "comments", record.comments || "none") +
    pkgName +
    `</div>`
  );
}

/** Edges touching one package, for the in-page graph position section. */
function graphNeighbourhood(name: string, graph: Graph | null): string {
  if (!graph) return "";
  const dependencies = graph.edges.filter(([from]) => from === name).map(([, to]) => to);
  const dependents = graph.edges.filter(([, to]) => to === name).map(([from]) => from);
  const links = (names: string[]) =>
    names.length
      ? names.map((n) => `<a href="${packageHref(n)}">${escapeHtml(n)}</a>`).join(", ")
      : "none";
  return (
    `<section class="graph-position"><h3>In the dependency graph</h3>` +
    `<div class="field"><span class="field-label">Depends on</span>` +
    `<span class="neighbours">${links(dependencies)}</span></div>` +
    `<div class="field"><span class="field-label">Required by</span>` +
    `<span class="neighbours">${links(dependents)}</span></div>` +
    `<p><a href="#/graph">Whole graph</a></p></section>`
  );
}

export function renderPackagePage(page: PackagePage, graph: Graph | null = null): string {
  const name = page["package-name"];
  const subpackages = page.subpackages.length
    ? `<span data-field="subpackages">` +
      page.subpackages
        .map((s) => `<a href="${packageHref(s)}">${escapeHtml(s)}</a>`)
        .join(", ") +
      `</span>`
    : '<span data-field="subpackages">none</span>';
  const avg = (key: "avg-constructive-size" | "avg-classical-size", label: string) =>
    field(label, key, page[key] === undefined ? "n/a" : page[key]!);
  const proofRows = page.proofs
    .map(
      (p) =>
        `<li><a href="${proofHref(p.id)}" data-proof-id="${escapeHtml(p.id)}">` +
        `${escapeHtml(p.name)}</a> <code>${escapeHtml(p["conclusion-text"])}</code></li>`,
    )
    .join("\n");
  return (
    `<article class="package-page">` +
    `<h2 data-field="package-name">${escapeHtml(name)}</h2>` +
    field("Author", "author", page.author || "unknown") +
    `<div class="field"><span class="field-label">Subpackages</span>${subpackages}</div>` +
    field("Date retrieved", "date-retrieved", page["date-retrieved"] || "unknown") +
    field("Total proofs", "total-proofs", page["total-proofs"]) +
    field("Constructive proofs", "constructive-count", page["constructive-count"]) +
    field("Classical proofs", "classical-count", page["classical-count"]) +
    field("Constructive percentage", "constructive-percentage", page["constructive-percentage"]) +
    avg("avg-constructive-size", "Average constructive proof size") +
    avg("avg-classical-size", "Average classical proof size") +
    field("Comments", "comments", page.comments || "none") +
    `<h3>Proofs</h3><ul class="proof-list" data-field="proofs">${proofRows}</ul>` +
    `<h3>Verification</h3>` +
    renderVerification(page.verification) +
    graphNeighbourhood(name, graph) +
    `</article>`
  );
}

export function renderGraph(graph: Graph): string {
  const nodes = graph.nodes
    .map((n) => `<li><a href="${packageHref(n)}">${escapeHtml(n)}</a></li>`)
    .join("");
  const edges = graph.edges
    .map(
      ([from, to]) =>
        `<li><a href="${packageHref(from)}">${escapeHtml(from)}</a> depends on ` +
        `<a href="${packageHref(to)}">${escapeHtml(to)}</a></li>`,
    )
    .join("");
  const order = graph["load-order"].map((n) => `<li>${escapeHtml(n)}</li>`).join("");
  return (
    `<section class="graph-page"><h2>Package dependency graph</h2>` +
    `<h3>Packages</h3><ul class="nodes" data-field="nodes">${nodes}</ul>` +
    `<h3>Dependencies</h3><ul class="edges" data-field="edges">${edges}</ul>` +
    `<h3>Load order</h3><ol class="load-order" data-field="load-order">${order}</ol></section>`
  );
}

export function renderStats(stats: Stats): string {
  return (
    `<section class="stats"><h2>Corpus</h2>` +
    field("Packages", "packages", stats.packages) +
    field("Proofs", "total-proofs", stats["total-proofs"]) +
    field("Constructive", "constructive-count", stats["constructive-count"]) +
    field("Classical", "classical-count", stats["classical-count"]) +
    field("Constructive percentage", "constructive-percentage", stats["constructive-percentage"]) +
    `</section>`
  );
}

export function renderHome(stats: Stats): string {
  return renderStats(stats) + renderEmptyState();
}
