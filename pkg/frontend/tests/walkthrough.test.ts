/**
 * End-to-end walkthrough against the real service on the fixture corpus:
 * query, result, proof page, classical-lemma link, package page, graph.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readdirSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import {
  ApiError,
  fetchGraph,
  fetchPackage,
  fetchProof,
  fetchStats,
  resolveLemma,
  searchProofs,
} from "../src/api.js";
import {
  renderGraph,
  renderNotFound,
  renderPackagePage,
  renderProofPage,
  renderResults,
  renderStats,
} from "../src/render.js";

const here = dirname(fileURLToPath(import.meta.url));
const repoRoot = join(here, "..", "..");
const corpusDir = join(repoRoot, "tests", "fixtures", "corpus");

let workDir: string;
let service: ChildProcess;
let base: string;

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "proof-ui-"));
  const articles = readdirSync(corpusDir)
    .filter((f) => f.endsWith(".art"))
    .sort()
    .map((f) => join(corpusDir, f));
  const built = spawnSync(
    "python3",
    [
      "-m",
      "proofcloud.cli",
      "pipeline",
      ...articles,
      "--meta",
      join(corpusDir, "packages-meta.json"),
      "-o",
      workDir,
    ],
    { encoding: "utf-8" },
  );
  expect(built.status, built.stderr).toBe(0);

  service = spawn(
    "python3",
    ["-m", "proofcloud.cli", "serve", join(workDir, "site"), "--bind", "127.0.0.1:0"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  base = await new Promise<string>((resolve, reject) => {
    let seen = "";
    service.stdout!.on("data", (chunk: Buffer) => {
      seen += chunk.toString();
      const match = seen.match(/http:\/\/127\.0\.0\.1:(\d+)\//);
      if (match) resolve(`http://127.0.0.1:${match[1]}`);
    });
    service.on("exit", (code) => reject(new Error(`service exited: ${code}`)));
    setTimeout(() => reject(new Error(`service never came up: ${seen}`)), 30_000);
  });
});

afterAll(() => {
  service?.kill();
  if (workDir) rmSync(workDir, { recursive: true, force: true });
});

describe("fixture service walkthrough", () => {
  it("shows corpus statistics on the home view", async () => {
    const html = renderStats(await fetchStats(base));
    expect(html).toContain('data-field="total-proofs">12<');
    expect(html).toContain('data-field="packages">6<');
  });

  it("navigates query, proof, classical lemma, package, graph", async () => {
    // query -> ranked results containing the proof
    const found = await searchProofs(base, "bridge", 10);
    const resultsHtml = renderResults(found);
    expect(resultsHtml).toContain('data-doc-id="proof/pkg-top/top-bridge"');
    const hit = found.results.find((r) => r.kind === "proof" && r.title === "top-bridge");
    expect(hit).toBeDefined();
    expect(hit!.classical).toBe(true);

    // result -> proof page with its required attributes
    const proof = await fetchProof(base, hit!.package, hit!.title);
    const proofHtml = renderProofPage(proof);
    for (const name of [
      "id",
      "name",
      "conclusion-text",
      "package-name",
      "classical",
      "axioms-used",
      "constructive-lemmas",
      "classical-lemmas",
      "size",
      "comments",
    ]) {
      expect(proofHtml, name).toContain(`data-field="${name}"`);
    }
    expect(proofHtml).toContain(">classical<");
    expect(proofHtml).toContain('href="#/lemma/pkg-top/classical-bridge"');

    // classical-lemma link -> the lemma's own proof page; the lemma lives
    // in another package, so resolution falls back to exact-title search
    const lemma = await resolveLemma(base, "pkg-top", "classical-bridge");
    expect(lemma.id).toBe("pkg-middle/classical-bridge");
    expect(lemma.classical).toBe(true);
    expect(lemma["classical-lemmas"]).toContain("choice-self-eq");

    // lemma's package page with statistics and verification
    const [pkg, graph] = await Promise.all([
      fetchPackage(base, lemma["package-name"]),
      fetchGraph(base),
    ]);
    const pkgHtml = renderPackagePage(pkg, graph);
    for (const name of [
      "package-name",
      "author",
      "subpackages",
      "date-retrieved",
      "total-proofs",
      "constructive-count",
      "classical-count",
      "constructive-percentage",
      "proofs",
      "comments",
      "verification",
      "engineer",
      "software",
      "translation-time-seconds",
      "verification-time-seconds",
      "pc-specification",
    ]) {
      expect(pkgHtml, name).toContain(`data-field="${name}"`);
    }
    expect(pkgHtml).toContain('data-field="total-proofs">2<');
    expect(pkgHtml).toContain('data-proof-id="pkg-middle/classical-bridge"');
    // graph position: pkg-middle sits between pkg-choice and pkg-top
    expect(pkgHtml).toContain('href="#/package/pkg-choice"');
    expect(pkgHtml).toContain('href="#/package/pkg-top"');

    // whole-graph view navigates back into packages
    const graphHtml = renderGraph(graph);
    for (const node of graph.nodes) {
      expect(graphHtml).toContain(`href="#/package/${node}"`);
    }
    expect(graphHtml).toContain("pkg-top</a> depends on");
  });

  it("renders missing pages as not-found, not a blank view", async () => {
    let html = "";
    try {
      await fetchProof(base, "pkg-top", "no-such-theorem");
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(404);
      html = renderNotFound((err as ApiError).message);
    }
    expect(html).toContain("Not found");
  });

  it("reports bad search parameters through the error type", async () => {
    await expect(searchProofs(base, "x", 0)).rejects.toMatchObject({ status: 400 });
  });
});
