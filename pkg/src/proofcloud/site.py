"""Static page export: proof, package, and verification pages plus a
hash-stable manifest.

Every page exists twice, as JSON for programs and as minimal HTML for
browsing; regeneration from identical inputs reproduces identical bytes.
"""

from __future__ import annotations

import hashlib
import html
import json
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Union

from .analyzer import (
    DependencyGraph, PackageAnalysis, PackageMeta, ProofRecord,
    VerificationRecord, graph_from_json, record_from_json, stats_from_json,
    verification_from_json,
)

_SAFE = set(string.ascii_letters + string.digits + "-_")


def page_slug(text: str) -> str:
    """Filesystem-safe variant of a page-id component; non-identifier
    characters get hex escapes."""
    out = []
    for ch in text:
        out.append(ch if ch in _SAFE else "_u%04X_" % ord(ch))
    slug = "".join(out)
    if not slug or slug.startswith(("-", "_")):
        slug = "n" + slug
    return slug


def proof_page_id(package: str, theorem_name: str) -> str:
    return f"{package}/{theorem_name}"


def _proof_page(record: ProofRecord) -> dict:
    page = record.to_json()
    page["id"] = proof_page_id(record.package_name, record.name)
    page["comments"] = ""
    return page


def _package_page(analysis: PackageAnalysis,
                  verification: VerificationRecord) -> dict:
    page = analysis.stats.to_json()
    page["proofs"] = [
        {"name": r.name,
         "conclusion-text": r.conclusion_text,
         "id": proof_page_id(r.package_name, r.name)}
        for r in analysis.records]
    page["verification"] = verification.to_json()
    return page


def default_verification(package: str) -> VerificationRecord:
    """Placeholder used when no measured record is supplied."""
    return VerificationRecord(
        engineer="pipeline",
        software="embedded rewriting checker",
        translation_time_seconds=0.0,
        verification_time_seconds=0.0,
        pc_specification="unrecorded",
        comments=f"no measured run for {package}")


def corpus_stats(analyses: Mapping[str, PackageAnalysis]) -> dict:
    total = sum(a.stats.total_proofs for a in analyses.values())
    constructive = sum(a.stats.constructive_count for a in analyses.values())
    classical = sum(a.stats.classical_count for a in analyses.values())
    pct = 100.0 * constructive / total if total else 100.0
    return {
        "packages": len(analyses),
        "total-proofs": total,
        "constructive-count": constructive,
        "classical-count": classical,
        "constructive-percentage": pct,
    }


def _html_doc(title: str, body: str) -> str:
    return ("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
            f"<title>{html.escape(title)}</title>\n</head>\n<body>\n"
            f"{body}</body>\n</html>\n")


def _dl(pairs) -> str:
    rows = []
    for label, value in pairs:
        rows.append(f"<dt>{html.escape(label)}</dt>"
                    f"<dd>{html.escape(str(value))}</dd>")
    return "<dl>\n" + "\n".join(rows) + "\n</dl>\n"


def _proof_html(page: dict) -> str:
    pairs = [
        ("Theorem name", page["name"]),
        ("Theorem conclusion", page["conclusion-text"]),
        ("Package", page["package-name"]),
        ("Constructive proof", "no" if page["classical"] else "yes"),
        ("Axioms", "; ".join(page["axioms-used"]) or "none"),
        ("Constructive lemmas", "; ".join(page["constructive-lemmas"])
         or "none"),
        ("Classical lemmas", "; ".join(page["classical-lemmas"]) or "none"),
        ("Size", page["size"]),
        ("Comments", page["comments"] or "none"),
    ]
    return _html_doc("Proof: " + page["name"],
                     f"<h1>{html.escape(page['name'])}</h1>\n" + _dl(pairs))


def _package_html(page: dict) -> str:
    pairs = [
        ("Package name", page["package-name"]),
        ("Author of package", page["author"]),
        ("Subpackages", ", ".join(page["subpackages"]) or "none"),
        ("Date retrieved", page["date-retrieved"]),
        ("Total number of proofs", page["total-proofs"]),
        ("Number of constructive proofs", page["constructive-count"]),
        ("Number of classical proofs", page["classical-count"]),
        ("Percentage of constructive proofs",
         page["constructive-percentage"]),
        ("Size of constructive proofs on average",
         page.get("avg-constructive-size", "n/a")),
        ("Size of classical proofs on average",
         page.get("avg-classical-size", "n/a")),
        ("Comments", page["comments"] or "none"),
    ]
    proofs = "\n".join(
        "<li><code>%s</code>: %s</li>" % (html.escape(p["name"]),
                                          html.escape(p["conclusion-text"]))
        for p in page["proofs"])
    body = (f"<h1>{html.escape(page['package-name'])}</h1>\n" + _dl(pairs)
            + "<h2>List of proofs</h2>\n<ul>\n" + proofs + "\n</ul>\n")
    return _html_doc("Package: " + page["package-name"], body)


def _index_html(analyses: Mapping[str, PackageAnalysis],
                graph: DependencyGraph) -> str:
    packages = "\n".join(
        "<li><a href=\"packages/%s.html\">%s</a></li>"
        % (page_slug(pkg), html.escape(pkg)) for pkg in sorted(analyses))
    edges = "\n".join(
        "<li>%s &rarr; %s</li>" % (html.escape(a), html.escape(b))
        for a, b in graph.edges)
    body = (
        "<h1>Proof index</h1>\n"
        "<form action=\"/api/search\" method=\"get\">"
        "<input type=\"text\" name=\"q\" placeholder=\"search proofs\">"
        "<button type=\"submit\">Search</button></form>\n"
        "<h2>Packages</h2>\n<ul>\n" + packages + "\n</ul>\n"
        "<h2>Package dependencies</h2>\n<ul>\n" + edges + "\n</ul>\n")
    return _html_doc("Proof index", body)


def export_site(analyses: Mapping[str, PackageAnalysis],
                graph: DependencyGraph,
                out_dir: Union[str, Path],
                verifications: Optional[Mapping[str, VerificationRecord]]
                = None) -> dict:
    """Write the whole page set under out_dir and return the manifest
    (relative path -> sha256) that was also saved as manifest.json."""
    out = Path(out_dir)
    verifications = verifications or {}
    files: dict[str, bytes] = {}

    def put(rel: str, data: Union[str, bytes]) -> None:
        files[rel] = data.encode("utf-8") if isinstance(data, str) else data

    def put_json(rel: str, doc) -> None:
        put(rel, json.dumps(doc, indent=2, sort_keys=True) + "\n")

    for pkg in sorted(analyses):
        analysis = analyses[pkg]
        ver = verifications.get(pkg) or default_verification(pkg)
        pkg_page = _package_page(analysis, ver)
        slug = page_slug(pkg)
        put_json(f"packages/{slug}.json", pkg_page)
        put(f"packages/{slug}.html", _package_html(pkg_page))
        put_json(f"verification/{slug}.json",
                 dict(ver.to_json(), **{"package-name": pkg}))
        for record in analysis.records:
            page = _proof_page(record)
            rel = f"proofs/{slug}/{page_slug(record.name)}"
            put_json(rel + ".json", page)
            put(rel + ".html", _proof_html(page))

    put_json("graph.json", graph.to_json())
    put_json("stats.json", corpus_stats(analyses))
    put("index.html", _index_html(analyses, graph))

    manifest = {
        "files": {rel: hashlib.sha256(data).hexdigest()
                  for rel, data in sorted(files.items())}
    }
    for rel, data in files.items():
        path = out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    return manifest


def load_site(site_dir: Union[str, Path]):
    """Rebuild analyses, graph, and verification records from an exported
    site directory; inverse of export_site over the JSON pages."""
    root = Path(site_dir)
    with open(root / "graph.json", "r", encoding="utf-8") as fh:
        graph = graph_from_json(json.load(fh))
    requires: dict[str, list[str]] = {}
    for dependent, dependency in graph.edges:
        requires.setdefault(dependent, []).append(dependency)

    analyses: dict[str, PackageAnalysis] = {}
    verifications: dict[str, VerificationRecord] = {}
    for pkg_file in sorted((root / "packages").glob("*.json")):
        doc = json.loads(pkg_file.read_text(encoding="utf-8"))
        pkg = doc["package-name"]
        slug = pkg_file.stem
        records = []
        for entry in doc["proofs"]:
            rel = root / "proofs" / slug / (page_slug(entry["name"]) + ".json")
            records.append(record_from_json(
                json.loads(rel.read_text(encoding="utf-8"))))
        meta = PackageMeta(
            name=pkg,
            author=doc["author"],
            subpackages=tuple(doc["subpackages"]),
            date_retrieved=doc["date-retrieved"],
            requires=tuple(sorted(requires.get(pkg, ()))),
            comments=doc["comments"],
            theorems=tuple(r.name for r in records))
        analyses[pkg] = PackageAnalysis(meta=meta, records=tuple(records),
                                        stats=stats_from_json(doc))
        verifications[pkg] = verification_from_json(doc["verification"])
    return analyses, graph, verifications
