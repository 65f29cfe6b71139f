"""Read-only HTTP service over an immutable index-and-pages snapshot."""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Mapping, Optional
from urllib.parse import parse_qs, unquote, urlsplit

from .analyzer import DependencyGraph, PackageAnalysis, VerificationRecord
from .search import InvertedIndex, build_index, documents_from_analyses, search
from .site import (
    _package_page, _proof_page, corpus_stats, default_verification,
    proof_page_id,
)


class BindError(Exception):
    pass


@dataclass
class ServiceSnapshot:
    index: InvertedIndex
    proof_pages: dict
    package_pages: dict
    stats: dict
    graph: dict
    site_dir: Optional[Path] = None
    ui_dir: Optional[Path] = None


def build_snapshot(analyses: Mapping[str, PackageAnalysis],
                   graph: DependencyGraph,
                   verifications: Optional[Mapping[str, VerificationRecord]]
                   = None,
                   site_dir=None, ui_dir=None) -> ServiceSnapshot:
    verifications = verifications or {}
    index = build_index(documents_from_analyses(analyses))
    proof_pages = {}
    package_pages = {}
    for pkg, analysis in analyses.items():
        ver = verifications.get(pkg) or default_verification(pkg)
        package_pages[pkg] = _package_page(analysis, ver)
        for record in analysis.records:
            page = _proof_page(record)
            proof_pages[proof_page_id(pkg, record.name)] = page
    return ServiceSnapshot(
        index=index,
        proof_pages=proof_pages,
        package_pages=package_pages,
        stats=corpus_stats(analyses),
        graph=graph.to_json(),
        site_dir=Path(site_dir) if site_dir else None,
        ui_dir=Path(ui_dir) if ui_dir else None)


_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".json": "application/json; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json; charset=utf-8",
    ".txt": "text/plain; charset=utf-8",
    ".svg": "image/svg+xml",
}


class _Handler(BaseHTTPRequestHandler):
    server_version = "proofcloud"

    @property
    def snapshot(self) -> ServiceSnapshot:
        return self.server.snapshot  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send_json(self, doc, status: int = 200) -> None:
        data = (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _send_error_json(self, status: int, message: str) -> None:
        self._send_json({"error": message}, status)

    def do_GET(self) -> None:  # noqa: N802 (stdlib naming)
        parts = urlsplit(self.path)
        path = unquote(parts.path)
        if path == "/api/search":
            return self._search(parse_qs(parts.query))
        if path.startswith("/api/proof/"):
            page = self.snapshot.proof_pages.get(path[len("/api/proof/"):])
            if page is None:
                return self._send_error_json(404, "unknown proof")
            return self._send_json(page)
        if path.startswith("/api/package/"):
            page = self.snapshot.package_pages.get(
                path[len("/api/package/"):])
            if page is None:
                return self._send_error_json(404, "unknown package")
            return self._send_json(page)
        if path == "/api/stats":
            return self._send_json(self.snapshot.stats)
        if path == "/api/graph":
            return self._send_json(self.snapshot.graph)
        if path.startswith("/api/"):
            return self._send_error_json(404, "unknown endpoint")
        return self._static(path)

    def _search(self, params) -> None:
        query = params.get("q", [""])[0]
        raw_k = params.get("k", ["10"])[0]
        try:
            k = int(raw_k)
        except ValueError:
            return self._send_error_json(400, f"k is not an integer: {raw_k}")
        if k < 1:
            return self._send_error_json(400, "k must be at least 1")
        snapshot = self.snapshot
        results = []
        for doc_id, score in search(snapshot.index, query, k):
            doc = snapshot.index.documents[doc_id]
            results.append({
                "doc-id": doc_id,
                "title": doc.title,
                "snippet": doc.body[:160],
                "kind": doc.kind,
                "package": doc.package,
                "classical": doc.classical,
                "score": score,
            })
        self._send_json({"query": query, "k": k, "results": results})

    def _static(self, path: str) -> None:
        snapshot = self.snapshot
        if path.startswith("/ui/") or path == "/ui":
            root = snapshot.ui_dir
            rel = path[len("/ui/"):] or "index.html"
        else:
            root = snapshot.site_dir
            rel = path.lstrip("/") or "index.html"
        if root is None:
            return self._send_error_json(404, "not found")
        target = (root / rel).resolve()
        try:
            target.relative_to(root.resolve())
        except ValueError:
            return self._send_error_json(404, "not found")
        if target.is_dir():
            target = target / "index.html"
        if not target.is_file():
            return self._send_error_json(404, "not found")
        data = target.read_bytes()
        ctype = _CONTENT_TYPES.get(target.suffix,
                                   "application/octet-stream")
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


def make_server(snapshot: ServiceSnapshot, host: str = "127.0.0.1",
                port: int = 0) -> ThreadingHTTPServer:
    """Bind and return the server; the caller drives serve_forever."""
    try:
        server = ThreadingHTTPServer((host, port), _Handler)
    except OSError as e:
        raise BindError(f"cannot bind {host}:{port}: {e}") from e
    server.snapshot = snapshot  # type: ignore[attr-defined]
    return server


class BackgroundServer:
    """Context manager running the service on a daemon thread."""

    def __init__(self, snapshot: ServiceSnapshot, host: str = "127.0.0.1",
                 port: int = 0):
        self.server = make_server(snapshot, host, port)
        self.thread = threading.Thread(target=self.server.serve_forever,
                                       daemon=True)

    @property
    def address(self) -> str:
        host, port = self.server.server_address[:2]
        return f"http://{host}:{port}"

    def __enter__(self) -> "BackgroundServer":
        self.thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.server.shutdown()
        self.server.server_close()
        self.thread.join(timeout=5)
