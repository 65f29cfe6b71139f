"""Replay, translate, verify and browse machine-checked proof articles.

The package is organized around a small trusted kernel and a set of
pipelines built on top of it:

- ``kernel``: higher-order logic terms, theorems and inference rules.
- ``article``: line-oriented proof article replay and serialization.
- ``dedukti``: translation of replayed articles to rewriting modules.
- ``lpcheck``: an independent typechecker for the translated modules.
- ``analyzer``: classicality classification and package dependency graphs.
- ``search``: a deterministic full-text index over analysis results.
- ``site``: static JSON/HTML export of analysis results.
- ``server``: a read-only HTTP API over an exported site.
- ``bench``: size and timing measurements for articles and modules.
- ``cli``: the ``proofcloud`` command-line entry point.
"""

from proofcloud.analyzer import (PackageAnalysis, PackageMeta, PackageStats,
                                 ProofRecord, analyze_corpus,
                                 dependency_graph, load_corpus)
from proofcloud.article import (ArticleError, ArticleResult, Export,
                                emit_article, read_article_text, replay)
from proofcloud.dedukti import (emit_module, prelude_module,
                                translate_package)
from proofcloud.kernel import Kernel, Theorem
from proofcloud.lpcheck import CheckReport, parse_module, typecheck
from proofcloud.search import build_index, documents_from_analyses, search
from proofcloud.site import export_site, load_site

__all__ = [
    "ArticleError",
    "ArticleResult",
    "CheckReport",
    "Export",
    "Kernel",
    "PackageAnalysis",
    "PackageMeta",
    "PackageStats",
    "ProofRecord",
    "Theorem",
    "analyze_corpus",
    "build_index",
    "dependency_graph",
    "documents_from_analyses",
    "emit_article",
    "emit_module",
    "export_site",
    "load_corpus",
    "load_site",
    "parse_module",
    "prelude_module",
    "read_article_text",
    "replay",
    "search",
    "translate_package",
    "typecheck",
]
