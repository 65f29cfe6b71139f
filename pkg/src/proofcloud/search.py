"""Full-text index over proof and package records.

Self-hosted replacement for a hosted search engine: deterministic
tokenization, tf-idf scoring with title/body field weights, and stable
tie-breaking so identical corpora always rank identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

TITLE_WEIGHT = 3
BODY_WEIGHT = 1


class DuplicateDocId(Exception):
    pass


@dataclass(frozen=True)
class SearchDocument:
    doc_id: str
    kind: str  # "proof" or "package"
    title: str
    body: str
    classical: Optional[bool] = None
    package: str = ""


@dataclass(frozen=True)
class Posting:
    doc_id: str
    tf_title: int
    tf_body: int


@dataclass
class InvertedIndex:
    postings: dict  # token -> tuple of Postings sorted by doc_id
    doc_count: int
    doc_lengths: dict  # doc_id -> token count over both fields
    documents: dict  # doc_id -> SearchDocument


def tokenize(text: str) -> list:
    """Lowercased alphanumeric runs; any other non-space character stands
    alone, so symbols like `=` or `\\` stay searchable."""
    out = []
    word = []
    for ch in text:
        if ch.isascii() and ch.isalnum():
            word.append(ch.lower())
            continue
        if word:
            out.append("".join(word))
            word = []
        if not ch.isspace():
            out.append(ch.lower())
    if word:
        out.append("".join(word))
    return out


def build_index(docs: Iterable[SearchDocument]) -> InvertedIndex:
    documents: dict = {}
    counts: dict = {}  # token -> {doc_id: [tf_title, tf_body]}
    lengths: dict = {}
    for doc in docs:
        if doc.doc_id in documents:
            raise DuplicateDocId(doc.doc_id)
        documents[doc.doc_id] = doc
        title_toks = tokenize(doc.title)
        body_toks = tokenize(doc.body)
        lengths[doc.doc_id] = len(title_toks) + len(body_toks)
        for tok in title_toks:
            counts.setdefault(tok, {}).setdefault(doc.doc_id, [0, 0])[0] += 1
        for tok in body_toks:
            counts.setdefault(tok, {}).setdefault(doc.doc_id, [0, 0])[1] += 1
    postings = {
        tok: tuple(Posting(doc_id, tf[0], tf[1])
                   for doc_id, tf in sorted(by_doc.items()))
        for tok, by_doc in sorted(counts.items())
    }
    return InvertedIndex(postings=postings, doc_count=len(documents),
                         doc_lengths=lengths, documents=documents)


def idf(index: InvertedIndex, token: str) -> float:
    posted = index.postings.get(token)
    if not posted:
        return 0.0
    return 1.0 + math.log(index.doc_count / len(posted))


def score_document(index: InvertedIndex, doc_id: str,
                   query_tokens: Sequence[str]) -> float:
    """Brute-force scorer for one document; search() must agree with it."""
    total = 0.0
    for tok in sorted(set(query_tokens)):
        for p in index.postings.get(tok, ()):
            if p.doc_id == doc_id:
                total += (TITLE_WEIGHT * p.tf_title
                          + BODY_WEIGHT * p.tf_body) * idf(index, tok)
    return total


def search(index: InvertedIndex, query: str, k: int) -> list:
    """Top-k (doc_id, score) by weighted tf-idf; ties ascend by doc_id."""
    if k < 1:
        raise ValueError("k must be at least 1")
    tokens = sorted(set(tokenize(query)))
    if not tokens:
        return []
    scores: dict = {}
    for tok in tokens:
        posted = index.postings.get(tok)
        if not posted:
            continue
        w = idf(index, tok)
        for p in posted:
            gain = (TITLE_WEIGHT * p.tf_title + BODY_WEIGHT * p.tf_body) * w
            scores[p.doc_id] = scores.get(p.doc_id, 0.0) + gain
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def documents_from_analyses(analyses: Mapping) -> list:
    """One document per proof and one per package, in stable order."""
    docs = []
    for pkg in sorted(analyses):
        analysis = analyses[pkg]
        stats = analysis.stats
        body = " ".join([stats.comments]
                        + [r.name for r in analysis.records])
        docs.append(SearchDocument(
            doc_id=f"package/{pkg}",
            kind="package",
            title=pkg,
            body=body,
            classical=None,
            package=pkg))
        for record in analysis.records:
            lemma_names = list(record.constructive_lemmas
                               + record.classical_lemmas)
            docs.append(SearchDocument(
                doc_id=f"proof/{pkg}/{record.name}",
                kind="proof",
                title=record.name,
                body=" ".join([record.conclusion_text, pkg] + lemma_names),
                classical=record.classical,
                package=pkg))
    return docs
